#include "mcduct/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "mcduct/errors.hpp"
#include "mcduct/hashio.hpp"
#include "mcduct/log.hpp"

namespace mcduct {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) raise_invalid("learning_rate must be positive");
    if (batch_size < 1) raise_invalid("batch_size must be positive");
    if (max_epochs < 1) raise_invalid("max_epochs must be positive");
    if (weight_decay < 0.0) raise_invalid("weight_decay must be nonnegative");
    if (patience < 1) raise_invalid("patience must be positive");
    if (ensemble < 1) raise_invalid("ensemble size must be at least 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                       {"max_epochs", c.max_epochs},       {"weight_decay", c.weight_decay},
                       {"patience", c.patience},           {"ensemble", c.ensemble},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.patience = j.value("patience", c.patience);
    c.ensemble = j.value("ensemble", c.ensemble);
    c.seed = j.value("seed", c.seed);
}

Eigen::MatrixXd Ensemble::predict(const Eigen::MatrixXd& X) const {
    if (members.empty()) raise_state("empty ensemble");
    Eigen::MatrixXd sum = members.front().forward(X);
    for (std::size_t m = 1; m < members.size(); ++m) sum += members[m].forward(X);
    return sum / static_cast<double>(members.size());
}

Eigen::VectorXd Ensemble::predict_one(const Eigen::VectorXd& x) const {
    return predict(x.transpose()).row(0).transpose();
}

namespace {

struct Adam {
    Eigen::VectorXd m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;

    explicit Adam(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

    void update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        theta -= (lr / bc1) * m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
    }
};

MemberHistory train_member(Mlp& net, const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& Y_train,
                           const Eigen::MatrixXd& X_val, const Eigen::MatrixXd& Y_val,
                           const TrainConfig& cfg, std::uint64_t member_seed) {
    net.init(Rng::derive(member_seed, 1));
    Rng order_rng(Rng::derive(member_seed, 2));
    Rng dropout_rng(Rng::derive(member_seed, 3));

    const auto n = static_cast<int>(X_train.rows());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    Adam adam(net.param_count());
    Eigen::VectorXd theta = net.params();
    Eigen::VectorXd grad(net.param_count());
    Eigen::VectorXd best_theta = theta;

    MemberHistory hist;
    hist.best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(order_rng.next_below(i + 1));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int nb = std::min(cfg.batch_size, n - start);
            Eigen::MatrixXd Xb(nb, X_train.cols());
            Eigen::MatrixXd Yb(nb, Y_train.cols());
            for (int r = 0; r < nb; ++r) {
                Xb.row(r) = X_train.row(order[static_cast<std::size_t>(start + r)]);
                Yb.row(r) = Y_train.row(order[static_cast<std::size_t>(start + r)]);
            }
            net.set_params(theta);
            epoch_loss += net.loss_and_grad(Xb, Yb, cfg.weight_decay, true, &dropout_rng, grad);
            adam.update(theta, grad, cfg.learning_rate);
            ++batches;
        }
        net.set_params(theta);
        const double val_loss = net.loss(X_val, Y_val, 0.0);
        if (!std::isfinite(val_loss)) {
            std::ostringstream os;
            os << "training diverged: non-finite validation loss at epoch " << epoch;
            raise_numeric(os.str());
        }
        hist.epochs.push_back({epoch_loss / batches, val_loss});

        if (val_loss < hist.best_val) {
            hist.best_val = val_loss;
            hist.best_epoch = epoch;
            best_theta = theta;
        } else if (epoch - hist.best_epoch >= cfg.patience) {
            break;
        }
    }
    net.set_params(best_theta);
    return hist;
}

}  // namespace

TrainResult train_ensemble(const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& Y_train,
                           const Eigen::MatrixXd& X_val, const Eigen::MatrixXd& Y_val,
                           const MlpArchitecture& arch, const TrainConfig& config, int workers) {
    config.validate();
    if (X_train.rows() < 2) raise_invalid("training split too small");
    if (X_val.rows() < 1) raise_invalid("validation split is empty");

    TrainResult result;
    result.ensemble.members.assign(static_cast<std::size_t>(config.ensemble), Mlp(arch));
    result.history.resize(static_cast<std::size_t>(config.ensemble));

    auto run_member = [&](int m) {
        const std::uint64_t member_seed = Rng::derive(config.seed, 100 + static_cast<std::uint64_t>(m));
        result.history[static_cast<std::size_t>(m)] =
            train_member(result.ensemble.members[static_cast<std::size_t>(m)], X_train, Y_train,
                         X_val, Y_val, config, member_seed);
    };

    if (workers > 1 && config.ensemble > 1) {
        std::vector<std::future<void>> futs;
        for (int m = 0; m < config.ensemble; ++m)
            futs.push_back(std::async(std::launch::async, run_member, m));
        for (auto& f : futs) f.get();
    } else {
        for (int m = 0; m < config.ensemble; ++m) run_member(m);
    }

    for (int m = 0; m < config.ensemble; ++m) {
        const auto& h = result.history[static_cast<std::size_t>(m)];
        std::ostringstream os;
        os << "member " << m << ": best val loss " << h.best_val << " at epoch " << h.best_epoch
           << " (" << h.epochs.size() << " epochs run)";
        log_info(os.str());
    }
    return result;
}

Eigen::VectorXd standardized_features(const ChannelParams& p, const FixedGeometry& g,
                                      const FeatureStandardizer& s) {
    const auto z = s.transform(assemble(p, derive(p, g)));
    return Eigen::Map<const Eigen::VectorXd>(z.data(), kFeatureCount);
}

ModelBundle::Prediction ModelBundle::predict(const ChannelParams& p) const {
    validate_params(p, geometry);
    Prediction out;
    out.out_of_domain = !box.contains(p);

    const Eigen::VectorXd x = standardized_features(p, geometry, standardizer);
    const Eigen::VectorXd y = ensemble.predict_one(x);
    out.cir = codec.decode(y, grid);
    out.cir.params = p;
    for (double v : out.cir.h)
        if (!std::isfinite(v)) raise_numeric("prediction produced a non-finite waveform");
    return out;
}

namespace {
constexpr char kModelMagic[8] = {'M', 'C', 'D', 'M', 'O', 'D', 'L', '\0'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void ModelBundle::save(const std::filesystem::path& path) const {
    const std::vector<std::uint8_t> codec_bytes = codec.serialize();
    Hasher ch;
    ch.bytes(codec_bytes.data(), codec_bytes.size());

    nlohmann::json sj;
    to_json(sj, standardizer);
    nlohmann::json header{{"sizes", arch.sizes},
                          {"dropout_p", arch.dropout_p},
                          {"ln_eps", arch.ln_eps},
                          {"m", arch.output_dim()},
                          {"K", codec.K},
                          {"E", static_cast<int>(ensemble.members.size())},
                          {"train_config", config},
                          {"metrics", metrics},
                          {"standardizer", sj},
                          {"design_box", box},
                          {"geometry", geometry},
                          {"grid", grid},
                          {"codec_hash", hash_hex(ch.digest())},
                          {"manifest_hash", hash_hex(manifest_hash)}};
    const std::string header_str = header.dump();

    BinaryWriter w;
    w.raw(kModelMagic, 8);
    w.u32(kModelVersion);
    w.u64(header_str.size());
    w.raw(header_str.data(), header_str.size());
    w.u64(codec_bytes.size());
    w.raw(codec_bytes.data(), codec_bytes.size());
    for (const Mlp& member : ensemble.members) {
        w.u64(static_cast<std::uint64_t>(member.param_count()));
        w.f64_block(member.params().data(), static_cast<std::size_t>(member.param_count()));
    }
    w.write_file(path);
}

ModelBundle ModelBundle::load(const std::filesystem::path& path) {
    BinaryReader r = BinaryReader::from_file(path);
    const auto magic = r.raw(8);
    if (!std::equal(magic.begin(), magic.end(), kModelMagic))
        raise_io("not a model bundle: " + path.string());
    if (r.u32() != kModelVersion) raise_io("unsupported model bundle version");

    const std::uint64_t header_len = r.u64();
    const auto header_bytes = r.raw(header_len);
    const nlohmann::json header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());

    ModelBundle b;
    b.arch.sizes = header.at("sizes").get<std::vector<int>>();
    b.arch.dropout_p = header.at("dropout_p").get<double>();
    b.arch.ln_eps = header.at("ln_eps").get<double>();
    header.at("train_config").get_to(b.config);
    b.metrics = header.at("metrics");
    header.at("standardizer").get_to(b.standardizer);
    header.at("design_box").get_to(b.box);
    header.at("geometry").get_to(b.geometry);
    header.at("grid").get_to(b.grid);
    b.manifest_hash = std::stoull(header.at("manifest_hash").get<std::string>(), nullptr, 16);

    const std::uint64_t codec_len = r.u64();
    const auto codec_bytes = r.raw(codec_len);
    b.codec = ShapeCodec::deserialize(codec_bytes);
    Hasher ch;
    ch.bytes(codec_bytes.data(), codec_bytes.size());
    b.codec_hash = ch.digest();
    if (hash_hex(b.codec_hash) != header.at("codec_hash").get<std::string>())
        raise_state("model bundle: embedded codec hash mismatch");

    const int E = header.at("E").get<int>();
    for (int m = 0; m < E; ++m) {
        Mlp net(b.arch);
        const std::uint64_t count = r.u64();
        if (count != static_cast<std::uint64_t>(net.param_count()))
            raise_io("model bundle: member parameter count mismatch");
        Eigen::VectorXd theta(net.param_count());
        r.f64_block(theta.data(), static_cast<std::size_t>(theta.size()));
        net.set_params(theta);
        b.ensemble.members.push_back(std::move(net));
    }
    return b;
}

std::uint64_t ModelBundle::content_hash() const {
    Hasher h;
    for (const Mlp& m : ensemble.members)
        for (Eigen::Index i = 0; i < m.params().size(); ++i) h.f64_rounded(m.params()[i]);
    h.u64(codec_hash).u64(manifest_hash);
    return h.digest();
}

}  // namespace mcduct
