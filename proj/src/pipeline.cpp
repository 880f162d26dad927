#include "mcduct/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "mcduct/errors.hpp"
#include "mcduct/eval.hpp"
#include "mcduct/hashio.hpp"
#include "mcduct/log.hpp"

namespace mcduct {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void merge_known(const nlohmann::json& src, const char* key, const nlohmann::json& defaults,
                 nlohmann::json& out) {
    out[key] = defaults;
    if (src.contains(key)) {
        nlohmann::json merged = defaults;
        merged.update(src.at(key));
        out[key] = merged;
    }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig cfg;  // defaults
    const nlohmann::json base = cfg.to_json();

    static const std::array<std::string, 11> known = {
        "seed", "workers", "n_samples", "split_fractions", "geometry", "grid",
        "mesh", "design_box", "codec", "train", "diagnostics"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            raise_invalid("unknown config key: " + key);
    }

    nlohmann::json eff;
    eff["seed"] = j.value("seed", base.at("seed").get<std::uint64_t>());
    eff["workers"] = j.value("workers", base.at("workers").get<int>());
    eff["n_samples"] = j.value("n_samples", base.at("n_samples").get<int>());
    eff["split_fractions"] = j.contains("split_fractions") ? j.at("split_fractions")
                                                           : base.at("split_fractions");
    merge_known(j, "geometry", base.at("geometry"), eff);
    merge_known(j, "grid", base.at("grid"), eff);
    merge_known(j, "mesh", base.at("mesh"), eff);
    merge_known(j, "design_box", base.at("design_box"), eff);
    merge_known(j, "codec", base.at("codec"), eff);
    merge_known(j, "train", base.at("train"), eff);
    eff["diagnostics"] = j.value("diagnostics", false);

    cfg.seed = eff.at("seed").get<std::uint64_t>();
    cfg.workers = eff.at("workers").get<int>();
    cfg.n_samples = eff.at("n_samples").get<int>();
    eff.at("split_fractions").get_to(cfg.split_fractions);
    eff.at("geometry").get_to(cfg.geometry);
    eff.at("grid").get_to(cfg.grid);
    cfg.mesh.N_rho = eff.at("mesh").at("N_rho").get<int>();
    cfg.mesh.N_z = eff.at("mesh").at("N_z").get<int>();
    eff.at("design_box").get_to(cfg.box);
    cfg.codec.N_tau = eff.at("codec").at("N_tau").get<int>();
    cfg.codec.tau_min = eff.at("codec").at("tau_min").get<double>();
    cfg.codec.tau_max = eff.at("codec").at("tau_max").get<double>();
    cfg.codec.sigma_w = eff.at("codec").at("sigma_w").get<double>();
    cfg.codec.variance_target = eff.at("codec").at("variance_target").get<double>();
    eff.at("train").get_to(cfg.train);
    cfg.diagnostics = eff.at("diagnostics").get<bool>();
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        raise_io("config parse error in " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["workers"] = workers;
    j["n_samples"] = n_samples;
    j["split_fractions"] = split_fractions;
    j["geometry"] = geometry;
    j["grid"] = grid;
    j["mesh"] = {{"N_rho", mesh.N_rho}, {"N_z", mesh.N_z}};
    j["design_box"] = box;
    j["codec"] = {{"N_tau", codec.N_tau},
                  {"tau_min", codec.tau_min},
                  {"tau_max", codec.tau_max},
                  {"sigma_w", codec.sigma_w},
                  {"variance_target", codec.variance_target}};
    j["train"] = train;
    j["diagnostics"] = diagnostics;
    return j;
}

std::uint64_t PipelineConfig::config_hash() const {
    Hasher h;
    h.str(to_json().dump());
    return h.digest();
}

int PipelineConfig::effective_workers() const {
    if (workers > 0) return workers;
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    return hw > 0 ? hw : 1;
}

void append_runlog(const std::filesystem::path& dir, const StageRecord& rec) {
    std::filesystem::create_directories(dir);
    nlohmann::json j{{"stage", rec.stage},
                     {"inputs_hash", rec.inputs_hash},
                     {"outputs_hash", rec.outputs_hash},
                     {"wall_time_s", rec.wall_time_s}};
    std::ofstream out(dir / "runlog.jsonl", std::ios::app);
    if (!out) raise_io("cannot append run log in " + dir.string());
    out << j.dump() << '\n';
}

StageRecord run_generate(const PipelineConfig& cfg, const std::filesystem::path& dir) {
    const auto t0 = Clock::now();
    Hasher in;
    in.u64(cfg.config_hash()).u64(cfg.seed).u64(static_cast<std::uint64_t>(cfg.n_samples));

    const DatasetManifest m =
        generate_dataset(cfg.box, cfg.geometry, cfg.grid, cfg.mesh.N_rho, cfg.mesh.N_z,
                         cfg.n_samples, cfg.seed, cfg.effective_workers(), dir, cfg.diagnostics);

    StageRecord rec{"generate", in.hex(), hash_hex(m.content_hash), seconds_since(t0)};
    append_runlog(dir, rec);
    log_info("generate: " + std::to_string(m.n) + " samples, manifest " + rec.outputs_hash);
    return rec;
}

StageRecord run_split(const PipelineConfig& cfg, const std::filesystem::path& dir) {
    const auto t0 = Clock::now();
    const DatasetManifest before = load_manifest(dir);
    const std::uint64_t split_seed = Rng::derive(cfg.seed, 1);
    Hasher in;
    in.u64(before.content_hash).u64(split_seed);
    for (double f : cfg.split_fractions) in.f64(f);

    split_dataset(dir, cfg.split_fractions, split_seed);
    const DatasetManifest after = load_manifest(dir);

    StageRecord rec{"split", in.hex(), hash_hex(after.split_hash), seconds_since(t0)};
    append_runlog(dir, rec);
    log_info("split: " + std::to_string(after.splits->train.size()) + "/" +
             std::to_string(after.splits->val.size()) + "/" +
             std::to_string(after.splits->test.size()));
    return rec;
}

StageRecord run_fit_codec(const PipelineConfig& cfg, const std::filesystem::path& dir,
                          const std::filesystem::path& codec_path) {
    const auto t0 = Clock::now();
    const DatasetManifest m = load_manifest(dir);
    if (!m.splits) raise_state("fit-codec requires a split dataset");
    const SplitData train = load_split(dir, "train");

    Hasher in;
    in.u64(m.content_hash).u64(m.split_hash).u64(cfg.config_hash());

    std::vector<ShapeFactorization> shapes;
    shapes.reserve(train.params.size());
    for (std::size_t i = 0; i < train.waveforms.size(); ++i) {
        CirWaveform cir{train.params[i], m.grid, train.waveforms[i]};
        shapes.push_back(factorize(cir, cfg.codec.tau_grid()));
    }

    ShapeCodec codec =
        fit_codec(shapes, cfg.codec.tau_grid(), cfg.codec.sigma_w, cfg.codec.variance_target);
    codec.train_index_hash = hash_indices(train.indices);
    codec.manifest_hash = m.content_hash;
    codec.save(codec_path);

    Hasher out;
    const auto bytes = codec.serialize();
    out.bytes(bytes.data(), bytes.size());
    StageRecord rec{"fit-codec", in.hex(), out.hex(), seconds_since(t0)};
    append_runlog(dir, rec);
    log_info("fit-codec: K = " + std::to_string(codec.K) + ", captured variance = " +
             std::to_string(codec.captured_variance));
    return rec;
}

namespace {

Eigen::MatrixXd feature_matrix(const SplitData& split, const FixedGeometry& g,
                               const FeatureStandardizer& s) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(split.params.size()), kFeatureCount);
    for (std::size_t i = 0; i < split.params.size(); ++i)
        X.row(static_cast<Eigen::Index>(i)) =
            standardized_features(split.params[i], g, s).transpose();
    return X;
}

Eigen::MatrixXd target_matrix(const SplitData& split, const TimeGrid& grid,
                              const ShapeCodec& codec) {
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(split.waveforms.size()), codec.target_dim());
    for (std::size_t i = 0; i < split.waveforms.size(); ++i) {
        CirWaveform cir{split.params[i], grid, split.waveforms[i]};
        Y.row(static_cast<Eigen::Index>(i)) = codec.encode(cir).transpose();
    }
    return Y;
}

}  // namespace

StageRecord run_train(const PipelineConfig& cfg, const std::filesystem::path& dir,
                      const std::filesystem::path& codec_path,
                      const std::filesystem::path& model_path) {
    const auto t0 = Clock::now();
    const DatasetManifest m = load_manifest(dir);
    if (!m.splits) raise_state("train requires a split dataset");
    ShapeCodec codec = ShapeCodec::load(codec_path);
    if (codec.manifest_hash != m.content_hash)
        raise_state("train: dataset manifest hash differs from the one fit-codec recorded");

    const SplitData train_split = load_split(dir, "train");
    const SplitData val_split = load_split(dir, "val");
    if (codec.train_index_hash != hash_indices(train_split.indices))
        raise_state("train: codec was fitted on a different training split");

    Hasher in;
    in.u64(m.content_hash).u64(codec.train_index_hash).u64(cfg.config_hash());

    // Feature standardizer is fitted on the training partition only.
    std::vector<std::array<double, kFeatureCount>> train_X;
    train_X.reserve(train_split.params.size());
    for (const auto& p : train_split.params)
        train_X.push_back(assemble(p, derive(p, m.geometry)));
    const FeatureStandardizer standardizer =
        fit_standardizer(train_X, hash_indices(train_split.indices));

    const Eigen::MatrixXd Xtr = feature_matrix(train_split, m.geometry, standardizer);
    const Eigen::MatrixXd Xval = feature_matrix(val_split, m.geometry, standardizer);
    const Eigen::MatrixXd Ytr = target_matrix(train_split, m.grid, codec);
    const Eigen::MatrixXd Yval = target_matrix(val_split, m.grid, codec);

    MlpArchitecture arch;
    arch.sizes = {kFeatureCount, 192, 192, 96, codec.target_dim()};

    TrainConfig tc = cfg.train;
    if (tc.seed == 0) tc.seed = Rng::derive(cfg.seed, 2);

    TrainResult result = train_ensemble(Xtr, Ytr, Xval, Yval, arch, tc, cfg.effective_workers());

    ModelBundle bundle;
    bundle.arch = arch;
    bundle.config = tc;
    bundle.ensemble = std::move(result.ensemble);
    bundle.standardizer = standardizer;
    bundle.codec = codec;
    bundle.manifest_hash = m.content_hash;
    bundle.box = m.box;
    bundle.geometry = m.geometry;
    bundle.grid = m.grid;

    nlohmann::json members = nlohmann::json::array();
    for (const auto& h : result.history) {
        members.push_back({{"best_epoch", h.best_epoch},
                           {"best_val_loss", h.best_val},
                           {"epochs_run", h.epochs.size()}});
    }
    bundle.metrics = {{"members", members},
                      {"n_train", train_split.params.size()},
                      {"n_val", val_split.params.size()},
                      {"K", codec.K},
                      {"optimizer", "adam(beta1=0.9,beta2=0.999,eps=1e-8)"}};
    bundle.save(model_path);

    StageRecord rec{"train", in.hex(), hash_hex(bundle.content_hash()), seconds_since(t0)};
    append_runlog(dir, rec);
    return rec;
}

StageRecord run_eval(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                     const std::filesystem::path& dir, const std::string& split_name,
                     const std::filesystem::path& report_dir) {
    const auto t0 = Clock::now();
    const ModelBundle bundle = ModelBundle::load(model_path);
    const DatasetManifest m = load_manifest(dir);
    if (bundle.manifest_hash != m.content_hash)
        raise_state("eval: model was trained on a different dataset");
    const SplitData split = load_split(dir, split_name);

    Hasher in;
    in.u64(bundle.content_hash()).u64(m.content_hash).str(split_name);

    const EvalReport report = evaluate(bundle, split, cfg.effective_workers());
    write_report(report, report_dir);

    Hasher out;
    for (const auto& row : report.rows) {
        out.u32(static_cast<std::uint32_t>(row.index));
        out.f64_rounded(row.nrmse);
    }
    StageRecord rec{"eval", in.hex(), out.hex(), seconds_since(t0)};
    append_runlog(dir, rec);

    std::ostringstream os;
    os << "eval[" << split_name << "]: n = " << report.rows.size()
       << ", median = " << report.percentile(0.5) << ", p90 = " << report.percentile(0.9);
    log_info(os.str());
    return rec;
}

bool run_predict(const std::filesystem::path& model_path,
                 const std::filesystem::path& params_path, const std::filesystem::path& out_csv,
                 const std::filesystem::path& runlog_dir) {
    const auto t0 = Clock::now();
    const ModelBundle bundle = ModelBundle::load(model_path);
    ChannelParams p;
    try {
        nlohmann::json::parse(read_text_file(params_path)).get_to(p);
    } catch (const nlohmann::json::exception& e) {
        raise_io("params parse error in " + params_path.string() + ": " + e.what());
    }

    const auto prediction = bundle.predict(p);
    std::ostringstream os;
    os << "t,h\n";
    os.precision(12);
    for (int l = 0; l < bundle.grid.N_s; ++l)
        os << bundle.grid.time(l) << ',' << prediction.cir.h[static_cast<std::size_t>(l)] << '\n';
    write_text_file(out_csv, os.str());

    if (prediction.out_of_domain)
        log_error("warning: parameters lie outside the training design box; "
                  "prediction is extrapolated");

    Hasher in, out;
    in.u64(bundle.content_hash());
    for (int f = 0; f < 8; ++f) in.f64_rounded(p.field(f));
    for (double v : prediction.cir.h) out.f64_rounded(v);
    append_runlog(runlog_dir, {"predict", in.hex(), out.hex(), seconds_since(t0)});
    return prediction.out_of_domain;
}

std::string run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    // A fresh run log per pipeline invocation keeps the final hash well defined.
    std::filesystem::remove(dir / "runlog.jsonl");
    write_text_file(dir / "effective_config.json", cfg.to_json().dump(2) + "\n");

    std::vector<StageRecord> records;
    records.push_back(run_generate(cfg, dir));
    records.push_back(run_split(cfg, dir));
    records.push_back(run_fit_codec(cfg, dir, dir / "codec.bundle"));
    records.push_back(run_train(cfg, dir, dir / "codec.bundle", dir / "model.bundle"));
    records.push_back(run_eval(cfg, dir / "model.bundle", dir, "test", dir / "report"));

    Hasher h;
    for (const auto& rec : records) h.str(rec.stage).str(rec.inputs_hash).str(rec.outputs_hash);
    const std::string runlog_hash = h.hex();

    nlohmann::json j{{"stage", "pipeline"}, {"runlog_hash", runlog_hash}};
    std::ofstream out(dir / "runlog.jsonl", std::ios::app);
    out << j.dump() << '\n';
    return runlog_hash;
}

}  // namespace mcduct
