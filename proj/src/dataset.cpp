#include "mcduct/dataset.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mcduct/errors.hpp"
#include "mcduct/hashio.hpp"
#include "mcduct/log.hpp"
#include "mcduct/rng.hpp"
#include "mcduct/solver.hpp"

namespace mcduct {

namespace {

constexpr char kWaveMagic[8] = {'M', 'C', 'D', 'W', 'A', 'V', 'E', '\0'};
constexpr std::uint32_t kWaveVersion = 1;

const char* scale_name(ScaleKind k) {
    return k == ScaleKind::uniform ? "uniform" : "log-uniform";
}

ScaleKind scale_from_name(const std::string& s) {
    if (s == "uniform") return ScaleKind::uniform;
    if (s == "log-uniform") return ScaleKind::log_uniform;
    raise_invalid("unknown scale kind: " + s);
}

}  // namespace

double ScaledRange::analytic_mean() const {
    if (scale == ScaleKind::uniform) return 0.5 * (low + high);
    return (high - low) / std::log(high / low);
}

double ScaledRange::sample(double u01) const {
    if (scale == ScaleKind::uniform) return low + u01 * (high - low);
    return std::exp(std::log(low) + u01 * (std::log(high) - std::log(low)));
}

DesignBox DesignBox::defaults() {
    DesignBox box;
    box.ranges[0] = {5e-10, 2e-9, ScaleKind::log_uniform};   // D
    box.ranges[1] = {1e-3, 3e-3, ScaleKind::uniform};        // v_bar
    box.ranges[2] = {0.0, 1.0, ScaleKind::uniform};          // kappa
    box.ranges[3] = {1e-6, 5e-6, ScaleKind::log_uniform};    // k_f
    box.ranges[4] = {5e-2, 5e-1, ScaleKind::log_uniform};    // k_r
    box.ranges[5] = {1e15, 1e16, ScaleKind::log_uniform};    // B_tot
    box.ranges[6] = {150e-6, 300e-6, ScaleKind::uniform};    // z_rx
    box.ranges[7] = {10e-6, 40e-6, ScaleKind::uniform};      // ell_z
    return box;
}

void DesignBox::validate() const {
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& r = ranges[i];
        if (!(r.low < r.high))
            raise_invalid("design box: low must be below high for " +
                          ChannelParams::field_names()[i]);
        if (r.scale == ScaleKind::log_uniform && !(r.low > 0.0))
            raise_invalid("design box: log-uniform scale requires positive low for " +
                          ChannelParams::field_names()[i]);
    }
}

bool DesignBox::contains(const ChannelParams& p) const {
    for (int i = 0; i < 8; ++i) {
        const double v = p.field(i);
        if (v < ranges[static_cast<std::size_t>(i)].low ||
            v > ranges[static_cast<std::size_t>(i)].high)
            return false;
    }
    return true;
}

std::vector<ChannelParams> sample_params(const DesignBox& box, int n, std::uint64_t seed) {
    box.validate();
    if (n < 0) raise_invalid("sample count must be nonnegative");
    Rng rng(seed);
    std::vector<ChannelParams> draws;
    draws.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        ChannelParams p;
        for (int f = 0; f < 8; ++f)
            p.set_field(f, box.ranges[static_cast<std::size_t>(f)].sample(rng.next_double()));
        draws.push_back(p);
    }
    if (n > 0) draws.back().kappa = 0.0;  // sentinel keeps the log-mask stable
    return draws;
}

std::vector<int> DatasetManifest::ok_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (statuses[static_cast<std::size_t>(i)].kind == SampleStatus::Kind::ok)
            idx.push_back(i);
    return idx;
}

int DatasetManifest::count(SampleStatus::Kind k) const {
    int c = 0;
    for (const auto& s : statuses) c += s.kind == k ? 1 : 0;
    return c;
}

void to_json(nlohmann::json& j, const DesignBox& box) {
    j = nlohmann::json::object();
    for (std::size_t i = 0; i < box.ranges.size(); ++i) {
        const auto& r = box.ranges[i];
        j[ChannelParams::field_names()[i]] = {
            {"low", r.low}, {"high", r.high}, {"scale", scale_name(r.scale)}};
    }
}

void from_json(const nlohmann::json& j, DesignBox& box) {
    for (std::size_t i = 0; i < box.ranges.size(); ++i) {
        const auto& e = j.at(ChannelParams::field_names()[i]);
        box.ranges[i].low = e.at("low").get<double>();
        box.ranges[i].high = e.at("high").get<double>();
        box.ranges[i].scale = scale_from_name(e.at("scale").get<std::string>());
    }
}

namespace {

const char* status_name(SampleStatus::Kind k) {
    switch (k) {
        case SampleStatus::Kind::ok: return "ok";
        case SampleStatus::Kind::zero_cir: return "zero-CIR";
        case SampleStatus::Kind::failed: return "failed";
    }
    return "ok";
}

SampleStatus::Kind status_from_name(const std::string& s) {
    if (s == "ok") return SampleStatus::Kind::ok;
    if (s == "zero-CIR") return SampleStatus::Kind::zero_cir;
    if (s == "failed") return SampleStatus::Kind::failed;
    raise_invalid("unknown sample status: " + s);
}

}  // namespace

void to_json(nlohmann::json& j, const DatasetManifest& m) {
    nlohmann::json statuses = nlohmann::json::array();
    for (const auto& s : m.statuses) {
        nlohmann::json e{{"status", status_name(s.kind)}};
        if (!s.message.empty()) e["message"] = s.message;
        statuses.push_back(e);
    }
    j = nlohmann::json{{"format", "mcduct-dataset"},
                       {"version", 1},
                       {"seed", m.seed},
                       {"n", m.n},
                       {"design_box", m.box},
                       {"geometry", m.geometry},
                       {"grid", m.grid},
                       {"mesh", {{"N_rho", m.mesh_n_rho}, {"N_z", m.mesh_n_z}}},
                       {"statuses", statuses},
                       {"waveform_file", "waveforms.bin"},
                       {"content_hash", hash_hex(m.content_hash)}};
    if (m.splits) {
        j["splits"] = {{"train", m.splits->train}, {"val", m.splits->val}, {"test", m.splits->test}};
        j["split_seed"] = m.split_seed;
        j["split_hash"] = hash_hex(m.split_hash);
    }
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
    if (j.value("format", "") != "mcduct-dataset") raise_io("not a dataset manifest");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n = j.at("n").get<int>();
    j.at("design_box").get_to(m.box);
    j.at("geometry").get_to(m.geometry);
    j.at("grid").get_to(m.grid);
    m.mesh_n_rho = j.at("mesh").at("N_rho").get<int>();
    m.mesh_n_z = j.at("mesh").at("N_z").get<int>();
    m.statuses.clear();
    for (const auto& e : j.at("statuses")) {
        SampleStatus s;
        s.kind = status_from_name(e.at("status").get<std::string>());
        s.message = e.value("message", "");
        m.statuses.push_back(s);
    }
    m.content_hash = std::stoull(j.at("content_hash").get<std::string>(), nullptr, 16);
    if (j.contains("splits")) {
        SplitIndices sp;
        j.at("splits").at("train").get_to(sp.train);
        j.at("splits").at("val").get_to(sp.val);
        j.at("splits").at("test").get_to(sp.test);
        m.splits = sp;
        m.split_seed = j.at("split_seed").get<std::uint64_t>();
        m.split_hash = std::stoull(j.at("split_hash").get<std::string>(), nullptr, 16);
    }
}

std::uint64_t hash_indices(const std::vector<int>& idx) {
    Hasher h;
    h.u64(idx.size());
    for (int i : idx) h.u64(static_cast<std::uint64_t>(i));
    return h.digest();
}

namespace {

std::uint64_t dataset_content_hash(const DatasetManifest& m,
                                   const std::vector<ChannelParams>& params,
                                   const std::vector<std::vector<double>>& waveforms) {
    Hasher h;
    h.u64(m.seed).u64(static_cast<std::uint64_t>(m.n));
    h.u32(static_cast<std::uint32_t>(m.grid.N_s)).f64(m.grid.t_end);
    for (int i = 0; i < m.n; ++i) {
        const auto& st = m.statuses[static_cast<std::size_t>(i)];
        h.u32(static_cast<std::uint32_t>(i));
        h.u32(static_cast<std::uint32_t>(st.kind));
        if (st.kind == SampleStatus::Kind::failed) continue;
        for (int f = 0; f < 8; ++f) h.f64_rounded(params[static_cast<std::size_t>(i)].field(f));
        for (double v : waveforms[static_cast<std::size_t>(i)]) h.f64_rounded(v);
    }
    return h.digest();
}

void write_waveform_file(const std::filesystem::path& path, const TimeGrid& grid,
                         const std::vector<ChannelParams>& params,
                         const std::vector<std::vector<double>>& waveforms,
                         const std::vector<int>& order) {
    BinaryWriter w;
    w.raw(kWaveMagic, 8);
    w.u32(kWaveVersion);
    w.u32(static_cast<std::uint32_t>(grid.N_s));
    for (int idx : order) {
        const auto& p = params[static_cast<std::size_t>(idx)];
        for (int f = 0; f < 8; ++f) w.f64(p.field(f));
        const auto& h = waveforms[static_cast<std::size_t>(idx)];
        if (h.empty()) {
            for (int l = 0; l < grid.N_s; ++l) w.f64(std::numeric_limits<double>::quiet_NaN());
        } else {
            w.f64_block(h.data(), h.size());
        }
    }
    w.write_file(path);
}

struct WaveFileContent {
    int n_s = 0;
    std::vector<ChannelParams> params;
    std::vector<std::vector<double>> waveforms;
};

WaveFileContent read_waveform_file(const std::filesystem::path& path) {
    BinaryReader r = BinaryReader::from_file(path);
    const auto magic = r.raw(8);
    if (!std::equal(magic.begin(), magic.end(), kWaveMagic))
        raise_io("not a waveform file: " + path.string());
    if (r.u32() != kWaveVersion) raise_io("unsupported waveform file version");
    WaveFileContent out;
    out.n_s = static_cast<int>(r.u32());
    const std::size_t row_bytes = (8 + static_cast<std::size_t>(out.n_s)) * sizeof(double);
    if (r.remaining() % row_bytes != 0) raise_io("truncated waveform file: " + path.string());
    const std::size_t rows = r.remaining() / row_bytes;
    out.params.resize(rows);
    out.waveforms.assign(rows, std::vector<double>(static_cast<std::size_t>(out.n_s)));
    for (std::size_t i = 0; i < rows; ++i) {
        for (int f = 0; f < 8; ++f) out.params[i].set_field(f, r.f64());
        r.f64_block(out.waveforms[i].data(), out.waveforms[i].size());
    }
    return out;
}

}  // namespace

DatasetManifest generate_dataset(const DesignBox& box, const FixedGeometry& g,
                                 const TimeGrid& grid, int mesh_n_rho, int mesh_n_z, int n,
                                 std::uint64_t seed, int workers,
                                 const std::filesystem::path& out_dir, bool diagnostics) {
    box.validate();
    validate_geometry(g);
    validate_grid(grid);
    std::filesystem::create_directories(out_dir);
    if (diagnostics) std::filesystem::create_directories(out_dir / "diag");

    const std::vector<ChannelParams> draws = sample_params(box, n, seed);
    for (const auto& p : draws) validate_params(p, g);
    const Mesh mesh = make_mesh(g, mesh_n_rho, mesh_n_z,
                                box.ranges[7].low /* smallest admissible ell_z */);

    std::vector<std::vector<double>> waveforms(static_cast<std::size_t>(n));
    std::vector<SampleStatus> statuses(static_cast<std::size_t>(n));

    std::atomic<int> next{0};
    auto work = [&]() {
        while (true) {
            const int idx = next.fetch_add(1);
            if (idx >= n) break;
            try {
                std::ostringstream diag;
                DuctSolver solver(draws[static_cast<std::size_t>(idx)], g, mesh);
                CirWaveform cir = solver.solve_cir(grid, diagnostics ? &diag : nullptr);
                if (diagnostics) {
                    std::ostringstream name;
                    name << "sample_" << idx << ".csv";
                    write_text_file(out_dir / "diag" / name.str(), diag.str());
                }
                if (cir.all_zero()) statuses[static_cast<std::size_t>(idx)].kind = SampleStatus::Kind::zero_cir;
                waveforms[static_cast<std::size_t>(idx)] = std::move(cir.h);
            } catch (const std::exception& e) {
                statuses[static_cast<std::size_t>(idx)] = {SampleStatus::Kind::failed, e.what()};
            }
        }
    };

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    if (n_workers > 1 && n > 1) {
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(n_workers, n); ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    } else {
        work();
    }

    DatasetManifest m;
    m.seed = seed;
    m.n = n;
    m.box = box;
    m.geometry = g;
    m.grid = grid;
    m.mesh_n_rho = mesh.N_rho;
    m.mesh_n_z = mesh.N_z;
    m.statuses = std::move(statuses);

    const int failures = m.count(SampleStatus::Kind::failed);
    if (n > 0 && failures * 100 > n) {
        std::ostringstream os;
        os << "generation aborted: " << failures << "/" << n << " solves failed; first error: ";
        for (const auto& s : m.statuses)
            if (s.kind == SampleStatus::Kind::failed) {
                os << s.message;
                break;
            }
        raise_numeric(os.str());
    }
    if (failures > 0)
        log_info("generate: " + std::to_string(failures) + " of " + std::to_string(n) +
                 " solves failed (recorded in manifest)");

    m.content_hash = dataset_content_hash(m, draws, waveforms);

    if (n > 0) {
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        write_waveform_file(out_dir / "waveforms.bin", grid, draws, waveforms, order);
    }
    save_manifest(out_dir, m);
    return m;
}

SplitIndices split_dataset(const std::filesystem::path& dir,
                           const std::array<double, 3>& fractions, std::uint64_t seed) {
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) raise_invalid("split fractions must sum to 1");
    for (double f : fractions)
        if (f < 0.0) raise_invalid("split fractions must be nonnegative");

    Dataset ds = load_dataset(dir);
    DatasetManifest& m = ds.manifest;
    std::vector<int> ok = m.ok_indices();
    if (ok.size() < 10) raise_invalid("split needs at least 10 ok samples");

    Rng rng(seed);
    for (std::size_t i = ok.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(ok[i], ok[j]);
    }

    const auto n_ok = static_cast<int>(ok.size());
    const int n_val = static_cast<int>(std::floor(fractions[1] * n_ok));
    const int n_test = static_cast<int>(std::floor(fractions[2] * n_ok));
    const int n_train = n_ok - n_val - n_test;  // remainder goes to training

    SplitIndices sp;
    sp.train.assign(ok.begin(), ok.begin() + n_train);
    sp.val.assign(ok.begin() + n_train, ok.begin() + n_train + n_val);
    sp.test.assign(ok.begin() + n_train + n_val, ok.end());

    write_waveform_file(dir / "train.bin", m.grid, ds.params, ds.waveforms, sp.train);
    write_waveform_file(dir / "val.bin", m.grid, ds.params, ds.waveforms, sp.val);
    write_waveform_file(dir / "test.bin", m.grid, ds.params, ds.waveforms, sp.test);

    m.splits = sp;
    m.split_seed = seed;
    Hasher h;
    h.u64(hash_indices(sp.train)).u64(hash_indices(sp.val)).u64(hash_indices(sp.test));
    m.split_hash = h.digest();
    save_manifest(dir, m);
    return sp;
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    DatasetManifest m;
    from_json(j, m);
    return m;
}

void save_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    to_json(j, m);
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.manifest = load_manifest(dir);
    if (ds.manifest.n == 0) return ds;
    WaveFileContent content = read_waveform_file(dir / "waveforms.bin");
    if (content.n_s != ds.manifest.grid.N_s ||
        content.params.size() != static_cast<std::size_t>(ds.manifest.n))
        raise_io("waveform store does not match manifest");
    ds.params = std::move(content.params);
    ds.waveforms = std::move(content.waveforms);
    return ds;
}

SplitData load_split(const std::filesystem::path& dir, const std::string& name) {
    const DatasetManifest m = load_manifest(dir);
    if (!m.splits) raise_state("dataset has no splits: run split first");
    const std::vector<int>* idx = nullptr;
    if (name == "train") idx = &m.splits->train;
    else if (name == "val") idx = &m.splits->val;
    else if (name == "test") idx = &m.splits->test;
    else raise_invalid("unknown split name: " + name);

    WaveFileContent content = read_waveform_file(dir / (name + ".bin"));
    if (content.params.size() != idx->size())
        raise_io("split file row count does not match manifest");

    SplitData sd;
    sd.name = name;
    sd.indices = *idx;
    sd.params = std::move(content.params);
    sd.waveforms = std::move(content.waveforms);
    return sd;
}

}  // namespace mcduct
