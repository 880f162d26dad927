#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mcduct/codec.hpp"
#include "mcduct/dataset.hpp"
#include "mcduct/train.hpp"

namespace mcduct {

struct MeshSettings {
    int N_rho = 24;
    int N_z = 192;
};

struct CodecSettings {
    int N_tau = 241;
    double tau_min = -4.0;
    double tau_max = 8.0;
    double sigma_w = 2.0;
    double variance_target = 0.995;

    TauGrid tau_grid() const { return TauGrid{N_tau, tau_min, tau_max}; }
};

/// One configuration drives every stage. The fully defaulted config is the
/// desk-scale run; the full-scale run is the same file with n_samples raised
/// (see README). Unknown keys are rejected; absent keys keep their defaults.
struct PipelineConfig {
    std::uint64_t seed = 1;
    int workers = 0;  // 0 = hardware concurrency
    int n_samples = 500;
    std::array<double, 3> split_fractions{0.70, 0.15, 0.15};
    FixedGeometry geometry;
    TimeGrid grid;
    MeshSettings mesh;
    DesignBox box = DesignBox::defaults();
    CodecSettings codec;
    TrainConfig train;
    bool diagnostics = false;

    static PipelineConfig defaults() { return {}; }
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    std::uint64_t config_hash() const;
    int effective_workers() const;
};

/// One run-log line. The pipeline hash covers (stage, inputs, outputs) only;
/// wall time is recorded but never hashed.
struct StageRecord {
    std::string stage;
    std::string inputs_hash;
    std::string outputs_hash;
    double wall_time_s = 0.0;
};

void append_runlog(const std::filesystem::path& dir, const StageRecord& rec);

// Stage entry points. Each writes its artifacts under / beside `dir` and
// appends one run-log record there.
StageRecord run_generate(const PipelineConfig& cfg, const std::filesystem::path& dir);
StageRecord run_split(const PipelineConfig& cfg, const std::filesystem::path& dir);
StageRecord run_fit_codec(const PipelineConfig& cfg, const std::filesystem::path& dir,
                          const std::filesystem::path& codec_path);
StageRecord run_train(const PipelineConfig& cfg, const std::filesystem::path& dir,
                      const std::filesystem::path& codec_path,
                      const std::filesystem::path& model_path);
StageRecord run_eval(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                     const std::filesystem::path& dir, const std::string& split_name,
                     const std::filesystem::path& report_dir);
/// Returns true when the parameters fall outside the model's training box.
bool run_predict(const std::filesystem::path& model_path,
                 const std::filesystem::path& params_path, const std::filesystem::path& out_csv,
                 const std::filesystem::path& runlog_dir);

/// generate -> split -> fit-codec -> train -> eval under one directory.
/// Returns the run-log hash (hex) that stage-record triples roll up to.
std::string run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& dir);

}  // namespace mcduct
