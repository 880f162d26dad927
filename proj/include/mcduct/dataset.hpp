#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mcduct/params.hpp"
#include "mcduct/waveform.hpp"

namespace mcduct {

enum class ScaleKind { uniform, log_uniform };

struct ScaledRange {
    double low = 0.0;
    double high = 1.0;
    ScaleKind scale = ScaleKind::uniform;

    /// Mean of the sampling distribution: midpoint for uniform draws,
    /// (high - low) / ln(high/low) for log-uniform draws.
    double analytic_mean() const;
    double sample(double u01) const;  // maps a uniform [0,1) draw into the range
};

/// Per-parameter sampling ranges, ordered like ChannelParams::field_names().
/// Scales follow the reported per-parameter means: log-uniform for D, k_f,
/// k_r, B_tot; uniform for v_bar, kappa, z_rx, ell_z. Configurable.
struct DesignBox {
    std::array<ScaledRange, 8> ranges;

    static DesignBox defaults();
    void validate() const;
    bool contains(const ChannelParams& p) const;
};

/// I.i.d. draws from the box; the last draw is replaced by a kappa = 0
/// sentinel so the feature log-mask is stable across regenerations.
std::vector<ChannelParams> sample_params(const DesignBox& box, int n, std::uint64_t seed);

struct SampleStatus {
    enum class Kind { ok, zero_cir, failed };
    Kind kind = Kind::ok;
    std::string message;
};

struct SplitIndices {
    std::vector<int> train, val, test;
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    int n = 0;
    DesignBox box;
    FixedGeometry geometry;
    TimeGrid grid;
    int mesh_n_rho = 24;
    int mesh_n_z = 192;
    std::vector<SampleStatus> statuses;
    std::uint64_t content_hash = 0;

    std::optional<SplitIndices> splits;
    std::uint64_t split_seed = 0;
    std::uint64_t split_hash = 0;

    std::vector<int> ok_indices() const;
    int count(SampleStatus::Kind k) const;
};

void to_json(nlohmann::json& j, const DesignBox& box);
void from_json(const nlohmann::json& j, DesignBox& box);
void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

/// Runs the reference solver over n seeded draws (parallel across workers,
/// deterministic output order) and writes manifest.json + waveforms.bin under
/// out_dir. Failed solves are recorded, not dropped; more than 1% failures
/// aborts. Optional per-sample budget CSVs go to out_dir/diag/.
DatasetManifest generate_dataset(const DesignBox& box, const FixedGeometry& g,
                                 const TimeGrid& grid, int mesh_n_rho, int mesh_n_z, int n,
                                 std::uint64_t seed, int workers,
                                 const std::filesystem::path& out_dir, bool diagnostics = false);

/// Seeded shuffle of the ok samples and contiguous slicing by fractions
/// (remainder to training). Writes train.bin/val.bin/test.bin and the updated
/// manifest. Fractions must sum to 1 within 1e-9; needs >= 10 ok samples.
SplitIndices split_dataset(const std::filesystem::path& dir,
                           const std::array<double, 3>& fractions, std::uint64_t seed);

DatasetManifest load_manifest(const std::filesystem::path& dir);
void save_manifest(const std::filesystem::path& dir, const DatasetManifest& m);

/// Full store: params + waveform per sample, aligned with manifest statuses.
/// Failed samples hold NaN rows.
struct Dataset {
    DatasetManifest manifest;
    std::vector<ChannelParams> params;
    std::vector<std::vector<double>> waveforms;
};
Dataset load_dataset(const std::filesystem::path& dir);

struct SplitData {
    std::string name;
    std::vector<int> indices;  // dataset indices in split order
    std::vector<ChannelParams> params;
    std::vector<std::vector<double>> waveforms;
};
SplitData load_split(const std::filesystem::path& dir, const std::string& name);

std::uint64_t hash_indices(const std::vector<int>& idx);

}  // namespace mcduct
