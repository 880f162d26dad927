#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mcduct/codec.hpp"
#include "mcduct/dataset.hpp"
#include "mcduct/features.hpp"
#include "mcduct/mlp.hpp"

namespace mcduct {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int max_epochs = 400;
    double weight_decay = 1e-5;
    int patience = 40;      ///< epochs without validation improvement before stopping
    int ensemble = 5;       ///< independently seeded members, mean-aggregated
    std::uint64_t seed = 0; ///< 0 = derive from the pipeline seed

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochStats {
    double train_loss;  ///< mean full objective over the epoch's minibatches
    double val_loss;    ///< data term on the validation split (no dropout)
};

struct MemberHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val = 0.0;
};

/// E independently initialized networks over identical data; prediction is
/// the elementwise mean of member outputs.
struct Ensemble {
    std::vector<Mlp> members;

    Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd predict_one(const Eigen::VectorXd& x) const;
};

struct TrainResult {
    Ensemble ensemble;
    std::vector<MemberHistory> history;
};

/// Seeded mini-batch Adam with per-epoch validation, best-snapshot keeping and
/// patience-based early stopping. Members may train concurrently; each member
/// is fully determined by its derived seed.
TrainResult train_ensemble(const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& Y_train,
                           const Eigen::MatrixXd& X_val, const Eigen::MatrixXd& Y_val,
                           const MlpArchitecture& arch, const TrainConfig& config,
                           int workers = 1);

/// Everything needed to predict from raw parameters: feature standardizer,
/// codec, ensemble weights, plus provenance hashes and the training design box
/// for out-of-domain warnings.
struct ModelBundle {
    MlpArchitecture arch;
    TrainConfig config;
    Ensemble ensemble;
    FeatureStandardizer standardizer;
    ShapeCodec codec;
    std::uint64_t codec_hash = 0;     ///< content hash of the embedded codec bytes
    std::uint64_t manifest_hash = 0;  ///< dataset the model was fitted on
    DesignBox box;
    FixedGeometry geometry;
    TimeGrid grid;
    nlohmann::json metrics;

    struct Prediction {
        CirWaveform cir;
        bool out_of_domain = false;
    };
    /// features -> standardize -> ensemble mean -> decode. Throws on invalid
    /// parameters; out-of-box parameters only set the warning flag.
    Prediction predict(const ChannelParams& p) const;

    void save(const std::filesystem::path& path) const;
    static ModelBundle load(const std::filesystem::path& path);
    /// Content hash of the serialized bundle.
    std::uint64_t content_hash() const;
};

/// Standardized feature row for one parameter set.
Eigen::VectorXd standardized_features(const ChannelParams& p, const FixedGeometry& g,
                                      const FeatureStandardizer& s);

}  // namespace mcduct
