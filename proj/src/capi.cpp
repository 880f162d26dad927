#include "mcduct/capi.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "mcduct/errors.hpp"
#include "mcduct/log.hpp"
#include "mcduct/pipeline.hpp"
#include "mcduct/solver.hpp"

struct mcduct_config {
    mcduct::PipelineConfig cfg;
};

struct mcduct_model {
    mcduct::ModelBundle bundle;
};

namespace {

thread_local std::string t_last_error = "no error";

mcduct_status set_error(const std::exception& e) {
    t_last_error = e.what();
    if (const auto* err = dynamic_cast<const mcduct::error*>(&e)) {
        switch (err->code()) {
            case mcduct::errc::invalid_argument: return MCDUCT_ERR_INVALID_ARG;
            case mcduct::errc::io: return MCDUCT_ERR_IO;
            case mcduct::errc::numeric: return MCDUCT_ERR_NUMERIC;
            case mcduct::errc::state: return MCDUCT_ERR_STATE;
        }
    }
    return MCDUCT_ERR_NUMERIC;
}

template <typename Fn>
mcduct_status guarded(Fn&& fn) {
    try {
        fn();
        return MCDUCT_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    } catch (...) {
        t_last_error = "unknown error";
        return MCDUCT_ERR_NUMERIC;
    }
}

mcduct_status require(bool cond, const char* msg) {
    if (cond) return MCDUCT_OK;
    t_last_error = msg;
    return MCDUCT_ERR_INVALID_ARG;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

mcduct::ChannelParams params_from_array(const double p[8]) {
    mcduct::ChannelParams out;
    for (int f = 0; f < 8; ++f) out.set_field(f, p[f]);
    return out;
}

}  // namespace

extern "C" {

const char* mcduct_last_error(void) { return t_last_error.c_str(); }

void mcduct_string_free(char* s) { std::free(s); }

mcduct_status mcduct_set_log_level(const char* level) {
    if (require(level != nullptr, "level is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    if (!mcduct::set_log_level(std::string(level))) {
        t_last_error = "unknown log level (want error|info|debug)";
        return MCDUCT_ERR_INVALID_ARG;
    }
    return MCDUCT_OK;
}

mcduct_status mcduct_config_create(const char* json, mcduct_config** out) {
    if (require(out != nullptr, "out is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] {
        const std::string text = json == nullptr ? "{}" : json;
        auto* handle = new mcduct_config{
            mcduct::PipelineConfig::from_json(nlohmann::json::parse(text))};
        *out = handle;
    });
}

mcduct_status mcduct_config_from_file(const char* path, mcduct_config** out) {
    if (require(path != nullptr && out != nullptr, "path/out is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { *out = new mcduct_config{mcduct::PipelineConfig::from_file(path)}; });
}

void mcduct_config_destroy(mcduct_config* cfg) { delete cfg; }

mcduct_status mcduct_config_to_json(const mcduct_config* cfg, char** out_json) {
    if (require(cfg != nullptr && out_json != nullptr, "cfg/out is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { *out_json = dup_string(cfg->cfg.to_json().dump(2)); });
}

mcduct_status mcduct_config_set_seed(mcduct_config* cfg, uint64_t seed) {
    if (require(cfg != nullptr, "cfg is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    cfg->cfg.seed = seed;
    return MCDUCT_OK;
}

mcduct_status mcduct_config_set_workers(mcduct_config* cfg, int workers) {
    if (require(cfg != nullptr, "cfg is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    if (require(workers >= 0, "workers must be nonnegative") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    cfg->cfg.workers = workers;
    return MCDUCT_OK;
}

mcduct_status mcduct_config_set_n_samples(mcduct_config* cfg, int n) {
    if (require(cfg != nullptr, "cfg is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    if (require(n >= 0, "n must be nonnegative") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    cfg->cfg.n_samples = n;
    return MCDUCT_OK;
}

mcduct_status mcduct_config_set_diagnostics(mcduct_config* cfg, int enabled) {
    if (require(cfg != nullptr, "cfg is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    cfg->cfg.diagnostics = enabled != 0;
    return MCDUCT_OK;
}

mcduct_status mcduct_config_set_split_fractions(mcduct_config* cfg, double f_train, double f_val,
                                                double f_test) {
    if (require(cfg != nullptr, "cfg is null") != MCDUCT_OK) return MCDUCT_ERR_INVALID_ARG;
    cfg->cfg.split_fractions = {f_train, f_val, f_test};
    return MCDUCT_OK;
}

mcduct_status mcduct_generate(const mcduct_config* cfg, const char* out_dir) {
    if (require(cfg != nullptr && out_dir != nullptr, "cfg/out_dir is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { mcduct::run_generate(cfg->cfg, out_dir); });
}

mcduct_status mcduct_split(const mcduct_config* cfg, const char* dataset_dir) {
    if (require(cfg != nullptr && dataset_dir != nullptr, "cfg/dir is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { mcduct::run_split(cfg->cfg, dataset_dir); });
}

mcduct_status mcduct_fit_codec(const mcduct_config* cfg, const char* dataset_dir,
                               const char* codec_path) {
    if (require(cfg != nullptr && dataset_dir != nullptr && codec_path != nullptr,
                "argument is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { mcduct::run_fit_codec(cfg->cfg, dataset_dir, codec_path); });
}

mcduct_status mcduct_train(const mcduct_config* cfg, const char* dataset_dir,
                           const char* codec_path, const char* model_path) {
    if (require(cfg != nullptr && dataset_dir != nullptr && codec_path != nullptr &&
                    model_path != nullptr,
                "argument is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { mcduct::run_train(cfg->cfg, dataset_dir, codec_path, model_path); });
}

mcduct_status mcduct_eval(const mcduct_config* cfg, const char* model_path,
                          const char* dataset_dir, const char* split_name,
                          const char* report_dir) {
    if (require(cfg != nullptr && model_path != nullptr && dataset_dir != nullptr &&
                    split_name != nullptr && report_dir != nullptr,
                "argument is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded(
        [&] { mcduct::run_eval(cfg->cfg, model_path, dataset_dir, split_name, report_dir); });
}

mcduct_status mcduct_pipeline(const mcduct_config* cfg, const char* out_dir,
                              char** out_runlog_hash) {
    if (require(cfg != nullptr && out_dir != nullptr, "cfg/out_dir is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] {
        const std::string hash = mcduct::run_pipeline(cfg->cfg, out_dir);
        if (out_runlog_hash != nullptr) *out_runlog_hash = dup_string(hash);
    });
}

mcduct_status mcduct_predict_file(const char* model_path, const char* params_json_path,
                                  const char* out_csv, const char* runlog_dir,
                                  int* out_of_domain) {
    if (require(model_path != nullptr && params_json_path != nullptr && out_csv != nullptr &&
                    runlog_dir != nullptr,
                "argument is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] {
        const bool ood = mcduct::run_predict(model_path, params_json_path, out_csv, runlog_dir);
        if (out_of_domain != nullptr) *out_of_domain = ood ? 1 : 0;
    });
}

mcduct_status mcduct_model_load(const char* path, mcduct_model** out) {
    if (require(path != nullptr && out != nullptr, "path/out is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] { *out = new mcduct_model{mcduct::ModelBundle::load(path)}; });
}

void mcduct_model_destroy(mcduct_model* model) { delete model; }

size_t mcduct_model_output_len(const mcduct_model* model) {
    return model == nullptr ? 0 : static_cast<size_t>(model->bundle.grid.N_s);
}

mcduct_status mcduct_model_predict(const mcduct_model* model, const double params[8],
                                   double* h_out, size_t h_len, int* out_of_domain) {
    if (require(model != nullptr && params != nullptr && h_out != nullptr,
                "argument is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    if (require(h_len >= static_cast<size_t>(model->bundle.grid.N_s),
                "h_out buffer too small") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] {
        const auto prediction = model->bundle.predict(params_from_array(params));
        std::memcpy(h_out, prediction.cir.h.data(), prediction.cir.h.size() * sizeof(double));
        if (out_of_domain != nullptr) *out_of_domain = prediction.out_of_domain ? 1 : 0;
    });
}

mcduct_status mcduct_solve_cir(const mcduct_config* cfg, const double params[8], double* h_out,
                               size_t h_len, size_t* n_s_out) {
    if (require(cfg != nullptr && params != nullptr, "cfg/params is null") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    const auto n_s = static_cast<size_t>(cfg->cfg.grid.N_s);
    if (n_s_out != nullptr) *n_s_out = n_s;
    if (h_out == nullptr) return MCDUCT_OK;
    if (require(h_len >= n_s, "h_out buffer too small") != MCDUCT_OK)
        return MCDUCT_ERR_INVALID_ARG;
    return guarded([&] {
        const auto& c = cfg->cfg;
        const mcduct::Mesh mesh =
            mcduct::make_mesh(c.geometry, c.mesh.N_rho, c.mesh.N_z, c.box.ranges[7].low);
        const mcduct::CirWaveform cir =
            mcduct::solve_cir(params_from_array(params), c.geometry, c.grid, mesh);
        std::memcpy(h_out, cir.h.data(), cir.h.size() * sizeof(double));
    });
}

}  // extern "C"
