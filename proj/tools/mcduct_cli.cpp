// mcduct command-line front end. The binary is a thin shell over the C API:
// flags are parsed here, everything else happens inside the shared library.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "mcduct/capi.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void print_machine_error(const std::string& stage, const std::string& message) {
    // Single-line machine-parseable diagnostic.
    std::string msg = message;
    for (char& ch : msg)
        if (ch == '\n' || ch == '"') ch = ' ';
    std::fprintf(stderr, "error: {\"stage\":\"%s\",\"message\":\"%s\"}\n", stage.c_str(),
                 msg.c_str());
}

struct ConfigHandle {
    mcduct_config* ptr = nullptr;
    ~ConfigHandle() { mcduct_config_destroy(ptr); }
};

int load_config(const std::string& path, ConfigHandle& handle, const std::string& stage) {
    const mcduct_status st = path.empty() ? mcduct_config_create(nullptr, &handle.ptr)
                                          : mcduct_config_from_file(path.c_str(), &handle.ptr);
    if (st != MCDUCT_OK) {
        print_machine_error(stage, mcduct_last_error());
        return st == MCDUCT_ERR_INVALID_ARG || st == MCDUCT_ERR_IO ? kExitUsage : kExitRuntime;
    }
    return kExitOk;
}

int status_to_exit(mcduct_status st, const std::string& stage) {
    if (st == MCDUCT_OK) return kExitOk;
    print_machine_error(stage, mcduct_last_error());
    return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mcduct: reactive duct CIR reference solver and neural surrogate"};
    app.require_subcommand(1);

    if (const char* lv = std::getenv("SURROGATE_LOG")) mcduct_set_log_level(lv);

    std::string config_path, out_path, dataset_dir, model_path, params_path, split_name = "test";
    std::uint64_t seed = 0;
    bool seed_set = false, n_set = false, workers_set = false, fractions_set = false;
    int workers = 0, n_samples = 0;
    bool diagnostics = false;
    std::string fractions_str;

    auto add_common = [&](CLI::App* sub, bool with_config = true) {
        if (with_config) sub->add_option("--config", config_path, "pipeline configuration file");
        sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--workers", workers, "worker thread count (0 = hardware)")
            ->each([&](const std::string&) { workers_set = true; });
    };

    CLI::App* generate = app.add_subcommand("generate", "solve seeded parameter draws into a dataset");
    add_common(generate);
    generate->add_option("--out", out_path, "output dataset directory")->required();
    generate->add_option("--n", n_samples, "sample count override")->each([&](const std::string&) {
        n_set = true;
    });
    generate->add_flag("--diag", diagnostics, "write per-sample mass-budget CSVs");

    CLI::App* split = app.add_subcommand("split", "partition a dataset into train/val/test");
    add_common(split);
    split->add_option("--dataset", dataset_dir, "dataset directory")->required();
    split->add_option("--fractions", fractions_str, "comma-separated train,val,test fractions")
        ->each([&](const std::string&) { fractions_set = true; });

    CLI::App* fit_codec = app.add_subcommand("fit-codec", "fit the waveform codec on the training split");
    add_common(fit_codec);
    fit_codec->add_option("--dataset", dataset_dir, "dataset directory")->required();
    fit_codec->add_option("--out", out_path, "codec bundle path (default <dataset>/codec.bundle)");

    CLI::App* train = app.add_subcommand("train", "train the surrogate ensemble");
    add_common(train);
    train->add_option("--dataset", dataset_dir, "dataset directory")->required();
    train->add_option("--codec", model_path, "codec bundle path (default <dataset>/codec.bundle)");
    train->add_option("--out", out_path, "model bundle path")->required();

    CLI::App* predict = app.add_subcommand("predict", "predict one CIR from a params JSON file");
    predict->add_option("--model", model_path, "model bundle")->required();
    predict->add_option("--params", params_path, "channel parameters JSON file")->required();
    predict->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* eval = app.add_subcommand("eval", "evaluate a model on a dataset split");
    add_common(eval);
    eval->add_option("--model", model_path, "model bundle")->required();
    eval->add_option("--dataset", dataset_dir, "dataset directory")->required();
    eval->add_option("--split", split_name, "split name (train|val|test)");
    eval->add_option("--out", out_path, "report directory")->required();

    CLI::App* pipeline = app.add_subcommand("pipeline", "run generate/split/fit-codec/train/eval");
    add_common(pipeline);
    pipeline->add_option("--out", out_path, "pipeline output directory")->required();
    pipeline->add_option("--n", n_samples, "sample count override")->each([&](const std::string&) {
        n_set = true;
    });

    if (argc <= 1) {
        std::fputs(app.help().c_str(), stdout);
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_machine_error("cli", e.what());
        return kExitUsage;
    }

    const std::string stage = app.get_subcommands().front()->get_name();

    // predict needs no config.
    if (stage == "predict") {
        int ood = 0;
        const std::string runlog_dir =
            out_path.find('/') == std::string::npos ? "." : out_path.substr(0, out_path.rfind('/'));
        const mcduct_status st = mcduct_predict_file(model_path.c_str(), params_path.c_str(),
                                                     out_path.c_str(), runlog_dir.c_str(), &ood);
        return status_to_exit(st, stage);
    }

    ConfigHandle cfg;
    if (int rc = load_config(config_path, cfg, stage); rc != kExitOk) return rc;
    if (seed_set) mcduct_config_set_seed(cfg.ptr, seed);
    if (workers_set) mcduct_config_set_workers(cfg.ptr, workers);
    if (n_set) mcduct_config_set_n_samples(cfg.ptr, n_samples);
    if (diagnostics) mcduct_config_set_diagnostics(cfg.ptr, 1);
    if (fractions_set) {
        double f[3] = {0, 0, 0};
        if (std::sscanf(fractions_str.c_str(), "%lf,%lf,%lf", &f[0], &f[1], &f[2]) != 3) {
            print_machine_error(stage, "--fractions wants three comma-separated numbers");
            return kExitUsage;
        }
        mcduct_config_set_split_fractions(cfg.ptr, f[0], f[1], f[2]);
    }

    mcduct_status st = MCDUCT_OK;
    if (stage == "generate") {
        st = mcduct_generate(cfg.ptr, out_path.c_str());
    } else if (stage == "split") {
        st = mcduct_split(cfg.ptr, dataset_dir.c_str());
    } else if (stage == "fit-codec") {
        const std::string codec_path = out_path.empty() ? dataset_dir + "/codec.bundle" : out_path;
        st = mcduct_fit_codec(cfg.ptr, dataset_dir.c_str(), codec_path.c_str());
    } else if (stage == "train") {
        const std::string codec_path =
            model_path.empty() ? dataset_dir + "/codec.bundle" : model_path;
        st = mcduct_train(cfg.ptr, dataset_dir.c_str(), codec_path.c_str(), out_path.c_str());
    } else if (stage == "eval") {
        st = mcduct_eval(cfg.ptr, model_path.c_str(), dataset_dir.c_str(), split_name.c_str(),
                         out_path.c_str());
    } else if (stage == "pipeline") {
        char* hash = nullptr;
        st = mcduct_pipeline(cfg.ptr, out_path.c_str(), &hash);
        if (st == MCDUCT_OK) {
            std::printf("runlog_hash %s\n", hash);
            mcduct_string_free(hash);
        }
    }
    return status_to_exit(st, stage);
}
