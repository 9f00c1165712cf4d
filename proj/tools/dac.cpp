// Command-line front end: dataset generation, source training, adaptation,
// and the bound diagnostics. Exit codes: 0 success, 1 runtime failure,
// 2 argument/config error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dac/analysis.hpp"
#include "dac/config.hpp"
#include "dac/dataset.hpp"
#include "dac/model.hpp"
#include "dac/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct ArgError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_shift(const std::string& s, int d) {
    if (s.empty()) return {};
    std::vector<double> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        size_t pos = 0;
        out.push_back(std::stod(cur, &pos));
        if (pos != cur.size()) throw ArgError("bad --shift component '" + cur + "'");
    }
    if (static_cast<int>(out.size()) != d)
        throw ArgError("--shift needs " + std::to_string(d) + " comma-separated values");
    return out;
}

int cmd_gen_data(const std::string& kind, int n, double noise, double spread,
                 double rotation, const std::string& shift_str, int classes, int dim,
                 uint64_t seed, const std::string& domain, const std::string& out_path) {
    dac::Dataset ds;
    if (kind == "moons") {
        ds = dac::gen_two_moons(n, noise, rotation, seed, domain);
    } else if (kind == "blobs") {
        ds = dac::gen_gauss_blobs(n, classes, dim, parse_shift(shift_str, dim), spread, seed,
                                  domain);
    } else {
        throw ArgError("--kind must be moons or blobs");
    }
    dac::save_csv(ds, out_path);
    std::cout << "wrote " << out_path << " (" << ds.n() << " x " << ds.d() << ")\n";
    return 0;
}

int cmd_train_source(const dac::RunConfig& cfg, const std::string& data_path,
                     const std::string& out_path) {
    dac::Dataset ds = dac::load_csv(data_path);
    dac::ModelParams params = dac::train_source(cfg.source, ds, cfg.adapt.seed);
    dac::save_model(params, out_path);
    dac::EvalResult ev = dac::evaluate(params, ds);
    std::cout << "wrote " << out_path << " (source accuracy " << dac::fmt_g17(ev.accuracy)
              << ")\n";
    return 0;
}

int cmd_adapt(const dac::RunConfig& cfg, const std::string& model_path,
              const std::string& target_path, const std::string& outdir) {
    dac::ModelParams source = dac::load_model(model_path);
    dac::Dataset target = dac::load_csv(target_path);
    if (target.d() != source.dims.d) throw ArgError("target dimension != model input dimension");
    if (target.labeled() && target.C != source.dims.C)
        throw ArgError("target class count != model class count");

    fs::create_directories(outdir);
    {
        std::ofstream out(fs::path(outdir) / "resolved-config.txt");
        out << dac::serialize_config(cfg);
    }

    dac::AdaptResult res = dac::adapt(cfg.adapt, source, target);

    {
        std::ofstream out(fs::path(outdir) / "metrics.csv");
        dac::write_metrics_csv(out, res.history);
    }
    dac::save_model(res.params, (fs::path(outdir) / "model.txt").string());
    if (cfg.dump_features && cfg.adapt.epochs > 0) {
        std::ofstream out(fs::path(outdir) /
                          ("features_epoch" + std::to_string(cfg.adapt.epochs - 1) + ".csv"));
        dac::write_feature_dump(out, res.bank, res.pseudo.labels);
    }
    if (!res.history.empty())
        std::cout << "final target accuracy " << dac::fmt_g17(res.history.back().acc_target)
                  << "\n";
    std::cout << "wrote " << outdir << "\n";
    return 0;
}

int cmd_analyze(const dac::RunConfig& cfg, const std::string& model_path,
                const std::string& data_path, const std::string& outdir) {
    dac::ModelParams params = dac::load_model(model_path);
    dac::Dataset ds = dac::load_csv(data_path);
    if (ds.d() != params.dims.d) throw ArgError("data dimension != model input dimension");

    dac::PseudoLabelState pseudo = dac::update_pseudo_labels(params, ds);
    dac::MemoryBankState bank = dac::init_bank(params, ds, pseudo.labels, cfg.adapt.m,
                                               cfg.adapt.renorm_bank, cfg.adapt.renorm_centroids);
    dac::Mat probs, feats;
    dac::predict_all(params, ds, probs, feats);
    dac::update_division(bank, probs, cfg.adapt.tau_c, pseudo.labels);
    dac::class_centroids(bank);

    dac::BoundReport rep = dac::bound_report(params, ds, bank, pseudo, cfg.adapt.policy,
                                             cfg.n_aug, cfg.n_pairs, cfg.adapt.seed);
    fs::create_directories(outdir);
    std::ofstream out(fs::path(outdir) / "bound-report.csv");
    dac::write_bound_report_csv(out, rep);
    std::cout << "wrote " << (fs::path(outdir) / "bound-report.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Divide-and-contrast source-free domain adaptation, desk scale"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
    std::string kind, shift_str, domain = "source", out_path;
    int n = 1000, classes = 3, dim = 2;
    double noise = 0.1, spread = 0.3, rotation = 0.0;
    uint64_t seed = 0;
    gen->add_option("--kind", kind, "moons|blobs")->required();
    gen->add_option("--n", n, "sample count")->required();
    gen->add_option("--noise", noise, "moons: gaussian noise stddev");
    gen->add_option("--spread", spread, "blobs: cluster stddev");
    gen->add_option("--rotation", rotation, "moons: rotation in degrees");
    gen->add_option("--shift", shift_str, "blobs: comma-separated translation");
    gen->add_option("--classes", classes, "blobs: class count");
    gen->add_option("--dim", dim, "blobs: feature dimension");
    gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--domain", domain, "domain tag for the CSV");
    gen->add_option("--out", out_path, "output CSV path")->required();

    // shared flags
    std::string config_path, model_path, data_path, outdir;

    auto* train = app.add_subcommand("train-source", "train the source model");
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--data", data_path, "labeled source CSV")->required();
    train->add_option("--out", model_path, "output model file")->required();

    auto* adapt_cmd = app.add_subcommand("adapt", "run the adaptation loop");
    adapt_cmd->add_option("--config", config_path, "key=value config file");
    adapt_cmd->add_option("--source-model", model_path, "source model file")->required();
    adapt_cmd->add_option("--target", data_path, "target CSV")->required();
    adapt_cmd->add_option("--outdir", outdir, "output directory")->required();

    auto* analyze = app.add_subcommand("analyze", "compute the bound diagnostics");
    analyze->add_option("--config", config_path, "key=value config file");
    analyze->add_option("--model", model_path, "model file")->required();
    analyze->add_option("--data", data_path, "labeled CSV")->required();
    analyze->add_option("--outdir", outdir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        dac::RunConfig cfg;
        if (!config_path.empty()) cfg = dac::parse_config_file(config_path);

        if (gen->parsed())
            return cmd_gen_data(kind, n, noise, spread, rotation, shift_str, classes, dim,
                                seed, domain, out_path);
        if (train->parsed()) return cmd_train_source(cfg, data_path, model_path);
        if (adapt_cmd->parsed()) return cmd_adapt(cfg, model_path, data_path, outdir);
        if (analyze->parsed()) return cmd_analyze(cfg, model_path, data_path, outdir);
    } catch (const dac::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ArgError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
