#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dac/config.hpp"
#include "dac/dataset.hpp"

using namespace dac;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code;
};

CmdResult run_cli(const std::string& args) {
    std::string cmd = std::string(DAC_CLI_BIN) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return {WEXITSTATUS(rc)};
}

fs::path work_dir() {
    fs::path p = fs::temp_directory_path() / "dac_cli_test";
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing: defaults, comments, errors, round trip") {
    RunConfig def = parse_config_text("");
    CHECK(def.adapt.tau_c == 0.95);
    CHECK(def.adapt.K == 5);
    CHECK(def.adapt.m == 0.2);
    CHECK(def.adapt.tau == 0.05);

    RunConfig cfg = parse_config_text(
        "# comment line\n"
        "tau_c = 0.9\n"
        "epochs=12   # trailing comment\n"
        "scheme=scheme_t\n"
        "mmd_kind=lmmd\n"
        "\n");
    CHECK(cfg.adapt.tau_c == 0.9);
    CHECK(cfg.adapt.epochs == 12);
    CHECK(cfg.adapt.scheme == Scheme::SchemeT);
    CHECK(cfg.adapt.mmd_kind == MmdKind::Lmmd);

    CHECK_THROWS_WITH_AS(parse_config_text("nope=1\n"), doctest::Contains("line 1"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("tau_c=0.9\ntau_c=0.8\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("epochs=abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("tau_c\n"), ConfigError);

    // serialized form reparses to the identical configuration
    cfg.adapt.lr0 = 0.0123456789012345;
    std::string text = serialize_config(cfg);
    RunConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.adapt.lr0 == cfg.adapt.lr0);
}

TEST_CASE("cli gen-data writes loadable csv and rejects bad kinds") {
    fs::path dir = work_dir();
    fs::path out = dir / "moons.csv";
    CHECK(run_cli("gen-data --kind moons --n 50 --noise 0.1 --seed 3 --out " + out.string())
              .code == 0);
    Dataset ds = load_csv(out.string());
    CHECK(ds.n() == 50);
    std::ifstream in(out);
    int lines = 0;
    std::string l;
    while (std::getline(in, l)) ++lines;
    CHECK(lines == 51);  // header + rows

    CHECK(run_cli("gen-data --kind prisms --n 50 --out " + (dir / "x.csv").string()).code == 2);
    CHECK(run_cli("gen-data --kind moons --out " + (dir / "x.csv").string()).code == 2);

    CHECK(run_cli("gen-data --kind blobs --n 30 --classes 3 --dim 2 --shift 1,0 --seed 1 --out " +
                  (dir / "blobs.csv").string())
              .code == 0);
    CHECK(run_cli("gen-data --kind blobs --n 30 --dim 2 --shift 1,0,0 --seed 1 --out " +
                  (dir / "b2.csv").string())
              .code == 2);
}

TEST_CASE("cli end-to-end pipeline") {
    fs::path dir = work_dir();
    fs::path src = dir / "src.csv", tgt = dir / "tgt.csv", model = dir / "model.txt";
    fs::path cfgp = dir / "cfg.txt";
    {
        std::ofstream c(cfgp);
        c << "epochs=2\nwarmup_epochs=1\nbatch_size=32\nsource_epochs=15\n"
          << "hidden=16\nbottleneck=8\nsource_acc_floor=0.5\nseed=1\ndump_features=1\n";
    }
    REQUIRE(run_cli("gen-data --kind moons --n 200 --noise 0.1 --seed 0 --out " + src.string())
                .code == 0);
    REQUIRE(run_cli("gen-data --kind moons --n 200 --noise 0.1 --rotation 30 --seed 5 "
                    "--domain target --out " +
                    tgt.string())
                .code == 0);
    REQUIRE(run_cli("train-source --config " + cfgp.string() + " --data " + src.string() +
                    " --out " + model.string())
                .code == 0);

    fs::path outdir = dir / "run";
    fs::remove_all(outdir);
    REQUIRE(run_cli("adapt --config " + cfgp.string() + " --source-model " + model.string() +
                    " --target " + tgt.string() + " --outdir " + outdir.string())
                .code == 0);
    CHECK(fs::exists(outdir / "metrics.csv"));
    CHECK(fs::exists(outdir / "model.txt"));
    CHECK(fs::exists(outdir / "resolved-config.txt"));
    CHECK(fs::exists(outdir / "features_epoch1.csv"));

    // resolved config reparses to the same configuration
    RunConfig cfg = parse_config_file(cfgp.string());
    CHECK(slurp(outdir / "resolved-config.txt") == serialize_config(cfg));

    // determinism: the same config twice gives byte-identical metrics
    fs::path outdir2 = dir / "run2";
    fs::remove_all(outdir2);
    REQUIRE(run_cli("adapt --config " + cfgp.string() + " --source-model " + model.string() +
                    " --target " + tgt.string() + " --outdir " + outdir2.string())
                .code == 0);
    CHECK(slurp(outdir / "metrics.csv") == slurp(outdir2 / "metrics.csv"));

    REQUIRE(run_cli("analyze --config " + cfgp.string() + " --model " +
                    (outdir / "model.txt").string() + " --data " + tgt.string() +
                    " --outdir " + outdir.string())
                .code == 0);
    CHECK(fs::exists(outdir / "bound-report.csv"));
    CHECK(slurp(outdir / "bound-report.csv").find("tau_claim,") != std::string::npos);
}

TEST_CASE("cli adapt with zero epochs reproduces the source model file") {
    fs::path dir = work_dir();
    fs::path src = dir / "s0.csv", model = dir / "m0.txt", cfgp = dir / "c0.txt";
    {
        std::ofstream c(cfgp);
        c << "epochs=0\nsource_epochs=15\nhidden=16\nbottleneck=8\nsource_acc_floor=0.5\n";
    }
    REQUIRE(run_cli("gen-data --kind moons --n 120 --noise 0.1 --seed 2 --out " + src.string())
                .code == 0);
    REQUIRE(run_cli("train-source --config " + cfgp.string() + " --data " + src.string() +
                    " --out " + model.string())
                .code == 0);
    fs::path outdir = dir / "zero";
    fs::remove_all(outdir);
    REQUIRE(run_cli("adapt --config " + cfgp.string() + " --source-model " + model.string() +
                    " --target " + src.string() + " --outdir " + outdir.string())
                .code == 0);
    // header-only metrics, identical model bytes
    std::istringstream in(slurp(outdir / "metrics.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
    CHECK(slurp(outdir / "model.txt") == slurp(model));
}

TEST_CASE("cli rejects bad configs with the line number") {
    fs::path dir = work_dir();
    fs::path cfgp = dir / "bad.txt";
    {
        std::ofstream c(cfgp);
        c << "epochs=1\nwat=1\n";
    }
    CHECK(run_cli("adapt --config " + cfgp.string() +
                  " --source-model none.txt --target none.csv --outdir " +
                  (dir / "nope").string())
              .code == 2);
    CHECK(!fs::exists(dir / "nope"));
}
