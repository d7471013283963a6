#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "evf/config.hpp"

using namespace evf;

namespace {

std::string write_tmp(const std::string& name, const std::string& body) {
    const std::string path = "test_config_" + name + ".cfg";
    std::ofstream out(path);
    out << body;
    return path;
}

struct TmpFile {
    std::string path;
    explicit TmpFile(std::string p) : path(std::move(p)) {}
    ~TmpFile() { std::remove(path.c_str()); }
};

const char* kGood = R"(# full run configuration
[grid]
n = 32
L = 6.283185307179586

[scheme]
tau = 0.0078125
n_steps = 8
mode = minmax
tol_saddle = 3e-9
inner_iters = 20
outer_iters = 6
seed = 11
initial = random

[model_llz]
mu = 1.25

[forcing]
mode = 1 0 0.3 0.0 2.0 0.5
mode = 0 2 0.1 0.2 1.0 0.0

[output]
dir = test_config_out
snapshot_every = 4

[runtime]
threads = 1

[diagnostics]
evi = true
evi_stride = 2
)";

}  // namespace

TEST_CASE("full configuration parses with every section") {
    TmpFile f(write_tmp("good", kGood));
    const RunConfig cfg = parse_config(f.path);
    CHECK(cfg.grid.n == 32);
    CHECK(cfg.scheme.tau == 0.0078125);
    CHECK(cfg.scheme.n_steps == 8);
    CHECK(cfg.scheme.mode == SchemeMode::minmax);
    CHECK(cfg.scheme.seed == 11);
    CHECK(cfg.model == "llz");
    CHECK(cfg.llz.mu == 1.25);
    CHECK(cfg.forcing.size() == 2);
    CHECK(cfg.forcing[1].ky == 2);
    CHECK(cfg.forcing[1].omega == 1.0);
    CHECK(cfg.output_dir == "test_config_out");
    CHECK(cfg.snapshot_every == 4);
    CHECK(cfg.threads == 1);
    CHECK(cfg.evi_stride == 2);
}

TEST_CASE("unknown keys and sections are rejected") {
    TmpFile a(write_tmp("badkey", "[grid]\nn = 16\nbogus = 1\n[model_llz]\nmu = 1\n"));
    CHECK_THROWS_WITH_AS(parse_config(a.path), doctest::Contains("bogus"), ConfigError);
    TmpFile b(write_tmp("badsec", "[grid]\nn = 16\n[nonsense]\nx = 1\n[model_llz]\nmu = 1\n"));
    CHECK_THROWS_WITH_AS(parse_config(b.path), doctest::Contains("nonsense"), ConfigError);
}

TEST_CASE("range validation names the key and the valid range") {
    TmpFile a(write_tmp("beta",
                        "[grid]\nn = 16\n[model_q]\nmu = 1\nalpha = 1\nbeta = 1.5\ndelta = 1\n"));
    CHECK_THROWS_WITH_AS(parse_config(a.path), doctest::Contains("beta must be in (0, 1)"),
                         ConfigError);
    TmpFile b(write_tmp("gridn", "[grid]\nn = 17\n[model_llz]\nmu = 1\n"));
    CHECK_THROWS_WITH_AS(parse_config(b.path), doctest::Contains("power of two"), ConfigError);
    TmpFile c(write_tmp("tau", "[scheme]\ntau = 0\n[model_llz]\nmu = 1\n"));
    CHECK_THROWS_WITH_AS(parse_config(c.path), doctest::Contains("tau"), ConfigError);
}

TEST_CASE("exactly one model section is required") {
    TmpFile a(write_tmp("nomodel", "[grid]\nn = 16\n"));
    CHECK_THROWS_AS(parse_config(a.path), ConfigError);
    TmpFile b(write_tmp("twomodels", "[model_llz]\nmu = 1\n[model_s]\nmu = 1\nmu_p = 1\n"));
    CHECK_THROWS_AS(parse_config(b.path), ConfigError);
}

TEST_CASE("malformed forcing mode is rejected") {
    TmpFile a(write_tmp("badforce", "[model_llz]\nmu = 1\n[forcing]\nmode = 1 0 0.3\n"));
    CHECK_THROWS_WITH_AS(parse_config(a.path), doctest::Contains("kx ky ax ay omega phase"),
                         ConfigError);
}

TEST_CASE("OUTPUT_DIR is the only environment override") {
    TmpFile f(write_tmp("env", "[model_llz]\nmu = 1\n[output]\ndir = from_file\n"));
    setenv("OUTPUT_DIR", "from_env", 1);
    CHECK(parse_config(f.path).output_dir == "from_env");
    unsetenv("OUTPUT_DIR");
    CHECK(parse_config(f.path).output_dir == "from_file");
}

TEST_CASE("end-to-end run from a config produces the output files") {
    TmpFile f(write_tmp("run", kGood));
    const RunConfig cfg = parse_config(f.path);
    const RunOutputs out = run_from_config(cfg);
    CHECK(out.traj.states.size() == 9);
    CHECK(out.checks_pass);
    std::ifstream e(cfg.output_dir + "/energy.csv");
    CHECK(e.good());
    std::ifstream d(cfg.output_dir + "/diagnostics.csv");
    CHECK(d.good());
    std::ifstream s(cfg.output_dir + "/snapshots/step0_v.fld");
    CHECK(s.good());
}
