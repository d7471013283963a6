// Batch front end: `run` executes a configured trajectory plus diagnostics,
// `check` runs the standalone structural checkers, `compare` evaluates the
// weak-strong relative-energy envelope between two runs.
//
// Exit codes: 0 success, 1 check failure, 2 configuration error,
// 3 numerical failure.
#include <cstdarg>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evf/config.hpp"

namespace {

using namespace evf;

bool g_quiet = false;

void say(const char* fmt, ...) {
    if (g_quiet) return;
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stdout, fmt, args);
    va_end(args);
}

void print_records(const std::vector<CheckRecord>& recs) {
    say("%-28s %-10s %14s %12s  %s\n", "check", "model", "residual", "tolerance", "result");
    for (const CheckRecord& r : recs)
        say("%-28s %-10s %14.4e %12.2e  %s\n", r.check.c_str(), r.model.c_str(), r.residual,
            r.tolerance, r.pass ? "pass" : "FAIL");
}

bool all_pass(const std::vector<CheckRecord>& recs) {
    for (const CheckRecord& r : recs)
        if (!r.pass) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Standalone checkers shared by `check`.

std::unique_ptr<Model> model_by_name(const Grid& g, const std::string& name) {
    if (name == "model_q") return std::make_unique<ModelQ>(g, ParamsQ{1.0, 1.0, 0.5, 0.3});
    if (name == "model_s") return std::make_unique<ModelS>(g, ParamsS{1.0, 1.0, 2.0});
    if (name == "model_llz") return std::make_unique<ModelLLZ>(g, ParamsLLZ{1.0});
    throw ConfigError("check: unknown model '" + name + "'");
}

Sym2 random_sym2(SplitMix64& rng, double scale) {
    Sym2 s;
    for (double& p : s.p) p = scale * rng.normal();
    return s;
}
Sym3 random_sym3(SplitMix64& rng, double scale) {
    Sym3 s;
    for (double& p : s.p) p = scale * rng.normal();
    return s;
}

CheckRecord check_fenchel(const Model& m, const std::string& name, int trials,
                          std::uint64_t seed) {
    double worst = 0;
    for (int t = 0; t < trials; ++t) {
        const State s = random_admissible_state(m, seed + 101 * t);
        worst = std::max(worst, fenchel_roundtrip_error(m, s));
        worst = std::max(worst, fenchel_young_gap(m, s));
    }
    return {"fenchel", name, worst, 1e-9, worst <= 1e-9};
}

CheckRecord check_roots(int trials, std::uint64_t seed) {
    SplitMix64 rng(seed);
    double worst = 0;
    for (int t = 0; t < trials; ++t) {
        const double beta = 0.05 + 0.9 * rng.uniform();
        {
            const Sym2 sig = random_sym2(rng, 1.5);
            const Sym2 b = b_of_sigma(sig, beta);
            const Sym2 shifted = sig - (1.0 - 2.0 * beta) * Sym2::identity();
            const Sym2 res = beta * square(b) - sym_part(mul_ss(shifted, b)) -
                             (1.0 - beta) * Sym2::identity();
            const Sym2 f = f_of_sigma(sig);
            const Sym2 resf = square(f) - sym_part(mul_ss(sig, f)) - Sym2::identity();
            for (double p : res.p) worst = std::max(worst, std::abs(p));
            for (double p : resf.p) worst = std::max(worst, std::abs(p));
        }
        {
            const Sym3 sig = random_sym3(rng, 1.5);
            const Sym3 b = b_of_sigma(sig, beta);
            const Sym3 shifted = sig - (1.0 - 2.0 * beta) * Sym3::identity();
            const Sym3 res = beta * square(b) - sym_part(mul_ss(shifted, b)) -
                             (1.0 - beta) * Sym3::identity();
            const Sym3 f = f_of_sigma(sig);
            const Sym3 resf = square(f) - sym_part(mul_ss(sig, f)) - Sym3::identity();
            for (double p : res.p) worst = std::max(worst, std::abs(p));
            for (double p : resf.p) worst = std::max(worst, std::abs(p));
        }
    }
    return {"root_maps", "-", worst, 1e-11, worst <= 1e-11};
}

TestFunction random_test_function(const Grid& g, std::uint64_t seed, int k_max, double scale) {
    TestFunction tf;
    tf.phi = leray_project(random_vector_field(g, seed * 5 + 1, k_max, scale));
    tf.sigma = random_sym_field(g, seed * 5 + 2, k_max, scale);
    return tf;
}

std::vector<CheckRecord> check_adiss_refine(const std::string& name,
                                            const std::vector<int>& sizes, std::uint64_t seed) {
    std::vector<CheckRecord> out;
    double prev = std::numeric_limits<double>::infinity();
    for (int n : sizes) {
        const Grid g({n, 6.283185307179586476925286766559});
        std::unique_ptr<Model> m = model_by_name(g, name);
        double worst = 0;
        for (int t = 0; t < 8; ++t)
            worst = std::max(worst,
                             check_adiss(*m, 0.0, random_test_function(g, seed + 31 * t, 2, 0.3)));
        const bool pass = worst <= 1e-8 && worst <= prev + 1e-15;
        out.push_back({"adiss_n" + std::to_string(n), name, worst, 1e-8, pass});
        prev = worst;
    }
    return out;
}

CheckRecord check_convexity_cmd(const Model& m, const std::string& name, int trials,
                                std::uint64_t seed) {
    const TestFunction tf = random_test_function(m.grid(), seed + 7, 2, 0.3);
    const double worst = check_convexity(m, 0.0, tf, trials, seed);
    return {"convexity", name, worst, 1e-9, worst <= 1e-9};
}

CheckRecord check_peterlin() {
    const PeterlinWitness w = peterlin_nonconvexity_witness();
    bool sweep = true;
    for (double eta : {0.0, 10.0}) sweep = sweep && peterlin_form(w.b, w.g, eta) < 0.0;
    return {"peterlin_witness", "-", w.value, -17.0, w.value < -17.0 && sweep};
}

CheckRecord check_angular(int trials, std::uint64_t seed) {
    SplitMix64 rng(seed);
    double worst = 0;
    for (int t = 0; t < trials; ++t) {
        const double a = 2.0 * rng.normal(), b = 2.0 * rng.normal();
        {
            Sym2 s = random_sym2(rng, 0.8);
            s = s + (2.0 + neg_part_magnitude(s)) * Sym2::identity();  // keep tr S away from 0
            Mat2 l;
            for (double& x : l.a) x = rng.normal();
            const Mat2 w = angular_velocity_w(s, l, a, b);
            const Mat2 h = angular_rhs_h(s, l, a, b);
            const Mat2 res = matmul(s.full(), w) + matmul(w, s.full()) - h;
            for (double x : res.a) worst = std::max(worst, std::abs(x));
            worst = std::max(worst, std::abs(w(0, 0)));
            worst = std::max(worst, std::abs(w(0, 1) + w(1, 0)));
        }
        {
            Sym3 s = random_sym3(rng, 0.8);
            s = s + (2.0 + neg_part_magnitude(s)) * Sym3::identity();
            Mat3 l;
            for (double& x : l.a) x = rng.normal();
            const Mat3 w = angular_velocity_w(s, l, a, b);
            const Mat3 h = angular_rhs_h(s, l, a, b);
            const Mat3 res = matmul(s.full(), w) + matmul(w, s.full()) - h;
            for (double x : res.a) worst = std::max(worst, std::abs(x));
        }
    }
    return {"angular_velocity", "-", worst, 1e-10, worst <= 1e-10};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-variational viscoelastic solver"};
    app.require_subcommand(1);

    std::string config_path, config_b_path, csv_path;
    int threads = 0;
    app.add_flag("--quiet", g_quiet, "suppress console output");
    app.add_option("--threads", threads, "worker threads (validated; execution is sequential)");

    CLI::App* run = app.add_subcommand("run", "execute a configured trajectory + diagnostics");
    run->add_option("--config", config_path, "run configuration file")->required();

    CLI::App* check = app.add_subcommand("check", "run standalone structural checkers");
    std::string target, check_name = "all";
    int trials = 200;
    std::uint64_t seed = 1;
    std::vector<int> refine{16, 32, 64};
    check->add_option("target", target,
                      "model_q | model_s | model_llz | roots | peterlin | angular")
        ->required();
    check->add_option("name", check_name, "fenchel | adiss | convexity | all");
    check->add_option("--trials", trials, "random trials per checker");
    check->add_option("--seed", seed, "RNG seed");
    check->add_option("--refine", refine, "grid sizes for the operator-identity refinement");
    check->add_option("--csv", csv_path, "write machine-readable results to this CSV");

    CLI::App* compare =
        app.add_subcommand("compare", "relative-energy envelope between two runs");
    compare->add_option("--config-a", config_path, "generalized-solution run (minmax)")
        ->required();
    compare->add_option("--config-b", config_b_path, "comparison run (baseline, quasi-strong)")
        ->required();
    compare->add_option("--csv", csv_path, "relative-energy CSV path (default OUTPUT/relenergy.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            RunConfig cfg = parse_config(config_path);
            if (threads) cfg.threads = threads;
            const RunOutputs out = run_from_config(cfg);
            say("run: %zu steps, E(0) = %.6g, E(T) = %.6g -> %s/energy.csv\n",
                out.traj.states.size() - 1, out.traj.energy.front(), out.traj.energy.back(),
                cfg.output_dir.c_str());
            print_records(out.records);
            return out.checks_pass ? 0 : 1;
        }

        if (check->parsed()) {
            std::vector<CheckRecord> recs;
            if (target == "roots") {
                recs.push_back(check_roots(trials, seed));
            } else if (target == "peterlin") {
                recs.push_back(check_peterlin());
            } else if (target == "angular") {
                recs.push_back(check_angular(trials, seed));
            } else {
                const Grid g({32, 6.283185307179586476925286766559});
                std::unique_ptr<Model> m = model_by_name(g, target);
                if (check_name == "fenchel" || check_name == "all")
                    recs.push_back(check_fenchel(*m, target, trials, seed));
                if (check_name == "adiss" || check_name == "all")
                    for (CheckRecord& r : check_adiss_refine(target, refine, seed))
                        recs.push_back(std::move(r));
                if (check_name == "convexity" || check_name == "all")
                    recs.push_back(check_convexity_cmd(*m, target, trials, seed));
                if (recs.empty())
                    throw ConfigError("check: unknown checker '" + check_name + "'");
            }
            print_records(recs);
            if (!csv_path.empty()) write_diagnostics_csv(csv_path, recs);
            return all_pass(recs) ? 0 : 1;
        }

        if (compare->parsed()) {
            RunConfig cfg_a = parse_config(config_path);
            RunConfig cfg_b = parse_config(config_b_path);
            if (cfg_a.grid.n != cfg_b.grid.n || cfg_a.grid.L != cfg_b.grid.L ||
                cfg_a.scheme.tau != cfg_b.scheme.tau ||
                cfg_a.scheme.n_steps != cfg_b.scheme.n_steps)
                throw ConfigError("compare: the two runs must share grid and time partition");
            const RunOutputs a = run_from_config(cfg_a);
            const RunOutputs b = run_from_config(cfg_b);

            auto lookup = [](const AugmentedTrajectory& traj, double t) -> const State& {
                for (std::size_t i = 0; i < traj.times.size(); ++i)
                    if (std::abs(traj.times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t)))
                        return traj.states[i];
                throw Misaligned("compare: time not on the stored grid");
            };
            // Run B acts as the quasi-strong comparison trajectory; its
            // states live on a separate grid context, so copy them onto run
            // A's model through the shared discrete layout (same n, L).
            const GronwallReport rep = gronwall_weak_strong(
                *a.model, a.traj,
                [&](double t) {
                    State s = lookup(b.traj, t);
                    s.v.g = a.grid.get();
                    s.C.g = a.grid.get();
                    return s;
                },
                nullptr);
            const std::string out_csv =
                csv_path.empty() ? cfg_a.output_dir + "/relenergy.csv" : csv_path;
            write_relenergy_csv(out_csv, rep);
            say("compare: worst margin %.4e (%s) -> %s\n", rep.worst_margin,
                rep.pass ? "pass" : "FAIL", out_csv.c_str());
            return rep.pass ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
    return 2;
}
