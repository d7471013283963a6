#include "evf/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace evf {

namespace {

struct KeyValue {
    std::string value;
    bool used = false;
};

// section -> key -> values (a repeated key accumulates, used by [forcing])
using Sections = std::map<std::string, std::map<std::string, std::vector<KeyValue>>>;

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

Sections read_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    Sections sec;
    std::string line, cur;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            cur = strip(line.substr(1, line.size() - 2));
            sec[cur];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || cur.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value inside a section");
        sec[cur][strip(line.substr(0, eq))].push_back({strip(line.substr(eq + 1)), false});
    }
    return sec;
}

double to_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config: key '" + key + "': not a number: '" + v + "'");
    return x;
}

long to_long(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config: key '" + key + "': not an integer: '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config: key '" + key + "': expected true or false, got '" + v + "'");
}

std::string strip_quotes(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

// Accessor that marks keys as used so leftovers can be rejected.
class SectionView {
  public:
    SectionView(Sections& sec, const std::string& name) : name_(name) {
        auto it = sec.find(name);
        map_ = (it == sec.end()) ? nullptr : &it->second;
    }
    bool present() const { return map_ != nullptr; }

    const std::string* get(const std::string& key) {
        if (!map_) return nullptr;
        auto it = map_->find(key);
        if (it == map_->end()) return nullptr;
        if (it->second.size() > 1)
            throw ConfigError("config: [" + name_ + "] key '" + key + "' given more than once");
        it->second[0].used = true;
        return &it->second[0].value;
    }
    std::vector<std::string> get_all(const std::string& key) {
        std::vector<std::string> out;
        if (!map_) return out;
        auto it = map_->find(key);
        if (it == map_->end()) return out;
        for (KeyValue& kv : it->second) {
            kv.used = true;
            out.push_back(kv.value);
        }
        return out;
    }

  private:
    std::string name_;
    std::map<std::string, std::vector<KeyValue>>* map_;
};

void reject_unknown(const Sections& sec, const std::vector<std::string>& known_sections) {
    for (const auto& [name, keys] : sec) {
        bool known = false;
        for (const std::string& k : known_sections) known = known || k == name;
        if (!known) throw ConfigError("config: unknown section [" + name + "]");
        for (const auto& [key, vals] : keys)
            for (const KeyValue& kv : vals)
                if (!kv.used)
                    throw ConfigError("config: unknown key '" + key + "' in section [" + name +
                                      "]");
    }
}

}  // namespace

RunConfig parse_config(const std::string& path) {
    Sections sec = read_sections(path);
    RunConfig cfg;

    {
        SectionView g(sec, "grid");
        if (const std::string* v = g.get("n")) {
            const long n = to_long("n", *v);
            if (n < 8 || (n & (n - 1)) != 0)
                throw ConfigError("config: [grid] n must be a power of two >= 8, got " + *v);
            cfg.grid.n = static_cast<int>(n);
        }
        if (const std::string* v = g.get("L")) {
            cfg.grid.L = to_double("L", *v);
            if (!(cfg.grid.L > 0)) throw ConfigError("config: [grid] L must be > 0, got " + *v);
        }
    }
    {
        SectionView s(sec, "scheme");
        if (const std::string* v = s.get("tau")) {
            cfg.scheme.tau = to_double("tau", *v);
            if (!(cfg.scheme.tau > 0))
                throw ConfigError("config: [scheme] tau must be > 0, got " + *v);
        }
        if (const std::string* v = s.get("n_steps")) {
            cfg.scheme.n_steps = to_long("n_steps", *v);
            if (cfg.scheme.n_steps < 1)
                throw ConfigError("config: [scheme] n_steps must be >= 1, got " + *v);
        }
        if (const std::string* v = s.get("mode")) {
            const std::string m = strip_quotes(*v);
            if (m == "minmax")
                cfg.scheme.mode = SchemeMode::minmax;
            else if (m == "baseline")
                cfg.scheme.mode = SchemeMode::baseline;
            else
                throw ConfigError("config: [scheme] mode must be minmax or baseline, got " + *v);
        }
        if (const std::string* v = s.get("tol_saddle")) {
            cfg.scheme.tol_saddle = to_double("tol_saddle", *v);
            if (!(cfg.scheme.tol_saddle > 0))
                throw ConfigError("config: [scheme] tol_saddle must be > 0, got " + *v);
        }
        if (const std::string* v = s.get("inner_iters")) {
            cfg.scheme.inner_iters = static_cast<int>(to_long("inner_iters", *v));
            if (cfg.scheme.inner_iters < 1)
                throw ConfigError("config: [scheme] inner_iters must be >= 1, got " + *v);
        }
        if (const std::string* v = s.get("outer_iters")) {
            cfg.scheme.outer_iters = static_cast<int>(to_long("outer_iters", *v));
            if (cfg.scheme.outer_iters < 1)
                throw ConfigError("config: [scheme] outer_iters must be >= 1, got " + *v);
        }
        if (const std::string* v = s.get("seed"))
            cfg.scheme.seed = static_cast<std::uint64_t>(to_long("seed", *v));
        if (const std::string* v = s.get("initial")) {
            cfg.initial = strip_quotes(*v);
            if (cfg.initial != "random" && cfg.initial != "minimizer")
                throw ConfigError("config: [scheme] initial must be random or minimizer, got " +
                                  *v);
        }
    }

    int model_sections = 0;
    {
        SectionView m(sec, "model_q");
        if (m.present()) {
            ++model_sections;
            cfg.model = "q";
            if (const std::string* v = m.get("mu")) cfg.q.mu = to_double("mu", *v);
            if (const std::string* v = m.get("alpha")) cfg.q.alpha = to_double("alpha", *v);
            if (const std::string* v = m.get("beta")) cfg.q.beta = to_double("beta", *v);
            if (const std::string* v = m.get("delta")) cfg.q.delta = to_double("delta", *v);
            if (!(cfg.q.mu > 0)) throw ConfigError("config: [model_q] mu must be > 0");
            if (cfg.q.alpha == 0) throw ConfigError("config: [model_q] alpha must be nonzero");
            if (!(cfg.q.beta > 0 && cfg.q.beta < 1))
                throw ConfigError("config: [model_q] beta must be in (0, 1), got " +
                                  std::to_string(cfg.q.beta));
            if (!(cfg.q.delta > 0)) throw ConfigError("config: [model_q] delta must be > 0");
        }
    }
    {
        SectionView m(sec, "model_s");
        if (m.present()) {
            ++model_sections;
            cfg.model = "s";
            if (const std::string* v = m.get("mu")) cfg.s.mu = to_double("mu", *v);
            if (const std::string* v = m.get("alpha")) cfg.s.alpha = to_double("alpha", *v);
            if (const std::string* v = m.get("mu_p")) cfg.s.mu_p = to_double("mu_p", *v);
            if (!(cfg.s.mu > 0)) throw ConfigError("config: [model_s] mu must be > 0");
            if (cfg.s.alpha == 0) throw ConfigError("config: [model_s] alpha must be nonzero");
            if (!(cfg.s.mu_p > 0)) throw ConfigError("config: [model_s] mu_p must be > 0");
        }
    }
    {
        SectionView m(sec, "model_llz");
        if (m.present()) {
            ++model_sections;
            cfg.model = "llz";
            if (const std::string* v = m.get("mu")) cfg.llz.mu = to_double("mu", *v);
            if (!(cfg.llz.mu > 0)) throw ConfigError("config: [model_llz] mu must be > 0");
        }
    }
    if (model_sections != 1)
        throw ConfigError("config: exactly one of [model_q], [model_s], [model_llz] required");

    {
        SectionView f(sec, "forcing");
        for (const std::string& v : f.get_all("mode")) {
            std::istringstream ss(v);
            ForcingMode fm;
            if (!(ss >> fm.kx >> fm.ky >> fm.ax >> fm.ay >> fm.omega >> fm.phase))
                throw ConfigError(
                    "config: [forcing] mode expects 'kx ky ax ay omega phase', got '" + v + "'");
            std::string rest;
            if (ss >> rest)
                throw ConfigError("config: [forcing] mode has trailing tokens: '" + v + "'");
            cfg.forcing.push_back(fm);
        }
    }
    {
        SectionView o(sec, "output");
        if (const std::string* v = o.get("dir")) cfg.output_dir = strip_quotes(*v);
        if (const std::string* v = o.get("snapshot_every")) {
            cfg.snapshot_every = to_long("snapshot_every", *v);
            if (cfg.snapshot_every < 0)
                throw ConfigError("config: [output] snapshot_every must be >= 0, got " + *v);
        }
    }
    {
        SectionView r(sec, "runtime");
        if (const std::string* v = r.get("threads")) {
            cfg.threads = static_cast<int>(to_long("threads", *v));
            if (cfg.threads < 0)
                throw ConfigError("config: [runtime] threads must be >= 0, got " + *v);
        }
    }
    {
        SectionView d(sec, "diagnostics");
        if (const std::string* v = d.get("evi")) cfg.check_evi = to_bool("evi", *v);
        if (const std::string* v = d.get("evi_tol_rel")) {
            cfg.evi_tol_rel = to_double("evi_tol_rel", *v);
            if (!(cfg.evi_tol_rel > 0))
                throw ConfigError("config: [diagnostics] evi_tol_rel must be > 0, got " + *v);
        }
        if (const std::string* v = d.get("evi_stride")) {
            cfg.evi_stride = static_cast<int>(to_long("evi_stride", *v));
            if (cfg.evi_stride < 1)
                throw ConfigError("config: [diagnostics] evi_stride must be >= 1, got " + *v);
        }
        if (const std::string* v = d.get("weak_probe"))
            cfg.check_weak_probe = to_bool("weak_probe", *v);
        if (const std::string* v = d.get("bv")) cfg.check_bv = to_bool("bv", *v);
    }

    reject_unknown(sec, {"grid", "scheme", "model_q", "model_s", "model_llz", "forcing", "output",
                         "runtime", "diagnostics"});

    if (const char* env = std::getenv("OUTPUT_DIR")) cfg.output_dir = env;
    return cfg;
}

std::unique_ptr<Model> make_model(const Grid& g, const RunConfig& cfg) {
    Forcing f = make_mode_forcing(cfg.forcing);
    if (cfg.model == "q") return std::make_unique<ModelQ>(g, cfg.q, std::move(f));
    if (cfg.model == "s") return std::make_unique<ModelS>(g, cfg.s, std::move(f));
    if (cfg.model == "llz") return std::make_unique<ModelLLZ>(g, cfg.llz, std::move(f));
    throw ConfigError("config: no model selected");
}

RunOutputs run_from_config(const RunConfig& cfg) {
    RunOutputs out;
    out.grid = std::make_shared<const Grid>(cfg.grid);
    const Grid& grid = *out.grid;
    out.model = make_model(grid, cfg);
    Model& model = *out.model;

    SchemeConfig sc = cfg.scheme;
    const double horizon = sc.tau * static_cast<double>(sc.n_steps);
    if (sc.mode == SchemeMode::minmax && sc.basis.empty())
        sc.basis = default_test_basis(grid, horizon);

    const Scheme scheme(model, sc);
    const State u0 = cfg.initial == "minimizer" ? model.minimizer()
                                                : random_admissible_state(model, sc.seed);

    out.traj = scheme.run(u0);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    write_energy_csv(cfg.output_dir + "/energy.csv", out.traj);

    if (cfg.snapshot_every > 0) {
        fs::create_directories(cfg.output_dir + "/snapshots");
        for (std::size_t i = 0; i < out.traj.states.size();
             i += static_cast<std::size_t>(cfg.snapshot_every)) {
            const std::string stem =
                cfg.output_dir + "/snapshots/step" + std::to_string(out.traj.start_step + i);
            write_field(stem + "_v.fld", out.traj.states[i].v);
            write_field(stem + "_c.fld", out.traj.states[i].C);
        }
    }

    const double e0 = out.traj.energy.empty() ? 0.0 : out.traj.energy[0];
    if (cfg.check_evi && sc.mode == SchemeMode::minmax) {
        const double tol = cfg.evi_tol_rel * (1.0 + e0);
        const EviReport rep = evi_check(model, out.traj, sc.basis, tol, cfg.evi_stride);
        out.records.push_back({"evi", cfg.model, rep.worst, tol, rep.pass});
    }
    if (cfg.check_weak_probe && sc.mode == SchemeMode::minmax) {
        const WeakProbeReport rep =
            weak_solution_probe(model, out.traj, sc.basis[0], {1.0, 0.1, 0.01});
        out.records.push_back({"weak_probe_alpha_gap", cfg.model, rep.gap, 1e-12, rep.gap <= 1e-12});
    }
    if (cfg.check_bv) {
        const BvReport rep = bv_postprocess(out.traj.energy);
        double cpsi_int = 0;
        for (std::size_t i = 1; i < out.traj.c_psi.size(); ++i)
            cpsi_int += out.traj.tau * out.traj.c_psi[i];
        const double bound = e0 + 2.0 * cpsi_int;
        out.records.push_back({"bv_total_variation", cfg.model, rep.tv, bound,
                               rep.tv <= bound + 1e-12 * (1.0 + bound)});
    }
    write_diagnostics_csv(cfg.output_dir + "/diagnostics.csv", out.records);

    for (const CheckRecord& r : out.records) out.checks_pass = out.checks_pass && r.pass;
    return out;
}

}  // namespace evf
