#include "nstp/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nstp/mesh/table_io.hpp"

extern char** environ;

namespace nstp::cli {

const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::steady: return "steady";
        case Experiment::evolve: return "evolve";
        case Experiment::optimize: return "optimize";
        case Experiment::lq: return "lq";
        case Experiment::decay: return "decay";
        case Experiment::stabilize: return "stabilize";
        case Experiment::turnpike: return "turnpike";
        case Experiment::gamma_convergence: return "gamma_convergence";
    }
    return "?";
}

std::string FieldRecipe::text() const {
    switch (kind) {
        case Kind::zero: return "zero";
        case Kind::random: return "random";
        case Kind::constructed: return "constructed";
        case Kind::control_file: return "control:" + path.string();
        case Kind::file: return "file:" + path.string();
    }
    return "?";
}

double ExperimentConfig::effective_grad_tol() const {
    if (grad_tol) return *grad_tol;
    switch (experiment) {
        case Experiment::turnpike: return 1e-11;
        case Experiment::gamma_convergence: return 1e-10;
        default: return 1e-8;
    }
}

std::string Diagnostic::text() const {
    std::string s = severity == Severity::error ? "error" : "warning";
    if (!key.empty()) s += " [" + key + "]";
    return s + ": " + message;
}

bool ParseResult::ok() const {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& v) {
    double x = 0.0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("'" + v + "' is not a number");
    if (!std::isfinite(x)) throw std::invalid_argument("'" + v + "' is not finite");
    return x;
}

double parse_positive(const std::string& v) {
    const double x = parse_real(v);
    if (!(x > 0.0)) throw std::invalid_argument("must be > 0, got " + v);
    return x;
}

long long parse_integer(const std::string& v) {
    long long x = 0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("'" + v + "' is not an integer");
    return x;
}

int parse_count(const std::string& v, int lo) {
    const long long x = parse_integer(v);
    if (x < lo || x > 1'000'000'000) throw std::invalid_argument("must be an integer >= " + std::to_string(lo));
    return static_cast<int>(x);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::optional<double> parse_optional_positive(const std::string& v, const char* unset) {
    if (v == unset) return std::nullopt;
    return parse_positive(v);
}

std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw std::invalid_argument("empty entry in list '" + v + "'");
        out.push_back(parse_positive(item));
    }
    return out;
}

std::string join_list(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        s += format_double(xs[i]);
    }
    return s;
}

std::string opt_text(const std::optional<double>& x, const char* unset) {
    return x ? format_double(*x) : std::string(unset);
}

FieldRecipe parse_recipe(const std::string& v, const std::filesystem::path& base,
                         std::initializer_list<FieldRecipe::Kind> allowed) {
    FieldRecipe r;
    auto with_path = [&](std::string_view prefix, FieldRecipe::Kind kind) {
        const std::string p = trim(std::string_view(v).substr(prefix.size()));
        if (p.empty()) throw std::invalid_argument("missing path after '" + std::string(prefix) + "'");
        r.kind = kind;
        const std::filesystem::path path(p);
        r.path = path.is_absolute() ? path : std::filesystem::absolute(base / path).lexically_normal();
    };
    if (v == "zero") r.kind = FieldRecipe::Kind::zero;
    else if (v == "random") r.kind = FieldRecipe::Kind::random;
    else if (v == "constructed") r.kind = FieldRecipe::Kind::constructed;
    else if (v.starts_with("control:")) with_path("control:", FieldRecipe::Kind::control_file);
    else if (v.starts_with("file:")) with_path("file:", FieldRecipe::Kind::file);
    else throw std::invalid_argument("unknown field source '" + v + "'");

    if (std::find(allowed.begin(), allowed.end(), r.kind) == allowed.end()) {
        std::string names;
        for (auto k : allowed) {
            FieldRecipe tmp{k, "PATH"};
            names += (names.empty() ? "" : ", ") + tmp.text();
        }
        throw std::invalid_argument("'" + v + "' is not allowed here (use " + names + ")");
    }
    return r;
}

using Kind = FieldRecipe::Kind;

struct Entry {
    KeyInfo info;
    std::function<void(ExperimentConfig&, const std::string&, const std::filesystem::path&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define NSTP_REAL(key, field, parser, doc)                                                         \
    Entry {                                                                                        \
        {key, "", doc}, [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) { \
            c.field = parser(v);                                                                   \
        },                                                                                         \
            [](const ExperimentConfig& c) { return format_double(c.field); }                       \
    }

#define NSTP_INT(key, field, lo, doc)                                                              \
    Entry {                                                                                        \
        {key, "", doc}, [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) { \
            c.field = parse_count(v, lo);                                                          \
        },                                                                                         \
            [](const ExperimentConfig& c) { return std::to_string(c.field); }                      \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t{
            Entry{{"experiment", "", "steady | evolve | optimize | lq | decay | stabilize | turnpike | gamma_convergence"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      static const std::map<std::string, Experiment> names{
                          {"steady", Experiment::steady},       {"evolve", Experiment::evolve},
                          {"optimize", Experiment::optimize},   {"lq", Experiment::lq},
                          {"decay", Experiment::decay},         {"stabilize", Experiment::stabilize},
                          {"turnpike", Experiment::turnpike},   {"gamma_convergence", Experiment::gamma_convergence}};
                      const auto it = names.find(v);
                      if (it == names.end()) throw std::invalid_argument("unknown experiment '" + v + "'");
                      c.experiment = it->second;
                  },
                  [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); }},
            Entry{{"n", "", "cells per side, a power of two >= 8"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      const int n = parse_count(v, 8);
                      if ((n & (n - 1)) != 0) throw std::invalid_argument("n must be a power of two");
                      c.flow.n = n;
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.flow.n); }},
            NSTP_REAL("mu", flow.mu, parse_positive, "viscosity"),
            NSTP_REAL("dt", flow.dt, parse_positive, "time step"),
            NSTP_REAL("t_final", flow.t_final, parse_positive, "horizon for evolve, optimize, lq and stabilize"),
            Entry{{"convection", "", "false solves the Stokes problem"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      c.flow.convection = parse_bool(v);
                  },
                  [](const ExperimentConfig& c) { return std::string(c.flow.convection ? "true" : "false"); }},
            NSTP_REAL("cfl", flow.cfl, parse_positive, "advective CFL target for the dt check"),
            Entry{{"seed", "", "seed of every random field"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      const long long x = parse_integer(v);
                      if (x < 0) throw std::invalid_argument("must be >= 0");
                      c.seed = static_cast<std::uint64_t>(x);
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
            NSTP_INT("threads", threads, 1, "worker threads for horizon sweeps"),
            Entry{{"horizons", "", "comma-separated horizons for turnpike and gamma_convergence"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      c.horizons = v.empty() ? std::vector<double>{} : parse_list(v);
                  },
                  [](const ExperimentConfig& c) { return join_list(c.horizons); }},
            NSTP_REAL("k", k, parse_positive, "control penalty of the unsteady problem"),
            NSTP_REAL("alpha", alpha, parse_positive, "control penalty of the steady problem"),
            Entry{{"variant", "", "optimize: unsteady | steady | time_independent"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      if (v != "unsteady" && v != "steady" && v != "time_independent")
                          throw std::invalid_argument("unknown variant '" + v + "'");
                      c.variant = v;
                  },
                  [](const ExperimentConfig& c) { return c.variant; }},
            Entry{{"admissible_radius", "", "L2 radius of the control set, or none"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      c.admissible_radius = parse_optional_positive(v, "none");
                  },
                  [](const ExperimentConfig& c) { return opt_text(c.admissible_radius, "none"); }},
            Entry{{"control", "", "zero | random | file:PATH"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
                      c.control = parse_recipe(v, base, {Kind::zero, Kind::random, Kind::file});
                  },
                  [](const ExperimentConfig& c) { return c.control.text(); }},
            NSTP_REAL("control_amplitude", control_amplitude, parse_real, "scale of the random control"),
            Entry{{"initial", "", "initial state: zero | random | file:PATH"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
                      c.initial = parse_recipe(v, base, {Kind::zero, Kind::random, Kind::file});
                  },
                  [](const ExperimentConfig& c) { return c.initial.text(); }},
            NSTP_REAL("initial_amplitude", initial_amplitude, parse_positive, "L2 norm of the random initial state"),
            Entry{{"target", "", "zero | constructed | control:PATH | file:PATH"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
                      c.target = parse_recipe(v, base, {Kind::zero, Kind::constructed, Kind::control_file, Kind::file});
                  },
                  [](const ExperimentConfig& c) { return c.target.text(); }},
            Entry{{"terminal", "", "terminal weight q0: zero | file:PATH"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
                      c.terminal = parse_recipe(v, base, {Kind::zero, Kind::file});
                  },
                  [](const ExperimentConfig& c) { return c.terminal.text(); }},
            Entry{{"grad_tol", "", "projected gradient tolerance, or auto"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      c.grad_tol = parse_optional_positive(v, "auto");
                  },
                  [](const ExperimentConfig& c) { return opt_text(c.grad_tol, "auto"); }},
            NSTP_INT("max_iter", max_iter, 0, "optimizer iteration cap"),
            NSTP_INT("memory", memory, 0, "L-BFGS pairs, 0 for projected gradient descent"),
            NSTP_REAL("steady_tol", steady_tol, parse_positive, "steady solver residual tolerance"),
            NSTP_INT("steady_max_iter", steady_max_iter, 1, "steady solver iteration cap"),
            NSTP_REAL("perturbation", perturbation, parse_positive, "turnpike: initial displacement relative to |ybar|"),
            Entry{{"epsilon", "", "turnpike closeness bound, or auto for 0.1 |ybar|"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
                      c.epsilon = parse_optional_positive(v, "auto");
                  },
                  [](const ExperimentConfig& c) { return opt_text(c.epsilon, "auto"); }},
            NSTP_REAL("tracking_gate", tracking_gate, parse_positive, "turnpike: bound on |ybar - target|"),
            NSTP_REAL("decay_horizon", decay_horizon, parse_positive, "decay and turnpike: Oseen decay horizon"),
            NSTP_INT("decay_samples", decay_samples, 1, "random samples for the decay estimate"),
            NSTP_INT("hessian_samples", hessian_samples, 1, "turnpike: Hessian Rayleigh samples"),
            NSTP_REAL("smallness_bound", smallness_bound, parse_positive, "gate on |grad y| / mu"),
            Entry{{"output_dir", "", "parent of the run directories"},
                  [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
                      if (v.empty()) throw std::invalid_argument("must not be empty");
                      const std::filesystem::path p(v);
                      c.output_dir = p.is_absolute() ? p : std::filesystem::absolute(base / p).lexically_normal();
                  },
                  [](const ExperimentConfig& c) { return c.output_dir.string(); }},
        };
        const ExperimentConfig defaults;
        for (auto& e : t) e.info.default_text = e.info.name == "experiment" ? "(required)" : e.get(defaults);
        return t;
    }();
    return table;
}

#undef NSTP_REAL
#undef NSTP_INT

const Entry* find_entry(const std::string& key) {
    for (const auto& e : entries())
        if (e.info.name == key) return &e;
    return nullptr;
}

std::string env_name(const std::string& key) {
    std::string s = "NSTP_";
    for (char ch : key) s += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

}  // namespace

const std::vector<KeyInfo>& config_schema() {
    static const std::vector<KeyInfo> infos = [] {
        std::vector<KeyInfo> out;
        for (const auto& e : entries()) out.push_back(e.info);
        return out;
    }();
    return infos;
}

ParseResult parse_config(const std::string& text, const std::filesystem::path& base_dir,
                         const std::map<std::string, std::string>& env) {
    ParseResult res;
    auto error = [&](std::string key, std::string msg) {
        res.diagnostics.push_back({Diagnostic::Severity::error, std::move(key), std::move(msg)});
    };

    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            error("", "line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!find_entry(key)) {
            error(key, "unknown key (line " + std::to_string(lineno) + ")");
            continue;
        }
        if (!values.emplace(key, value).second) error(key, "duplicate key (line " + std::to_string(lineno) + ")");
    }

    ExperimentConfig cfg;
    std::set<std::string> from_env;
    for (const auto& e : entries()) {
        const auto it = env.find(env_name(e.info.name));
        if (it == env.end()) continue;
        values[e.info.name] = trim(it->second);
        from_env.insert(e.info.name);
        cfg.env_overrides.push_back(it->first + "=" + trim(it->second));
    }
    for (const auto& [name, value] : env) {
        if (name.starts_with("NSTP_") && std::none_of(entries().begin(), entries().end(), [&](const Entry& e) {
                return env_name(e.info.name) == name;
            }))
            res.diagnostics.push_back({Diagnostic::Severity::warning, name, "environment variable matches no key"});
    }

    if (!values.count("experiment")) error("experiment", "missing required key");
    cfg.output_dir = std::filesystem::absolute(cfg.output_dir);
    for (const auto& [key, value] : values) {
        try {
            find_entry(key)->set(cfg, value, from_env.count(key) ? std::filesystem::current_path() : base_dir);
        } catch (const std::invalid_argument& e) {
            error(key, e.what() + std::string(from_env.count(key) ? " (from " + env_name(key) + ")" : ""));
        }
    }
    if (res.ok()) res.config = std::move(cfg);
    return res;
}

ParseResult load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& env) {
    std::ifstream in(path);
    if (!in) {
        ParseResult res;
        res.diagnostics.push_back({Diagnostic::Severity::error, "", "cannot read config file " + path.string()});
        return res;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::absolute(path).parent_path(), env);
}

std::map<std::string, std::string> environment_overrides() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string_view kv(*e);
        if (!kv.starts_with("NSTP_")) continue;
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) continue;
        out.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    }
    return out;
}

std::string resolved_text(const ExperimentConfig& cfg) {
    std::string out = "# resolved configuration\n";
    for (const auto& o : cfg.env_overrides) out += "# environment override " + o + "\n";
    for (const auto& e : entries()) out += e.info.name + " = " + e.get(cfg) + "\n";
    return out;
}

}  // namespace nstp::cli
