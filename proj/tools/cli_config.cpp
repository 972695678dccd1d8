#include <algorithm>
#include <cmath>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace qkcli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

KeySpec integer(std::string name, std::string fallback, std::string help) {
    return {std::move(name), KeyKind::Int, std::move(fallback), std::move(help), {}};
}
KeySpec real(std::string name, std::string fallback, std::string help) {
    return {std::move(name), KeyKind::Real, std::move(fallback), std::move(help), {}};
}
KeySpec choice(std::string name, std::string fallback, std::string help, std::vector<std::string> choices) {
    return {std::move(name), KeyKind::Choice, std::move(fallback), std::move(help), std::move(choices)};
}
KeySpec flag(std::string name, std::string help) {
    return {std::move(name), KeyKind::Flag, "false", std::move(help), {}};
}
KeySpec seed_key() { return integer("seed", "", "RNG seed; required whenever the run draws random numbers"); }

// Potential keys shared by every subcommand that evaluates a kernel.
std::vector<KeySpec> potential_keys(const std::string& family, const std::string& s, const std::string& outer,
                                    const std::string& c1, const std::string& c2) {
    return {
        choice("potential", family, "interaction family", {"power_law", "bump"}),
        real("potential_s", s, "power_law: |phi_hat(r)| ~ r^s near zero"),
        real("outer_decay", outer, "power_law: |phi_hat(r)| ~ r^(-1-outer_decay) at infinity"),
        real("cutoff", "1", "power_law: crossover radius"),
        real("c1", c1, "bump: inner radius of the window"),
        real("c2", c2, "bump: outer radius of the window"),
        {"prefactor", KeyKind::Text, "gain_loss",
         "collision prefactor: a number, gain_loss (1/2) or kinetic (1/(8 pi^2))", {}},
    };
}

std::vector<KeySpec> join(std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<Subcommand> build_subcommands() {
    std::vector<Subcommand> out;

    out.push_back({"collide-check",
                   "Collision operator on a sampled density: conservation defects and Maxwellian annihilation.",
                   join({integer("n_v", "8", "velocity points per axis (power of two)"),
                         choice("density", "bimodal", "test density", {"maxwellian", "bimodal", "anisotropic"}),
                         flag("maxwellian", "shorthand for density = maxwellian"),
                         choice("rule", "deposit", "post-collision rule",
                                {"deposit", "gridsum", "montecarlo", "radon"}),
                         integer("n_omega", "16", "sphere nodes per collision"),
                         integer("mc_trials", "4096", "montecarlo: samples per velocity node"),
                         real("threshold", "1e-6", "pass threshold for relative conservation defects"),
                         real("annihilation_threshold", "1e-3",
                              "pass threshold for ||Q(M,M)|| / ||Q-(M,M)|| (maxwellian only)"),
                         seed_key()},
                        potential_keys("power_law", "0.5", "0.5", "1", "2")),
                   "  conservation.csv  quantity,value,scale,relative   (moments of Q(f,f); scales from the loss term)\n"
                   "  summary.csv       check,value,threshold,pass\n"});

    out.push_back({"solve", "Transport-collision splitting from a Gaussian-mixture initial state.",
                   join({integer("n_v", "8", "velocity points per axis (power of two)"),
                         choice("dim_x", "0", "spatial dimension: 0 homogeneous, 1 slab", {"0", "1"}),
                         integer("n_x", "8", "spatial points (slab)"),
                         real("L_x", "1", "slab half-length; x in [-L_x, L_x)"),
                         choice("density", "bimodal", "initial velocity profile",
                                {"maxwellian", "bimodal", "anisotropic"}),
                         real("perturbation", "0.3", "slab: amplitude of the cos(pi x / L_x) modulation"),
                         real("dt", "0.05", "time step"), real("T", "1", "final time"),
                         choice("splitting", "strang", "operator splitting", {"strang", "lie"}),
                         choice("substep", "rk4", "collision sub-step", {"rk4", "euler"}),
                         integer("diagnostics_every", "1", "steps between diagnostics rows"),
                         real("blowup_factor", "1000", "abort when max|f| grows by this factor"),
                         choice("rule", "deposit", "post-collision rule", {"deposit", "gridsum", "montecarlo"}),
                         integer("n_omega", "8", "sphere nodes per collision"),
                         integer("mc_trials", "4096", "montecarlo: samples per velocity node"), seed_key()},
                        potential_keys("power_law", "0.5", "2", "1", "2")),
                   "  trajectory.csv  t,mass,px,py,pz,energy,entropy,min_f,h_norm\n"
                   "  marginal.csv    v,value   (final velocity marginal along v_x)\n"});

    out.push_back({"bbgky-ladder", "Operator norm ratios along an eps ladder and their log-log slope.",
                   join({choice("op", "B", "operator", {"A", "B", "Qeps", "QepsMinusQ0"}),
                         integer("m_lo", "2", "largest eps is 2^-m_lo"),
                         integer("m_hi", "6", "smallest eps is 2^-m_hi"),
                         real("s_budget", "-1", "derivative budget s; negative uses the potential's vanishing order"),
                         choice("family", "concentrated", "A/B data family", {"concentrated", "smooth"}),
                         real("center_width", "1", "A/B data: width of the centre-of-mass Gaussian"),
                         real("velocity_width", "1", "A/B data: width of the velocity Gaussian"),
                         integer("samples", "1024", "B: Monte Carlo samples of the outer integral"),
                         integer("n_v", "4", "Qeps: velocity points per axis"),
                         integer("n_omega", "8", "Qeps: unused by the xi-side rule, kept for the potential config"),
                         seed_key()},
                        potential_keys("power_law", "0.6", "3", "1", "2")),
                   "  ladder.csv  eps,norm rows, then slope,<value> and residual,<value>\n"});

    out.push_back({"quasifree", "Quasi-free state experiments.",
                   {choice("task", "normalization", "experiment",
                           {"normalization", "random_walk", "cycle_scaling", "derangements"}),
                    integer("N", "2", "normalization: particle count"),
                    real("eps", "0.1", "normalization: semiclassical scale"),
                    integer("trials", "20000", "normalization / random_walk: Monte Carlo trials"),
                    integer("n", "10000", "random_walk: steps per walk"),
                    real("band", "0.05", "relative pass band of the Monte Carlo tasks"),
                    real("s", "0.75", "cycle_scaling: derivative order"),
                    real("delta", "0.1", "cycle_scaling: velocity weight exponent"),
                    integer("m_lo", "2", "cycle_scaling: largest eps is 2^-m_lo"),
                    integer("m_hi", "6", "cycle_scaling: smallest eps is 2^-m_hi"),
                    integer("k_max", "10", "derangements: largest k"), seed_key()},
                   "  normalization.csv  N,eps,trials,estimate,std_error,target,band,verdict\n"
                   "  classes.csv        k,class_size,class_mean\n"
                   "  random_walk.csv    n,trials,mean_crossings,crossings_std_error,target,"
                   "mean_sq_displacement,displacement_std_error,verdict\n"
                   "  ladder.csv         eps,norm rows, then slope,<value> and residual,<value>\n"
                   "  derangements.csv   k,derangements\n"});

    out.push_back({"boardgame", "Collapsing maps, echelon trees and their equivalence classes.",
                   {integer("k", "4", "number of collisions (1..8)"),
                    flag("tabulate", "write one row per class"),
                    integer("mc_points", "0", "per-class Monte Carlo check of the time-domain identity; 0 skips"),
                    seed_key()},
                   "  classes.csv  skeleton,class_size,canonical,domain   (--tabulate)\n"
                   "  counts.csv   k,classes,maps,k_factorial\n"
                   "  regions.csv  skeleton,points,mismatches   (mc_points > 0)\n"});

    out.push_back({"illposed", "Norm deflation data, loss-term probe and the deflation curve.",
                   join({choice("task", "all", "what to run", {"all", "norms", "probe", "curve"}),
                         real("M", "8", "dyadic scale"), real("N2", "4", "dyadic velocity scale"),
                         real("s", "0.5", "spatial regularity, 0 < s < 1"), real("s1", "0.5", "velocity weight"),
                         real("delta", "0.25", "inflation exponent"),
                         integer("J_sample", "256", "sampled directions (<= 512)"),
                         integer("audit_directions", "128", "directions in the overlap audit"),
                         choice("mode", "surrogate", "loss kernel", {"surrogate", "cross_section"}),
                         integer("mc_nodes", "100000", "probe: Monte Carlo nodes per point"),
                         integer("points", "8", "probe: random sample points"),
                         real("band", "-1", "probe: pass band; negative uses the mode default"),
                         integer("n_times", "65", "curve: time nodes on [T*, 0]"), seed_key()},
                        potential_keys("bump", "0.5", "0.5", "0.25", "0.5")),
                   "  norms.csv  quantity,value   (f_norm, g_norm, g_term_norm, J, J_sample, overlap_ratio, "
                   "max_pair_cosine)\n"
                   "  probe.csv  x0,x1,x2,v0,v1,v2,quadrature,predicted,std_error,relative_error\n"
                   "  probe_summary.csv  relative_error,std_error,band,inconclusive,passed\n"
                   "  curve.csv  t,norm rows, then ratio, M, s, s1, delta rows\n"});
    return out;
}

}  // namespace

const std::vector<Subcommand>& subcommands() {
    static const std::vector<Subcommand> subs = build_subcommands();
    return subs;
}

const Subcommand& find_subcommand(const std::string& name) {
    for (const auto& s : subcommands())
        if (s.name == name) return s;
    throw ConfigError("unknown subcommand '" + name + "'");
}

Config::Config(const Subcommand& sub) : sub_(sub) {
    for (const auto& k : sub_.keys) {
        if (!k.fallback.empty()) {
            values_[k.name] = k.fallback;
            origin_[k.name] = "default";
        }
    }
}

const KeySpec& Config::spec(const std::string& key, const std::string& where) const {
    for (const auto& k : sub_.keys)
        if (k.name == key) return k;
    throw ConfigError(where + ": unknown key '" + key + "' for subcommand " + sub_.name);
}

void Config::check_value(const KeySpec& ks, const std::string& value, const std::string& where) const {
    auto bad = [&](const std::string& what) {
        throw ConfigError(where + ": key '" + ks.name + "' " + what + ", got '" + value + "'");
    };
    if (value.empty()) bad("needs a value");
    switch (ks.kind) {
        case KeyKind::Int: {
            errno = 0;
            char* end = nullptr;
            std::strtoll(value.c_str(), &end, 10);
            if (errno != 0 || *end != '\0') bad("expects an integer");
            break;
        }
        case KeyKind::Real: {
            errno = 0;
            char* end = nullptr;
            const double x = std::strtod(value.c_str(), &end);
            if (errno != 0 || *end != '\0' || !std::isfinite(x)) bad("expects a finite number");
            break;
        }
        case KeyKind::Choice:
            if (std::find(ks.choices.begin(), ks.choices.end(), value) == ks.choices.end()) {
                std::string list;
                for (const auto& c : ks.choices) list += (list.empty() ? "" : "|") + c;
                bad("expects one of " + list);
            }
            break;
        case KeyKind::Flag:
            if (value != "true" && value != "false") bad("expects true or false");
            break;
        case KeyKind::Text: break;
    }
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ":0: cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path);
}

void Config::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0, settings = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
        const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": missing key before '='");
        const KeySpec& ks = spec(key, where);
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError(where + ": key '" + key + "' already set on line " + std::to_string(it->second));
        check_value(ks, value, where);
        seen[key] = lineno;
        values_[key] = value;
        origin_[key] = where;
        ++settings;
    }
    if (settings == 0)
        throw ConfigError(origin + ":" + std::to_string(std::max<std::size_t>(lineno, 1)) +
                          ": config has no 'key = value' settings");
}

void Config::set(const std::string& key, const std::string& value, const std::string& origin) {
    const KeySpec& ks = spec(key, origin);
    check_value(ks, value, origin);
    values_[key] = value;
    origin_[key] = origin;
}

bool Config::given(const std::string& key) const {
    const auto it = origin_.find(key);
    return it != origin_.end() && it->second != "default";
}

std::string Config::text(const std::string& key) const {
    spec(key, "internal");
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("key '" + key + "' has no value and no default");
    return it->second;
}

long Config::integer(const std::string& key) const { return std::strtol(text(key).c_str(), nullptr, 10); }
double Config::real(const std::string& key) const { return std::strtod(text(key).c_str(), nullptr); }
bool Config::flag(const std::string& key) const { return text(key) == "true"; }

void Config::require(const std::string& key, const std::string& why) const {
    if (values_.find(key) == values_.end())
        throw ConfigError("key '" + key + "' is required: " + why);
}

std::string Config::echo() const {
    std::ostringstream os;
    for (const auto& k : sub_.keys) {
        const auto it = values_.find(k.name);
        if (it == values_.end()) continue;
        os << k.name << " = " << it->second << "\n";
    }
    return os.str();
}

}  // namespace qkcli
