#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "qkinetic/bbgky.hpp"
#include "qkinetic/boardgame.hpp"
#include "qkinetic/collision.hpp"
#include "qkinetic/illposed.hpp"
#include "qkinetic/numerics.hpp"
#include "qkinetic/phase.hpp"
#include "qkinetic/quasifree.hpp"
#include "qkinetic/solver.hpp"

namespace qkcli {

namespace {

using qk::format_double;
using qk::collision::GaussianMixture;

class Writer {
public:
    Writer(const std::string& dir, RunResult& result) : dir_(dir), result_(result) {
        std::filesystem::create_directories(dir_);
    }
    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << content;
        result_.outputs.push_back(name);
    }

private:
    std::filesystem::path dir_;
    RunResult& result_;
};

std::uint64_t seed_of(const Config& cfg, const std::string& why) {
    cfg.require("seed", why);
    const long s = cfg.integer("seed");
    if (s < 0) throw ConfigError("key 'seed' must be nonnegative");
    return static_cast<std::uint64_t>(s);
}

std::size_t count_of(const Config& cfg, const std::string& key, long min = 0) {
    const long v = cfg.integer(key);
    if (v < min) throw ConfigError("key '" + key + "' must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

qk::kernel::Potential potential_of(const Config& cfg) {
    const std::string p = cfg.text("prefactor");
    double pref = 0.0;
    if (p == "gain_loss") {
        pref = qk::kernel::kPrefactorGainLoss;
    } else if (p == "kinetic") {
        pref = qk::kernel::kPrefactorKinetic;
    } else {
        char* end = nullptr;
        pref = std::strtod(p.c_str(), &end);
        if (*end != '\0' || !std::isfinite(pref) || pref < 0)
            throw ConfigError("key 'prefactor' expects a nonnegative number, gain_loss or kinetic, got '" + p + "'");
    }
    if (cfg.text("potential") == "bump") return qk::kernel::Potential::bump(cfg.real("c1"), cfg.real("c2"), pref);
    return qk::kernel::Potential::power_law(cfg.real("potential_s"), cfg.real("outer_decay"), cfg.real("cutoff"),
                                            pref);
}

qk::collision::VStarRule rule_of(const std::string& r) {
    using qk::collision::VStarRule;
    if (r == "gridsum") return VStarRule::GridSum;
    if (r == "montecarlo") return VStarRule::MonteCarlo;
    if (r == "radon") return VStarRule::Radon;
    return VStarRule::Deposit;
}

qk::collision::CollisionConfig collision_of(const Config& cfg) {
    qk::collision::CollisionConfig cc;
    cc.pot = potential_of(cfg);
    cc.n_omega = count_of(cfg, "n_omega", 1);
    cc.vstar_rule = rule_of(cfg.text("rule"));
    if (cc.vstar_rule == qk::collision::VStarRule::MonteCarlo) {
        cc.mc_trials = count_of(cfg, "mc_trials", 1);
        cc.seed = seed_of(cfg, "rule = montecarlo draws random collision parameters");
    }
    cc.validate();
    return cc;
}

GaussianMixture density_of(const std::string& name) {
    if (name == "maxwellian") return GaussianMixture::maxwellian();
    if (name == "anisotropic") return GaussianMixture{{{0.8, {0.4, -0.2, 0.1}, {0.8, 1.3, 1.0}}}};
    return GaussianMixture{{{0.5, {1.0, 0.0, 0.0}, {0.8, 0.9, 1.0}}, {0.4, {-1.0, 0.5, 0.0}, {0.9, 0.8, 1.0}}}};
}

std::size_t velocity_points(const Config& cfg) {
    const std::size_t n = count_of(cfg, "n_v", 2);
    if ((n & (n - 1)) != 0) throw ConfigError("key 'n_v' must be a power of two");
    return n;
}

std::string verdict(bool inconclusive, bool pass) { return inconclusive ? "inconclusive" : pass ? "pass" : "fail"; }

// Monte Carlo verdict against a relative band around a target.
struct BandCheck {
    double rel_error, rel_stderr;
    bool inconclusive, pass;
};
BandCheck band_check(double estimate, double stderr_, double target, double band) {
    BandCheck b{std::abs(estimate - target) / std::abs(target), stderr_ / std::abs(target), false, false};
    b.inconclusive = 2 * b.rel_stderr > std::abs(band - b.rel_error);
    b.pass = b.rel_error <= band;
    return b;
}

// ---------------------------------------------------------------------------

void run_collide_check(const Config& cfg, Writer& w, RunResult& res) {
    const std::string density = cfg.flag("maxwellian") ? "maxwellian" : cfg.text("density");
    const auto cc = collision_of(cfg);
    const auto grid = qk::phase::maxwellian_grid(velocity_points(cfg));
    const auto mix = density_of(density);
    const double threshold = cfg.real("threshold");

    qk::collision::CollisionParts parts;
    if (cc.vstar_rule == qk::collision::VStarRule::Radon) {
        parts = qk::collision::collide_parts(mix, mix, grid, cc);
    } else {
        const auto f = mix.sample(grid);
        parts = qk::collision::collide_parts(f, f, cc);
    }
    const auto q = parts.total();
    // Scales come from the loss term, so a vanishing Q (Maxwellian input)
    // is not measured against its own round-off.
    auto d = qk::collision::moments(q);
    const auto scale = qk::collision::moments(parts.loss);
    d.mass_scale = scale.mass_scale;
    d.momentum_scale = scale.momentum_scale;
    d.energy_scale = scale.energy_scale;
    w.write("conservation.csv", d.csv());

    std::ostringstream s;
    s << "check,value,threshold,pass\n";
    auto row = [&](const std::string& name, double v, double thr) {
        s << name << "," << format_double(v) << "," << format_double(thr) << "," << (v <= thr ? "true" : "false")
          << "\n";
        if (v > thr) res.notes.push_back(name + " = " + format_double(v) + " exceeds " + format_double(thr));
    };
    row("relative_mass", d.relative_mass(), threshold);
    row("relative_momentum", d.relative_momentum(), threshold);
    row("relative_energy", d.relative_energy(), threshold);
    if (density == "maxwellian") {
        const double loss = parts.loss.l2_norm();
        row("annihilation_ratio", loss > 0 ? q.l2_norm() / loss : 0.0, cfg.real("annihilation_threshold"));
    }
    w.write("summary.csv", s.str());
}

void run_solve(const Config& cfg, Writer& w, RunResult& res) {
    const int dim_x = static_cast<int>(cfg.integer("dim_x"));
    const std::size_t n_x = dim_x == 0 ? 1 : count_of(cfg, "n_x", 2);
    const double L_x = cfg.real("L_x");
    const auto grid = qk::phase::maxwellian_grid(velocity_points(cfg), 1e-8, dim_x, n_x, L_x);
    const auto mix = density_of(cfg.text("density"));
    const double amp = dim_x == 0 ? 0.0 : cfg.real("perturbation");
    const auto f0 = qk::phase::Distribution::from_function(grid, 1, [&](const double* x, const double* v) {
        const double mod = dim_x == 0 ? 1.0 : 1.0 + amp * std::cos(qk::kPi * x[0] / L_x);
        return qk::phase::cplx(mod * mix({v[0], v[1], v[2]}), 0.0);
    });

    qk::solver::SolverConfig sc;
    sc.dt = cfg.real("dt");
    sc.T = cfg.real("T");
    sc.splitting = cfg.text("splitting") == "lie" ? qk::solver::Splitting::Lie : qk::solver::Splitting::Strang;
    sc.collision_substep =
        cfg.text("substep") == "euler" ? qk::solver::Substep::Euler : qk::solver::Substep::RK4;
    sc.diagnostics_every = count_of(cfg, "diagnostics_every", 1);
    sc.keep_snapshots = false;
    sc.blowup_factor = cfg.real("blowup_factor");
    sc.validate();

    const auto tr = qk::solver::solve(f0, sc, collision_of(cfg));
    for (const auto& wmsg : tr.warnings) res.notes.push_back(wmsg);
    w.write("trajectory.csv", tr.csv());
    w.write("marginal.csv", qk::phase::marginal_csv(qk::phase::velocity_marginal(tr.final_state(), 0), "v"));
}

void run_bbgky_ladder(const Config& cfg, Writer& w, RunResult&) {
    using qk::bbgky::LadderOp;
    const std::string op_name = cfg.text("op");
    const LadderOp op = op_name == "A"      ? LadderOp::A
                        : op_name == "B"    ? LadderOp::B
                        : op_name == "Qeps" ? LadderOp::Qeps
                                            : LadderOp::QepsMinusQ0;
    const auto ladder =
        qk::bbgky::EpsLadder::geometric(static_cast<int>(cfg.integer("m_lo")), static_cast<int>(cfg.integer("m_hi")), op);
    ladder.validate();
    const auto pot = potential_of(cfg);

    qk::ScalingReport rep;
    if (op == LadderOp::A || op == LadderOp::B) {
        qk::bbgky::PairFamily fam;
        fam.concentrated = cfg.text("family") == "concentrated";
        fam.center_width = cfg.real("center_width");
        fam.velocity_width = cfg.real("velocity_width");
        fam.samples = count_of(cfg, "samples", 1);
        if (op == LadderOp::B) fam.seed = seed_of(cfg, "op = B samples its outer integral");
        const double s = cfg.real("s_budget") < 0 ? pot.vanishing_order() : cfg.real("s_budget");
        rep = qk::bbgky::scaling_ladder(fam, pot, ladder, s);
    } else {
        const auto grid = qk::phase::maxwellian_grid(velocity_points(cfg));
        qk::collision::CollisionConfig cc;
        cc.pot = pot;
        rep = qk::bbgky::scaling_ladder(density_of("bimodal"), GaussianMixture::maxwellian(), grid, cc, ladder);
    }
    w.write("ladder.csv", rep.csv());
}

int run_quasifree(const Config& cfg, Writer& w, RunResult& res) {
    namespace qf = qk::quasifree;
    const std::string task = cfg.text("task");
    const double band = cfg.real("band");
    if (task == "normalization") {
        const std::size_t N = count_of(cfg, "N", 1);
        const double eps = cfg.real("eps");
        const std::size_t trials = count_of(cfg, "trials", 1);
        const auto est = qf::normalization_check(N, eps, trials, seed_of(cfg, "task = normalization is Monte Carlo"));
        const auto b = band_check(est.estimate, est.stderr_, 1.0, band);
        std::ostringstream s;
        s << "N,eps,trials,estimate,std_error,target,band,verdict\n"
          << N << "," << format_double(eps) << "," << trials << "," << format_double(est.estimate) << ","
          << format_double(est.stderr_) << ",1," << format_double(band) << "," << verdict(b.inconclusive, b.pass)
          << "\n";
        w.write("normalization.csv", s.str());
        std::ostringstream c;
        c << "k,class_size,class_mean\n";
        for (std::size_t k = 0; k < est.class_means.size(); ++k)
            c << k << "," << qf::class_size(static_cast<int>(N), static_cast<int>(k)) << ","
              << format_double(est.class_means[k]) << "\n";
        w.write("classes.csv", c.str());
        if (b.inconclusive) return kInconclusive;
        if (!b.pass) res.notes.push_back("normalization estimate outside the band");
    } else if (task == "random_walk") {
        const std::size_t n = count_of(cfg, "n", 1), trials = count_of(cfg, "trials", 2);
        const auto st = qf::random_walk_crossings(n, trials, seed_of(cfg, "task = random_walk is Monte Carlo"));
        const double target = 2.0 * std::sqrt(static_cast<double>(n)) / qk::kPi;
        const auto b = band_check(st.mean_crossings, st.crossings_stderr, target, band);
        std::ostringstream s;
        s << "n,trials,mean_crossings,crossings_std_error,target,mean_sq_displacement,displacement_std_error,"
             "verdict\n"
          << n << "," << trials << "," << format_double(st.mean_crossings) << ","
          << format_double(st.crossings_stderr) << "," << format_double(target) << ","
          << format_double(st.mean_sq_displacement) << "," << format_double(st.displacement_stderr) << ","
          << verdict(b.inconclusive, b.pass) << "\n";
        w.write("random_walk.csv", s.str());
        if (b.inconclusive) return kInconclusive;
        if (!b.pass) res.notes.push_back("mean crossings outside the band");
    } else if (task == "cycle_scaling") {
        const int lo = static_cast<int>(cfg.integer("m_lo")), hi = static_cast<int>(cfg.integer("m_hi"));
        if (hi - lo < 3) throw ConfigError("cycle_scaling needs m_hi - m_lo >= 3");
        std::vector<double> eps;
        for (int m = lo; m <= hi; ++m) eps.push_back(std::ldexp(1.0, -m));
        qf::CycleScalingOptions opt;
        opt.s = cfg.real("s");
        opt.delta = cfg.real("delta");
        w.write("ladder.csv", qf::cycle_scaling_fit(eps, opt).csv());
    } else {
        const long k_max = cfg.integer("k_max");
        if (k_max < 0 || k_max > 20) throw ConfigError("key 'k_max' must lie in [0, 20]");
        std::ostringstream s;
        s << "k,derangements\n";
        for (int k = 0; k <= k_max; ++k) s << k << "," << qf::derangements(k) << "\n";
        w.write("derangements.csv", s.str());
    }
    return kOk;
}

void run_boardgame(const Config& cfg, Writer& w, RunResult& res) {
    namespace bg = qk::boardgame;
    const long k = cfg.integer("k");
    if (k < 1 || k > 8) throw ConfigError("key 'k' must lie in [1, 8]");
    const int ki = static_cast<int>(k);
    std::uint64_t fact = 1;
    for (int i = 2; i <= ki; ++i) fact *= static_cast<std::uint64_t>(i);
    std::ostringstream counts;
    counts << "k,classes,maps,k_factorial\n"
           << k << "," << bg::count_skeletons(ki) << "," << bg::all_maps(ki).size() << "," << fact << "\n";
    w.write("counts.csv", counts.str());

    const auto rows = bg::tabulate(ki);
    if (cfg.flag("tabulate")) {
        std::ostringstream s;
        s << "skeleton,class_size,canonical,domain\n";
        for (const auto& r : rows)
            s << r.skeleton.code() << "," << r.class_size << "," << r.canonical.to_string() << ","
              << bg::format_domain(r.domain) << "\n";
        w.write("classes.csv", s.str());
    }
    const std::size_t points = count_of(cfg, "mc_points");
    if (points > 0) {
        const auto seed = seed_of(cfg, "mc_points > 0 samples random times");
        std::ostringstream s;
        s << "skeleton,points,mismatches\n";
        std::size_t total = 0;
        for (const auto& r : rows) {
            const std::size_t m = bg::region_mismatches(r.skeleton, points, seed);
            total += m;
            s << r.skeleton.code() << "," << points << "," << m << "\n";
        }
        w.write("regions.csv", s.str());
        if (total > 0) res.notes.push_back(std::to_string(total) + " time-domain mismatches");
    }
}

int run_illposed(const Config& cfg, Writer& w, RunResult& res) {
    namespace ip = qk::illposed;
    ip::DeflationConfig dc;
    dc.M = cfg.real("M");
    dc.N2 = cfg.real("N2");
    dc.s = cfg.real("s");
    dc.s1 = cfg.real("s1");
    dc.delta = cfg.real("delta");
    dc.J_sample = count_of(cfg, "J_sample", 1);
    const std::string task = cfg.text("task");
    const bool probe = task == "all" || task == "probe";
    if (probe) dc.seed = seed_of(cfg, "the loss probe is Monte Carlo");
    else if (cfg.given("seed")) dc.seed = seed_of(cfg, "");
    dc.validate();

    int code = kOk;
    if (task == "all" || task == "norms" || task == "probe") {
        const ip::BadData data(dc);
        if (task != "probe") {
            const auto audit = ip::overlap_audit(data, count_of(cfg, "audit_directions", 2));
            std::ostringstream s;
            s << "quantity,value\n"
              << "f_norm," << format_double(data.f_norm()) << "\n"
              << "g_norm," << format_double(data.g_norm()) << "\n"
              << "g_term_norm," << format_double(data.g_term_norm()) << "\n"
              << "J," << dc.J() << "\n"
              << "J_sample," << dc.J_sample << "\n"
              << "overlap_ratio," << format_double(audit.ratio()) << "\n"
              << "max_pair_cosine," << format_double(audit.max_pair_cosine) << "\n";
            w.write("norms.csv", s.str());
        }
        if (probe) {
            ip::LossProbeConfig lc;
            lc.mode = cfg.text("mode") == "cross_section" ? ip::KernelMode::CrossSection : ip::KernelMode::Surrogate;
            lc.pot = potential_of(cfg);
            lc.mc_nodes = count_of(cfg, "mc_nodes", 1);
            lc.n_points = count_of(cfg, "points", 1);
            lc.band = cfg.real("band");
            lc.seed = dc.seed;
            lc.validate();
            const auto r = ip::loss_probe(data, lc);
            w.write("probe.csv", r.csv());
            std::ostringstream s;
            s << "relative_error,std_error,band,inconclusive,passed\n"
              << format_double(r.relative_error) << "," << format_double(r.std_error) << ","
              << format_double(r.band) << "," << (r.inconclusive ? "true" : "false") << ","
              << (r.passed() ? "true" : "false") << "\n";
            w.write("probe_summary.csv", s.str());
            if (r.inconclusive) code = kInconclusive;
            else if (!r.passed()) res.notes.push_back("loss probe error outside the band");
        }
    }
    if (task == "all" || task == "curve")
        w.write("curve.csv", ip::deflation_curve(dc, count_of(cfg, "n_times", 2)).csv());
    return code;
}

}  // namespace

RunResult execute(const Config& cfg, const std::string& out_dir, std::ostream& log) {
    RunResult res;
    Writer w(out_dir, res);
    const std::string& name = cfg.subcommand().name;
    log << "qkinetic " << name << ": running\n";
    if (name == "collide-check") run_collide_check(cfg, w, res);
    else if (name == "solve") run_solve(cfg, w, res);
    else if (name == "bbgky-ladder") run_bbgky_ladder(cfg, w, res);
    else if (name == "quasifree") res.exit_code = run_quasifree(cfg, w, res);
    else if (name == "boardgame") run_boardgame(cfg, w, res);
    else if (name == "illposed") res.exit_code = run_illposed(cfg, w, res);
    else throw ConfigError("unknown subcommand '" + name + "'");
    return res;
}

}  // namespace qkcli
