#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "qkinetic/numerics.hpp"
#include "qkinetic/parallel.hpp"
#include "qkinetic/version.hpp"

namespace qkcli {

namespace {

const char* kFormatHelp =
    "Config files hold 'key = value' lines; '#' starts a comment. Unknown keys,\n"
    "duplicates and malformed lines are rejected with file:line diagnostics.\n"
    "Command-line --key options override the file. Each run writes its CSVs and\n"
    "manifest.txt into --out; the manifest is itself a config, so\n"
    "  qkinetic <subcommand> --config <out>/manifest.txt --out <other>\n"
    "reproduces the CSVs byte for byte.\n"
    "\n"
    "Exit codes: 0 ok, 2 configuration error, 3 numerical guard tripped,\n"
    "4 Monte Carlo result inconclusive (error bar straddles the band), 1 other failure.\n"
    "Threads: --threads N, else QKINETIC_THREADS, else 1. Results do not depend on it.";

std::string footer(const Subcommand& sub) {
    std::ostringstream os;
    os << "Outputs (CSV columns):\n" << sub.outputs << "  manifest.txt  config echo with version, threads and wall time\n\n"
       << kFormatHelp;
    return os.str();
}

std::string describe(const KeySpec& k) {
    std::string h = k.help;
    if (k.kind == KeyKind::Choice) {
        std::string list;
        for (const auto& c : k.choices) list += (list.empty() ? "" : "|") + c;
        h += " {" + list + "}";
    }
    if (k.kind != KeyKind::Flag) h += k.fallback.empty() ? " (no default)" : " (default " + k.fallback + ")";
    return h;
}

std::string manifest_text(const Config& cfg, unsigned threads, double wall, const RunResult& res) {
    std::ostringstream os;
    os << "# qkinetic " << qk::kVersion << " manifest\n"
       << "# subcommand: " << cfg.subcommand().name << "\n"
       << "# threads: " << threads << "\n"
       << "# wall_time_s: " << qk::format_double(wall) << "\n"
       << "# exit_code: " << res.exit_code << "\n"
       << "# outputs:";
    for (const auto& o : res.outputs) os << " " << o;
    os << "\n";
    for (const auto& n : res.notes) os << "# note: " << n << "\n";
    os << cfg.echo();
    return os.str();
}

struct SubOptions {
    const Subcommand* sub = nullptr;
    CLI::App* app = nullptr;
    std::string config_path;
    std::string out_dir = "qkinetic_out";
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

}  // namespace

int run_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"qkinetic: numerical experiments for quantum-to-kinetic limits"};
    app.set_version_flag("--version", std::string(qk::kVersion));
    app.require_subcommand(1);
    app.footer(kFormatHelp);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: QKINETIC_THREADS, else 1)")
        ->check(CLI::NonNegativeNumber);

    std::vector<SubOptions> subs(subcommands().size());
    for (std::size_t i = 0; i < subcommands().size(); ++i) {
        const Subcommand& sc = subcommands()[i];
        SubOptions& so = subs[i];
        so.sub = &sc;
        so.app = app.add_subcommand(sc.name, sc.summary);
        so.app->footer(footer(sc));
        so.app->add_option("--config", so.config_path, "key = value config file");
        so.app->add_option("--out", so.out_dir, "output directory")->capture_default_str();
        so.app->add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
        for (const auto& k : sc.keys) {
            const std::string help = describe(k);
            if (k.kind == KeyKind::Flag) so.options[k.name] = so.app->add_flag("--" + k.name, help);
            else so.options[k.name] = so.app->add_option("--" + k.name, so.values[k.name], help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    }

    const SubOptions* chosen = nullptr;
    for (const auto& so : subs)
        if (so.app->parsed()) chosen = &so;
    if (chosen == nullptr) {
        err << "no subcommand given\n";
        return kConfig;
    }

    const auto start = std::chrono::steady_clock::now();
    Config cfg(*chosen->sub);
    RunResult res;
    try {
        if (!chosen->config_path.empty()) cfg.load_file(chosen->config_path);
        for (const auto& [name, opt] : chosen->options) {
            if (opt->count() == 0) continue;
            cfg.set(name, opt->get_expected() == 0 ? "true" : chosen->values.at(name), "--" + name);
        }
        qk::par::set_thread_count(static_cast<unsigned>(threads));
        res = execute(cfg, chosen->out_dir, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const qk::ArgumentError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const qk::UnsupportedError& e) {
        err << "unsupported: " << e.what() << "\n";
        return kConfig;
    } catch (const qk::NumericalGuardError& e) {
        err << "numerical guard: " << e.what() << "\n";
        return kGuard;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInternal;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const unsigned used = qk::par::thread_count();

    std::ofstream(std::filesystem::path(chosen->out_dir) / "manifest.txt", std::ios::binary)
        << manifest_text(cfg, used, wall, res);
    for (const auto& n : res.notes) err << "note: " << n << "\n";
    for (const auto& o : res.outputs) out << (std::filesystem::path(chosen->out_dir) / o).string() << "\n";
    if (res.exit_code == kInconclusive) err << "result inconclusive at this sample size\n";
    return res.exit_code;
}

}  // namespace qkcli
