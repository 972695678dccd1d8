#pragma once

// Batch runner behind the qkinetic executable: strict key = value configs,
// one subcommand per module, CSV outputs plus a manifest per run.

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkcli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kGuard = 3, kInconclusive = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class KeyKind { Int, Real, Text, Choice, Flag };

struct KeySpec {
    std::string name;
    KeyKind kind = KeyKind::Real;
    std::string fallback;  // empty: no default (the key must be given when needed)
    std::string help;
    std::vector<std::string> choices;
};

struct Subcommand {
    std::string name;
    std::string summary;
    std::vector<KeySpec> keys;
    /// Output files and their column schemas, for --help.
    std::string outputs;
};

const std::vector<Subcommand>& subcommands();
const Subcommand& find_subcommand(const std::string& name);

/// Resolved settings of one run. Every value remembers where it came from.
class Config {
public:
    explicit Config(const Subcommand& sub);

    /// Reads `key = value` lines; `#` starts a comment. Throws ConfigError
    /// with "path:line:" for unknown keys, malformed lines, duplicates, bad
    /// values, and for files without a single setting.
    void load_file(const std::string& path);
    /// Parses configuration text; `origin` prefixes diagnostics.
    void load_text(const std::string& text, const std::string& origin);
    /// Command-line override.
    void set(const std::string& key, const std::string& value, const std::string& origin = "command line");

    bool given(const std::string& key) const;
    std::string text(const std::string& key) const;
    long integer(const std::string& key) const;
    double real(const std::string& key) const;
    bool flag(const std::string& key) const;
    /// Throws ConfigError unless `key` was set explicitly.
    void require(const std::string& key, const std::string& why) const;

    const Subcommand& subcommand() const { return sub_; }
    /// Every key with its resolved value, as config text.
    std::string echo() const;

private:
    const KeySpec& spec(const std::string& key, const std::string& where) const;
    void check_value(const KeySpec& ks, const std::string& value, const std::string& where) const;

    const Subcommand& sub_;
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> origin_;
};

struct RunResult {
    int exit_code = kOk;
    std::vector<std::string> outputs;
    std::vector<std::string> notes;
};

/// Executes a subcommand, writing CSVs into out_dir (created if needed).
/// Library exceptions propagate; run_main maps them to exit codes.
RunResult execute(const Config& cfg, const std::string& out_dir, std::ostream& log);

/// Entry point of the executable. Returns the process exit code.
int run_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace qkcli
