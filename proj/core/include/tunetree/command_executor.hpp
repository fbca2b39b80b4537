#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tunetree/runner.hpp"

namespace tunetree {

/// How a configuration reaches the launched command.
enum class InjectionMode {
    properties_file,   // {CONFIG} -> path of a Spark properties file
    arg_substitution,  // {CONFIG} -> --conf name=value ...
    environment,       // TUNE_<NAME>=value for every setting
};

std::string_view to_string(InjectionMode mode);
InjectionMode parse_injection_mode(std::string_view text);

inline constexpr std::string_view kConfigPlaceholder = "{CONFIG}";

struct CommandSpec {
    std::string command_template;  // run through /bin/sh -c
    std::filesystem::path workdir = ".";
    InjectionMode mode = InjectionMode::properties_file;
    bool parallel_safe = false;
};

/// `spark.shuffle.compress` -> `TUNE_SPARK_SHUFFLE_COMPRESS`.
std::string environment_name(std::string_view parameter);

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(std::string_view s);

/// Replaces every {CONFIG} in the template.
std::string expand_template(std::string_view command_template, std::string_view replacement);

/// Launches a shell command per run and wall-clocks it. Exit 0 is a
/// runtime, any other exit (or a signal) a crash, exit 124 or the harness's
/// own kill a timeout. On timeout the whole process group is killed.
class CommandExecutor final : public TrialExecutor {
public:
    /// Throws TemplateError when the template lacks {CONFIG} in a mode that
    /// needs it.
    CommandExecutor(CommandSpec spec, Catalog catalog);
    ~CommandExecutor() override;

    CommandExecutor(const CommandExecutor&) = delete;
    CommandExecutor& operator=(const CommandExecutor&) = delete;

    RunOutcome measure(const Configuration& config, std::optional<double> timeout_s) override;
    bool deterministic() const override { return false; }
    bool parallel_safe() const override { return spec_.parallel_safe; }
    std::string backend() const override { return "command"; }
    nlohmann::json descriptor() const override;

    const CommandSpec& spec() const noexcept { return spec_; }

    /// Expanded command line and extra environment for `config`. A
    /// properties file, when the mode needs one, is written to `scratch`.
    std::pair<std::string, std::vector<std::pair<std::string, std::string>>>
    prepare(const Configuration& config, const std::filesystem::path& scratch) const;

private:
    CommandSpec spec_;
    Catalog catalog_;
    std::filesystem::path scratch_dir_;
    unsigned long run_counter_ = 0;
};

std::unique_ptr<TrialExecutor> command_executor(CommandSpec spec, Catalog catalog);

} // namespace tunetree
