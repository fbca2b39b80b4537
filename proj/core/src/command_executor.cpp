#include "tunetree/command_executor.hpp"

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace tunetree {

namespace {

constexpr int kTimeoutExit = 124;
constexpr int kNotFoundExit = 127;

std::filesystem::path make_scratch_dir()
{
    std::string tmpl = (std::filesystem::temp_directory_path() / "tunetree-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) {
        throw SpawnFailure(std::string("cannot create scratch directory: ") + std::strerror(errno));
    }
    return tmpl;
}

} // namespace

std::string_view to_string(InjectionMode mode)
{
    switch (mode) {
    case InjectionMode::properties_file: return "properties-file";
    case InjectionMode::arg_substitution: return "arg-substitution";
    case InjectionMode::environment: return "environment";
    }
    return "?";
}

InjectionMode parse_injection_mode(std::string_view text)
{
    if (text == "properties-file") return InjectionMode::properties_file;
    if (text == "arg-substitution") return InjectionMode::arg_substitution;
    if (text == "environment") return InjectionMode::environment;
    throw DocumentError("unknown injection mode '" + std::string(text) + "'");
}

std::string environment_name(std::string_view parameter)
{
    std::string out = "TUNE_";
    for (char c : parameter) {
        out += (c == '.' || c == '-' || c == '/') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string shell_quote(std::string_view s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += '\'';
    return out;
}

std::string expand_template(std::string_view command_template, std::string_view replacement)
{
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto hit = command_template.find(kConfigPlaceholder, pos);
        if (hit == std::string_view::npos) break;
        out.append(command_template.substr(pos, hit - pos));
        out.append(replacement);
        pos = hit + kConfigPlaceholder.size();
    }
    out.append(command_template.substr(pos));
    return out;
}

CommandExecutor::CommandExecutor(CommandSpec spec, Catalog catalog)
    : spec_(std::move(spec))
    , catalog_(std::move(catalog))
{
    if (spec_.command_template.empty()) throw TemplateError("empty command template");
    const bool has_placeholder = spec_.command_template.find(kConfigPlaceholder) != std::string::npos;
    if (spec_.mode != InjectionMode::environment && !has_placeholder) {
        throw TemplateError("command template must reference " + std::string(kConfigPlaceholder) + " in " +
                            std::string(to_string(spec_.mode)) + " mode");
    }
    scratch_dir_ = make_scratch_dir();
}

CommandExecutor::~CommandExecutor()
{
    std::error_code ec;
    std::filesystem::remove_all(scratch_dir_, ec);
}

std::pair<std::string, std::vector<std::pair<std::string, std::string>>>
CommandExecutor::prepare(const Configuration& config, const std::filesystem::path& scratch) const
{
    std::vector<std::pair<std::string, std::string>> env;
    switch (spec_.mode) {
    case InjectionMode::properties_file: {
        std::ofstream out(scratch);
        out << to_properties(config, catalog_);
        if (!out) throw SpawnFailure("cannot write properties file " + scratch.string());
        return {expand_template(spec_.command_template, shell_quote(scratch.string())), env};
    }
    case InjectionMode::arg_substitution: {
        std::string args;
        for (const auto& [name, value] : config.settings) {
            if (!args.empty()) args += ' ';
            args += "--conf " + shell_quote(name + "=" + catalog_.at(name).render(value));
        }
        return {expand_template(spec_.command_template, args), env};
    }
    case InjectionMode::environment:
        for (const auto& [name, value] : config.settings) {
            env.emplace_back(environment_name(name), catalog_.at(name).render(value));
        }
        return {expand_template(spec_.command_template, ""), env};
    }
    return {};
}

RunOutcome CommandExecutor::measure(const Configuration& config, std::optional<double> timeout_s)
{
    const auto scratch = scratch_dir_ / ("trial-" + std::to_string(run_counter_++) + ".properties");
    auto [command, extra_env] = prepare(config, scratch);

    // Everything the child touches is built before fork().
    std::vector<std::string> env_storage;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        bool overridden = false;
        for (const auto& [k, v] : extra_env) {
            if (entry.starts_with(k + "=")) overridden = true;
        }
        if (!overridden) env_storage.emplace_back(entry);
    }
    for (const auto& [k, v] : extra_env) env_storage.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& s : env_storage) envp.push_back(s.data());
    envp.push_back(nullptr);

    std::string sh = "/bin/sh", dash_c = "-c";
    std::vector<char*> argv{sh.data(), dash_c.data(), command.data(), nullptr};
    const std::string workdir = spec_.workdir.string();

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw SpawnFailure(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(STDERR_FILENO, STDOUT_FILENO);
        if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) ::_exit(kNotFoundExit);
        ::execve(argv[0], argv.data(), envp.data());
        ::_exit(kNotFoundExit);
    }
    ::setpgid(pid, pid);

    int status = 0;
    bool killed = false;
    while (true) {
        const pid_t w = ::waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) throw ExecutorFailure(std::string("waitpid failed: ") + std::strerror(errno));
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        if (timeout_s && elapsed.count() > *timeout_s) {
            ::kill(-pid, SIGKILL);
            while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
            }
            killed = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::microseconds(500));
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    // Reap anything the job left behind in its group.
    ::kill(-pid, SIGKILL);

    std::error_code ec;
    std::filesystem::remove(scratch, ec);

    if (killed) return RunOutcome::timeout();
    if (WIFEXITED(status)) {
        const int code = WEXITSTATUS(status);
        if (code == 0) return RunOutcome::ok(elapsed.count());
        if (code == kTimeoutExit) return RunOutcome::timeout();
        if (code == kNotFoundExit) throw SpawnFailure("command not runnable (exit 127): " + command);
        return RunOutcome::crash();
    }
    return RunOutcome::crash();
}

nlohmann::json CommandExecutor::descriptor() const
{
    return {
        {"kind", "command"},
        {"template", spec_.command_template},
        {"workdir", spec_.workdir.string()},
        {"inject", to_string(spec_.mode)},
        {"parallel_safe", spec_.parallel_safe},
        {"catalog", to_json(catalog_)},
    };
}

std::unique_ptr<TrialExecutor> command_executor(CommandSpec spec, Catalog catalog)
{
    return std::make_unique<CommandExecutor>(std::move(spec), std::move(catalog));
}

} // namespace tunetree
