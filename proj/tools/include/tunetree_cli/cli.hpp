#pragma once

#include <filesystem>
#include <ostream>

namespace tunetree::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_backend = 2,
    exit_all_crashed = 3,
};

/// Fixture directory: $TUNETREE_DATA_DIR, else the one configured at build time.
std::filesystem::path data_dir();

/// Entry point of the `tunetree` tool. Reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tunetree::cli
