#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dht {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_failure = 2,
    exit_rejected = 3,
    exit_inconclusive = 4,
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

} // namespace dht
