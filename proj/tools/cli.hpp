#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace influence::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 2,
    kProviderFailure = 3,
    kPartial = 4,
};

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace influence::cli
