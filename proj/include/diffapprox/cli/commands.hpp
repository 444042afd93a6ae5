#pragma once

#include <iosfwd>

#include "diffapprox/cli/config.hpp"
#include "diffapprox/cli/table.hpp"

namespace diffapprox::cli {

Table run_command(const ExperimentConfig& cfg);

// Full front end: parses argv, runs, writes output. Returns the process exit code
// (0 ok, 1 configuration error, 2 runtime or numeric error).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diffapprox::cli
