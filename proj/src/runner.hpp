#pragma once

namespace adaptsurv {

// Full subcommand dispatch (simulate | score | estimate | monitor |
// boundaries | validate). Returns the process exit code: 0 on success,
// 1 on domain errors, 2 on usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace adaptsurv
