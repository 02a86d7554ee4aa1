#pragma once

namespace evograd {

// Command-line front end: check | solve | verify-gradient | probe-necessity |
// presets.  Returns the process exit status (0: all requested checks passed,
// 1: a check failed or a run aborted, 2: usage error).
int run_cli(int argc, const char* const* argv);

}  // namespace evograd
