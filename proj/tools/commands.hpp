#pragma once
// Command-line front end: fit, scree, ordinate, and bench subcommands with a
// fixed exit-code contract (0 ok, 2 bad configuration, 3 input parse error,
// 4 engine error). Data goes to files under --out; messages go to stderr.

namespace paa::cli {

int run_cli(int argc, char** argv);

}  // namespace paa::cli
