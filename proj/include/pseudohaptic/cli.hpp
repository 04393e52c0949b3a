#pragma once

#include <iosfwd>

namespace pseudohaptic {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

// Command-line entry point shared by the tool and the tests.
//
//   simulate --study S --participants N --seed X [--observer FILE]
//            [--tune-p P] [--threads T] --out DIR
//   analyze  --in CSV_OR_DIR --out DIR
//   serve    --port P [--address A] [--data DIR] [--seed X] [--seed-policy client|derived]
//
// Any option may also come from the file given with --config (INI or TOML,
// one section per subcommand); command-line flags take precedence.
// Returns 0 on success, 2 on usage errors, 3 on data errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pseudohaptic
