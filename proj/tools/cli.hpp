// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// The ctxk command line: parse, extract, generate, stats, train, distill,
// eval and synth subcommands over JSON-lines artifacts.

#ifndef CTXK_TOOLS_CLI_HPP_
#define CTXK_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace ctxk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// argv[0] is the program name. Summaries go to `out`; usage text and the
// single-line JSON error go to `err`.
int run_command(const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err);

}  // namespace ctxk::cli

#endif  // CTXK_TOOLS_CLI_HPP_
