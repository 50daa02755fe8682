// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

namespace clcc {

/// Entry point for the clcc tool. Subcommands: synth, train, eval, augment,
/// report, ingest. Returns 0 on success, 2 on usage errors, 1 on runtime
/// errors (with a one-line machine-parseable message on stderr).
int run_cli(int argc, const char* const* argv);

} // namespace clcc
