// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/cli.hpp"

int main(int argc, char** argv) { return clcc::run_cli(argc, argv); }
