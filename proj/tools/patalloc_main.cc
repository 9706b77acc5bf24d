// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "patalloc/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return patalloc::run_cli(args, std::cout, std::cerr);
}
