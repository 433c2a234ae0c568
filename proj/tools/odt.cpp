/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <iostream>
#include <string>
#include <vector>

#include "odt/cli.hpp"

int main(int argc, char** argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return odt::cli::run(args, std::cout, std::cerr);
}
