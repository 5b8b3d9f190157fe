// Copyright 2026 The tunelab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdio>

#include "tunelab/solvers.hpp"

// Every test binary also checks that no solve exceeded the residual tolerance.
int main(int argc, char** argv) {
  doctest::Context context(argc, argv);
  const int rc = context.run();
  if (context.shouldExit()) return rc;
  const auto stats = tunelab::residual_stats();
  std::printf("solver residuals: %llu solves, max %.3e, %llu over tolerance\n",
              static_cast<unsigned long long>(stats.solves), stats.max_residual,
              static_cast<unsigned long long>(stats.violations));
  if (stats.violations > 0 || stats.max_residual > tunelab::kResidualTolerance) return rc ? rc : 3;
  return rc;
}
