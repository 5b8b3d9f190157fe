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

#pragma once

#include "json.hpp"

namespace tunelab::gnn {

// Norm constants and sample size for the Rademacher bounds. SGC reads
// C_dl, C_dh, C_z, C_theta; GCAN reads C_dl, C_z, C_U and the branching
// factor r. C_w and C_V are carried for completeness; neither formula uses them.
struct BoundInputs {
  double m = 100;
  double d = 3;
  int L = 2;
  double gamma = 1.0;
  double C_dl = 1.0;
  double C_dh = 2.0;
  double C_z = 1.0;
  double C_theta = 1.0;
  double C_w = 1.0;
  double C_U = 1.0;
  double C_V = 1.0;
  double r = 2.0;
};

struct SgcBoundConstants {
  double k1 = 0.0;
  double k2 = 0.0;  // includes the 2 / gamma factor
  double k3 = 0.0;  // includes the 2 / gamma factor
};

struct GcanBoundConstants {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  double A = 0.0;
  double B = 0.0;
};

SgcBoundConstants sgc_bound_constants(const BoundInputs& in);
GcanBoundConstants gcan_bound_constants(const BoundInputs& in);

// 4/m + 12 sqrt((d + 1) ln(16 sqrt(m) max{k2, k3})) / sqrt(m). Logs are natural.
double rademacher_bound_sgc(const BoundInputs& in);
// 4/m + 12 sqrt((d^2 + 1) ln(8 sqrt(m) max{A, B C_U sqrt(d)})) / sqrt(m).
double rademacher_bound_gcan(const BoundInputs& in);

nlohmann::json to_json(const BoundInputs& in);

}  // namespace tunelab::gnn
