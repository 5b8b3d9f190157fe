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

#include "tunelab/gnn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tunelab/instances.hpp"

namespace tunelab::gnn {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InputError(std::string("bound input ") + name + " must be positive and finite");
  }
}

void check_common(const BoundInputs& in) {
  require_positive(in.m, "m");
  require_positive(in.d, "d");
  require_positive(in.gamma, "gamma");
  require_positive(in.C_dl, "C_dl");
  require_positive(in.C_z, "C_z");
  if (in.L < 1) throw InputError("bound input L must be at least 1");
}

double finish(double m, double dim_factor, double log_arg) {
  if (!(log_arg > 1.0)) {
    throw InputError("bound log argument is not above 1; the covering regime does not apply");
  }
  return 4.0 / m + 12.0 * std::sqrt(dim_factor * std::log(log_arg)) / std::sqrt(m);
}

}  // namespace

SgcBoundConstants sgc_bound_constants(const BoundInputs& in) {
  check_common(in);
  require_positive(in.C_dh, "C_dh");
  require_positive(in.C_theta, "C_theta");
  if (in.C_dl > in.C_dh) throw InputError("bound inputs need C_dl <= C_dh");
  SgcBoundConstants k;
  k.k1 = (1.0 + in.C_dh) / in.C_dl;
  if (k.k1 == 1.0) throw InputError("k1 = 1 makes the geometric sum degenerate");
  const double lead = 2.0 / in.gamma;
  const double dl3 = in.C_dl * in.C_dl * in.C_dl;
  const double geometric = (k.k1 - std::pow(k.k1, in.L)) / (1.0 - k.k1);
  k.k2 = lead * ((in.C_dl * in.C_dl + in.C_dh * in.C_dh + in.C_dh) / dl3) *
         std::pow(in.C_dh / in.C_dl, in.L - 1) * in.C_z * in.C_theta * geometric;
  k.k3 = lead * std::pow(k.k1, in.L) * in.C_z;
  return k;
}

GcanBoundConstants gcan_bound_constants(const BoundInputs& in) {
  check_common(in);
  require_positive(in.C_U, "C_U");
  require_positive(in.r, "r");
  const double spread = std::pow(std::max(1.0, 1.0 / in.C_dl), in.L - 1);
  const double cu = in.C_U;
  GcanBoundConstants k;
  k.k1 = std::pow(in.r, in.L) * std::pow(cu, in.L + 1) * in.C_z * spread;
  k.k2 = std::pow(in.r, in.L - 1) * std::pow(cu, in.L + 1) * in.C_z * spread +
         2.0 * in.r * cu / in.C_dl;
  k.k3 = (1.0 + 2.0 * in.r / in.C_dl) * std::pow(in.r, in.L - 1) * std::pow(cu, in.L) * in.C_z *
         spread;
  k.k4 = cu + 2.0 * in.r * cu / in.C_dl;
  if (k.k4 == 1.0) throw InputError("k4 = 1 makes the geometric sum degenerate");
  const double k4L = std::pow(k.k4, in.L);
  k.A = (2.0 / in.gamma) * k.k2 * (k4L - k.k4) / (k.k4 - 1.0);
  k.B = (2.0 * k.k3 * (k4L - k.k4) + in.gamma * (k.k4 * k.k4 - k.k4) * in.C_z) /
        (in.gamma * (k.k4 - 1.0));
  return k;
}

double rademacher_bound_sgc(const BoundInputs& in) {
  const SgcBoundConstants k = sgc_bound_constants(in);
  return finish(in.m, in.d + 1.0, 16.0 * std::sqrt(in.m) * std::max(k.k2, k.k3));
}

double rademacher_bound_gcan(const BoundInputs& in) {
  const GcanBoundConstants k = gcan_bound_constants(in);
  return finish(in.m, in.d * in.d + 1.0,
                8.0 * std::sqrt(in.m) * std::max(k.A, k.B * in.C_U * std::sqrt(in.d)));
}

nlohmann::json to_json(const BoundInputs& in) {
  return {{"m", in.m},       {"d", in.d},         {"L", in.L},     {"gamma", in.gamma},
          {"C_dl", in.C_dl}, {"C_dh", in.C_dh},   {"C_z", in.C_z}, {"C_theta", in.C_theta},
          {"C_w", in.C_w},   {"C_U", in.C_U},     {"C_V", in.C_V}, {"r", in.r}};
}

}  // namespace tunelab::gnn
