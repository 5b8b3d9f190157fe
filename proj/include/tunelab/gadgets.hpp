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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "tunelab/instances.hpp"
#include "tunelab/solvers.hpp"

namespace tunelab {

// Four-node component whose unlabeled node u changes prediction exactly once,
// at designed_threshold.
struct GadgetSpec {
  FamilySpec family;
  double designed_threshold = 0.0;
  double x = 0.0;  // derived edge weight

  int node_u = 3;
  int class_below = 0;  // prediction of u below the threshold
  int class_above = 1;
  LabelEncoding encoding = LabelEncoding::OneHot;

  std::vector<std::vector<double>> weights() const;
  // Node -> label for the labeled roles.
  std::vector<std::pair<int, int>> labels() const;
};

// Open interval of admissible thresholds for a family.
struct ThresholdRange {
  double lo;
  double hi;
};
ThresholdRange admissible_thresholds(const FamilySpec& family);

// Throws InputError outside the admissible range.
GadgetSpec make_gadget_spec(const FamilySpec& family, double threshold);

// Truth of u defaults to class_above.
ProblemInstance build_gadget(const GadgetSpec& spec);
ProblemInstance build_gadget(const GadgetSpec& spec, int truth_u);

struct FlipMeasurement {
  bool ok = false;
  int sweep_flips = 0;  // prediction changes of u across the dense sweep
  double measured = 0.0;
  double designed = 0.0;
  int class_below = 0;
  int class_above = 0;
  std::string message;
};

// Dense sweep over the family domain counts flips of u, then bisects the
// bracketing cell to `tol`.
FlipMeasurement verify_flip(const ProblemInstance& gadget, const GadgetSpec& spec,
                            double tol = 1e-9, int sweep_points = 1000);

struct AlternatingInstance {
  ProblemInstance instance;
  std::vector<double> thresholds;
  std::vector<GadgetSpec> gadgets;
  double l_min = 0.0;
  double l_max = 0.0;
  double witness = 0.0;
};

// Disjoint union of one gadget per threshold. The truth of u alternates
// starting with the below-threshold class.
AlternatingInstance build_alternating(const FamilySpec& family,
                                      const std::vector<double>& thresholds);

struct ShatterFamily {
  FamilySpec family;
  int m = 0;
  // 2^m - 1 increasing thresholds, cutting the ladder into 2^m cells.
  std::vector<double> thresholds;
  // One parameter inside each cell; cell t realizes pattern t.
  std::vector<double> cell_points;
  std::vector<AlternatingInstance> members;
  std::vector<double> witnesses;
};

// Ladder range used for shattering, in parameter space.
ThresholdRange shatter_ladder_range(const FamilySpec& family);

ShatterFamily build_shatter_family(const FamilySpec& family, int m);

struct ShatterReport {
  int m = 0;
  std::vector<std::uint32_t> patterns_achieved;  // sorted, bit i = instance i
  std::vector<std::uint32_t> missing;
  bool pass = false;
};

ShatterReport verify_shattering(const ShatterFamily& family);

// Sidecar metadata {family, thresholds, witnesses, truth}.
nlohmann::json shatter_sidecar(const ShatterFamily& family);
nlohmann::json gadget_sidecar(const GadgetSpec& spec, const ProblemInstance& gadget);

}  // namespace tunelab
