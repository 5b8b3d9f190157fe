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

#include <optional>
#include <span>
#include <vector>

#include "tunelab/instances.hpp"
#include "tunelab/solvers.hpp"

namespace tunelab {

struct ProfilerConfig {
  // Parameter-space width below which a bracketed change is a point.
  double tolerance = 1e-9;
  int initial_grid = 256;
  int max_depth = 60;
  EvalSet eval = EvalSet::Transductive;
  // Defaults to default_domain(family).
  std::optional<ParamDomain> domain;
};

struct FlipRecord {
  int instance = 0;
  int node = 0;
  int class_from = 0;  // prediction just below the breakpoint
  int class_to = 0;    // prediction just above
  double location = 0.0;
};

// An interval where subdivision could not certify the prediction pattern.
struct UnresolvedInterval {
  int instance = 0;
  double lo = 0.0;
  double hi = 0.0;
};

// Piecewise-constant average 0-1 loss over a parameter domain.
struct LossProfile {
  Family family = Family::Alpha;
  ParamDomain domain{0.0, 1.0, false};
  std::vector<double> breakpoints;   // strictly increasing, inside (lo, hi)
  std::vector<int> multiplicity;     // merged co-located changes per breakpoint
  std::vector<double> piece_losses;  // breakpoints.size() + 1 entries
  std::vector<FlipRecord> flips;
  std::vector<UnresolvedInterval> unresolved;
  int num_instances = 1;

  std::size_t piece_index(double param) const;
  double loss_at(double param) const;
  // Bounds of piece k in parameter space.
  double piece_lo(std::size_t k) const;
  double piece_hi(std::size_t k) const;
  bool resolved() const { return unresolved.empty(); }
};

// F_ij - F_ik at one parameter value.
double score_gap(const ProblemInstance& instance, const FamilyParam& param, int node,
                 int class_j, int class_k);
double score_gap(const PropagationSolver& solver, const FamilyParam& param, int node,
                 int class_j, int class_k);

LossProfile profile(const ProblemInstance& instance, const FamilySpec& family,
                    const ProfilerConfig& config = {});
// Per-instance profiles averaged uniformly over the set.
LossProfile profile(std::span<const ProblemInstance> instances, const FamilySpec& family,
                    const ProfilerConfig& config = {});

struct SweepPoint {
  double param = 0.0;
  double loss = 0.0;
};

// Reference evaluation by full solves on a uniform grid in the domain's
// coordinate (log-uniform for lambda), endpoints included.
std::vector<SweepPoint> dense_sweep_oracle(const ProblemInstance& instance,
                                           const FamilySpec& family, int grid_size,
                                           EvalSet eval = EvalSet::Transductive,
                                           std::optional<ParamDomain> domain = std::nullopt);

// Sign changes of every score gap F_ij - F_ik (j < k) along a dense sweep.
struct GapSignChanges {
  int n = 0;
  int num_classes = 0;
  // sign_changes[node][pair], pair enumerates j < k in lexicographic order.
  std::vector<std::vector<int>> sign_changes;
  // prediction changes between the two classes of each pair.
  std::vector<std::vector<int>> prediction_flips;
  int max_sign_changes() const;
  int max_prediction_flips() const;
};

GapSignChanges count_gap_sign_changes(const ProblemInstance& instance,
                                      const FamilySpec& family, int grid_size,
                                      std::optional<ParamDomain> domain = std::nullopt);

}  // namespace tunelab
