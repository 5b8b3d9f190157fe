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
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "tunelab/instances.hpp"

namespace tunelab {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Family { Alpha, Lambda, Delta };

const char* family_name(Family family);
Family parse_family(const std::string& name);

struct AlphaParam {
  double alpha;
};
struct LambdaParam {
  double lambda;
};
struct DeltaParam {
  double delta;
  double c_const = 0.99;
};

using FamilyParam = std::variant<AlphaParam, LambdaParam, DeltaParam>;

Family family_of(const FamilyParam& param);
double param_value(const FamilyParam& param);

// One-parameter slice of a family: the Delta family fixes c_const.
struct FamilySpec {
  Family family = Family::Alpha;
  double c_const = 0.99;

  FamilyParam at(double value) const;
};

// Domain used by sweeps, profiles and tuning. Alpha is clamped to
// [1e-6, 1 - 1e-6] and lambda to [1e-6, 1e6]; lambda is swept in log space.
struct ParamDomain {
  double lo;
  double hi;
  bool log_scale;

  double to_coord(double p) const;
  double from_coord(double t) const;
};
ParamDomain default_domain(Family family);

// Label encoding for the right-hand side. Signed is the binary {-1, 0, +1}
// vector form (class 1 -> +1, class 0 -> -1, unlabeled -> 0).
enum class LabelEncoding { OneHot, Signed };

struct ScoreMatrix {
  Eigen::MatrixXd scores;
  FamilyParam provenance = AlphaParam{0.5};
  LabelEncoding encoding = LabelEncoding::OneHot;
  // ||A F - b||_inf of the family's linear system.
  double residual = 0.0;
};

// Process-wide record of solver residuals. Solves rejected for exceeding
// kResidualTolerance count as violations and are excluded from max_residual.
struct ResidualStats {
  std::uint64_t solves = 0;
  double max_residual = 0.0;
  std::uint64_t violations = 0;
};
ResidualStats residual_stats();
void reset_residual_stats();

inline constexpr double kResidualTolerance = 1e-8;
inline constexpr int kDenseLimit = 2048;

// Prepared solver for one instance. Degrees, adjacency and the label matrix are
// computed once; solve() may be called concurrently.
class PropagationSolver {
 public:
  explicit PropagationSolver(const ProblemInstance& instance,
                             LabelEncoding encoding = LabelEncoding::OneHot);

  ScoreMatrix solve(const FamilyParam& param) const;

  int n() const { return n_; }
  int num_classes() const { return num_classes_; }
  LabelEncoding encoding() const { return encoding_; }
  const Eigen::MatrixXd& rhs_labels() const { return y_; }

 private:
  ScoreMatrix solve_dense(const FamilyParam& param) const;
  ScoreMatrix solve_sparse(const FamilyParam& param) const;
  void check_labeled_components() const;

  int n_;
  int num_classes_;
  LabelEncoding encoding_;
  bool dense_;
  Eigen::MatrixXd w_;  // dense path only
  Eigen::SparseMatrix<double> w_sparse_;  // sparse path only
  DegreeData degrees_;
  Eigen::MatrixXd y_;
  Eigen::VectorXd labeled_;
  std::vector<int> components_;
};

ScoreMatrix solve(const ProblemInstance& instance, const FamilyParam& param,
                  LabelEncoding encoding = LabelEncoding::OneHot);
// F = (1 - alpha) (I - alpha S)^{-1} Y,  S = D^{-1/2} W D^{-1/2}.
ScoreMatrix solve_local_global(const ProblemInstance& instance, double alpha);
// F = (L + lambda Delta)^{-1} lambda Y,  L = D - W.
ScoreMatrix solve_smoothing(const ProblemInstance& instance, double lambda,
                            LabelEncoding encoding = LabelEncoding::OneHot);
// F = (I - c S)^{-1} Y,  S = D^{-delta} W D^{delta - 1}.
ScoreMatrix solve_normalized_adj(const ProblemInstance& instance, double delta,
                                 double c_const = 0.99);

// Row argmax, ties to the lowest class. A single signed column predicts class 1
// for strictly positive scores.
std::vector<int> predict(const ScoreMatrix& f);
std::vector<int> predict(const Eigen::MatrixXd& scores,
                         LabelEncoding encoding = LabelEncoding::OneHot);

// Which nodes a loss is computed over. Transductive counts every node in the
// denominator but scores labeled nodes by their given label, so only
// unlabeled predictions can be wrong.
enum class EvalSet { All, Unlabeled, Transductive };

// Misclassification fraction over the evaluated nodes.
double zero_one_loss(std::span<const int> predictions, std::span<const int> truth,
                     std::span<const int> eval_nodes);
// Uses the instance's ground truth; throws InputError when absent.
double zero_one_loss(const ProblemInstance& instance,
                     std::span<const int> predictions,
                     EvalSet eval = EvalSet::Transductive);

// l_gamma(f, y) with a = (1 - 2 f) y: 1 if a > 0, 1 + a / gamma on
// [-gamma, 0], 0 below -gamma.
double margin_loss(double score, int y_sign, double gamma);

}  // namespace tunelab
