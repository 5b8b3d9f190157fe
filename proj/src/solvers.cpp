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

#include "tunelab/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>

namespace tunelab {

namespace {

std::atomic<std::uint64_t> g_solves{0};
std::atomic<double> g_max_residual{0.0};
std::atomic<std::uint64_t> g_violations{0};

void record_residual(double r) {
  g_solves.fetch_add(1, std::memory_order_relaxed);
  double prev = g_max_residual.load(std::memory_order_relaxed);
  while (r > prev &&
         !g_max_residual.compare_exchange_weak(prev, r, std::memory_order_relaxed)) {
  }
}

void check_param(const FamilyParam& param) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AlphaParam>) {
          if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
            throw InputError("alpha must lie in (0, 1)");
          }
        } else if constexpr (std::is_same_v<T, LambdaParam>) {
          if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) {
            throw InputError("lambda must be positive and finite");
          }
        } else {
          if (!(p.delta >= 0.0 && p.delta <= 1.0)) {
            throw InputError("delta must lie in [0, 1]");
          }
          if (!(p.c_const > 0.0 && p.c_const < 1.0)) {
            throw InputError("c_const must lie in (0, 1)");
          }
        }
      },
      param);
}

double inf_norm(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

const char* family_name(Family family) {
  switch (family) {
    case Family::Alpha:
      return "alpha";
    case Family::Lambda:
      return "lambda";
    case Family::Delta:
      return "delta";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "alpha") return Family::Alpha;
  if (name == "lambda") return Family::Lambda;
  if (name == "delta") return Family::Delta;
  throw InputError("unknown family \"" + name + "\" (expected alpha|lambda|delta)");
}

Family family_of(const FamilyParam& param) {
  return static_cast<Family>(param.index());
}

double param_value(const FamilyParam& param) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AlphaParam>) return p.alpha;
        else if constexpr (std::is_same_v<T, LambdaParam>) return p.lambda;
        else return p.delta;
      },
      param);
}

FamilyParam FamilySpec::at(double value) const {
  switch (family) {
    case Family::Alpha:
      return AlphaParam{value};
    case Family::Lambda:
      return LambdaParam{value};
    case Family::Delta:
      return DeltaParam{value, c_const};
  }
  return AlphaParam{value};
}

double ParamDomain::to_coord(double p) const { return log_scale ? std::log(p) : p; }
double ParamDomain::from_coord(double t) const { return log_scale ? std::exp(t) : t; }

ParamDomain default_domain(Family family) {
  switch (family) {
    case Family::Alpha:
      return {1e-6, 1.0 - 1e-6, false};
    case Family::Lambda:
      return {1e-6, 1e6, true};
    case Family::Delta:
      return {0.0, 1.0, false};
  }
  return {0.0, 1.0, false};
}

ResidualStats residual_stats() {
  return {g_solves.load(), g_max_residual.load(), g_violations.load()};
}

void reset_residual_stats() {
  g_solves.store(0);
  g_max_residual.store(0.0);
  g_violations.store(0);
}

PropagationSolver::PropagationSolver(const ProblemInstance& instance,
                                     LabelEncoding encoding)
    : n_(instance.n()),
      num_classes_(instance.num_classes()),
      encoding_(encoding),
      dense_(instance.n() <= kDenseLimit),
      degrees_((require_valid(instance), instance.degrees())),
      labeled_(labeled_indicator(instance)),
      components_(component_ids(instance)) {
  if (dense_) {
    w_ = instance.dense_adjacency();
  } else {
    w_sparse_ = instance.sparse_adjacency();
  }
  if (encoding_ == LabelEncoding::Signed) {
    if (num_classes_ != 2) throw InputError("signed label encoding requires 2 classes");
    y_ = Eigen::MatrixXd::Zero(n_, 1);
    for (const auto& [node, cls] : instance.labels()) y_(node, 0) = cls == 1 ? 1.0 : -1.0;
  } else {
    y_ = label_matrix(instance);
  }
}

void PropagationSolver::check_labeled_components() const {
  const int num_components =
      components_.empty() ? 0 : *std::max_element(components_.begin(), components_.end()) + 1;
  std::vector<bool> has_label(num_components, false);
  for (int i = 0; i < n_; ++i) {
    if (labeled_[i] > 0.0) has_label[components_[i]] = true;
  }
  for (int comp = 0; comp < num_components; ++comp) {
    if (has_label[comp]) continue;
    std::ostringstream msg;
    msg << "smoothing system is singular: connected component " << comp
        << " (nodes";
    int shown = 0;
    for (int i = 0; i < n_ && shown < 8; ++i) {
      if (components_[i] == comp) {
        msg << " " << i;
        ++shown;
      }
    }
    msg << (shown == 8 ? " ...)" : ")") << " has no labeled node";
    throw SolverError(msg.str());
  }
}

ScoreMatrix PropagationSolver::solve(const FamilyParam& param) const {
  check_param(param);
  if (family_of(param) == Family::Lambda) check_labeled_components();
  ScoreMatrix result = dense_ ? solve_dense(param) : solve_sparse(param);
  if (!result.scores.allFinite() || !(result.residual <= kResidualTolerance)) {
    g_violations.fetch_add(1, std::memory_order_relaxed);
    std::ostringstream msg;
    msg << family_name(family_of(param)) << " system at " << param_value(param)
        << " is singular or ill-conditioned (residual " << result.residual << ")";
    throw SolverError(msg.str());
  }
  record_residual(result.residual);
  return result;
}

ScoreMatrix PropagationSolver::solve_dense(const FamilyParam& param) const {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  switch (family_of(param)) {
    case Family::Alpha: {
      const double alpha = std::get<AlphaParam>(param).alpha;
      const auto& s = degrees_.inv_sqrt();
      a = -alpha * (s.asDiagonal() * w_ * s.asDiagonal());
      a.diagonal().array() += 1.0;
      b = (1.0 - alpha) * y_;
      break;
    }
    case Family::Lambda: {
      const double lambda = std::get<LambdaParam>(param).lambda;
      a = -w_;
      a.diagonal() += degrees_.degrees() + lambda * labeled_;
      b = lambda * y_;
      break;
    }
    case Family::Delta: {
      const auto& p = std::get<DeltaParam>(param);
      const Eigen::VectorXd left = degrees_.pow_neg(p.delta);
      const Eigen::VectorXd right = degrees_.pow_shifted(p.delta);
      a = -p.c_const * (left.asDiagonal() * w_ * right.asDiagonal());
      a.diagonal().array() += 1.0;
      b = y_;
      break;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd f = lu.solve(b);
  Eigen::MatrixXd r = a * f - b;
  double residual = inf_norm(r);
  if (residual > 0.1 * kResidualTolerance && std::isfinite(residual)) {
    // One step of iterative refinement.
    f -= lu.solve(r);
    residual = inf_norm(a * f - b);
  }
  ScoreMatrix out;
  out.scores = std::move(f);
  out.provenance = param;
  out.encoding = encoding_;
  out.residual = std::isfinite(residual) ? residual : INFINITY;
  return out;
}

ScoreMatrix PropagationSolver::solve_sparse(const FamilyParam& param) const {
  Eigen::SparseMatrix<double> a(n_, n_);
  Eigen::MatrixXd b;
  Eigen::SparseMatrix<double> identity(n_, n_);
  identity.setIdentity();
  switch (family_of(param)) {
    case Family::Alpha: {
      const double alpha = std::get<AlphaParam>(param).alpha;
      const auto& s = degrees_.inv_sqrt();
      Eigen::SparseMatrix<double> norm = s.asDiagonal() * w_sparse_ * s.asDiagonal();
      a = identity - alpha * norm;
      b = (1.0 - alpha) * y_;
      break;
    }
    case Family::Lambda: {
      const double lambda = std::get<LambdaParam>(param).lambda;
      Eigen::SparseMatrix<double> diag(n_, n_);
      Eigen::VectorXd dvec = degrees_.degrees() + lambda * labeled_;
      std::vector<Eigen::Triplet<double>> t;
      t.reserve(n_);
      for (int i = 0; i < n_; ++i) t.emplace_back(i, i, dvec[i]);
      diag.setFromTriplets(t.begin(), t.end());
      a = diag - w_sparse_;
      b = lambda * y_;
      break;
    }
    case Family::Delta: {
      const auto& p = std::get<DeltaParam>(param);
      const Eigen::VectorXd left = degrees_.pow_neg(p.delta);
      const Eigen::VectorXd right = degrees_.pow_shifted(p.delta);
      Eigen::SparseMatrix<double> norm = left.asDiagonal() * w_sparse_ * right.asDiagonal();
      a = identity - p.c_const * norm;
      b = y_;
      break;
    }
  }
  a.makeCompressed();
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
  solver.setTolerance(1e-10);
  solver.setMaxIterations(10 * n_);
  solver.compute(a);
  if (solver.info() != Eigen::Success) {
    throw SolverError("sparse preconditioner setup failed");
  }
  Eigen::MatrixXd f(n_, b.cols());
  for (Eigen::Index k = 0; k < b.cols(); ++k) {
    Eigen::VectorXd col = b.col(k);
    f.col(k) = solver.solve(col);
  }
  ScoreMatrix out;
  out.residual = inf_norm(a * f - b);
  out.scores = std::move(f);
  out.provenance = param;
  out.encoding = encoding_;
  return out;
}

ScoreMatrix solve(const ProblemInstance& instance, const FamilyParam& param,
                  LabelEncoding encoding) {
  return PropagationSolver(instance, encoding).solve(param);
}

ScoreMatrix solve_local_global(const ProblemInstance& instance, double alpha) {
  return solve(instance, AlphaParam{alpha});
}

ScoreMatrix solve_smoothing(const ProblemInstance& instance, double lambda,
                            LabelEncoding encoding) {
  return solve(instance, LambdaParam{lambda}, encoding);
}

ScoreMatrix solve_normalized_adj(const ProblemInstance& instance, double delta,
                                 double c_const) {
  return solve(instance, DeltaParam{delta, c_const});
}

std::vector<int> predict(const Eigen::MatrixXd& scores, LabelEncoding encoding) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  if (encoding == LabelEncoding::Signed) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) out[i] = scores(i, 0) > 0.0 ? 1 : 0;
    return out;
  }
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = k;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const ScoreMatrix& f) { return predict(f.scores, f.encoding); }

double zero_one_loss(std::span<const int> predictions, std::span<const int> truth,
                     std::span<const int> eval_nodes) {
  if (eval_nodes.empty()) throw InputError("zero_one_loss: evaluation set is empty");
  int wrong = 0;
  for (int node : eval_nodes) {
    if (node < 0 || static_cast<std::size_t>(node) >= predictions.size() ||
        static_cast<std::size_t>(node) >= truth.size()) {
      throw InputError("zero_one_loss: node index out of range");
    }
    if (predictions[node] != truth[node]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(eval_nodes.size());
}

double zero_one_loss(const ProblemInstance& instance, std::span<const int> predictions,
                     EvalSet eval) {
  if (!instance.truth()) throw InputError("instance has no ground truth");
  const auto& truth = *instance.truth();
  switch (eval) {
    case EvalSet::All: {
      std::vector<int> nodes(instance.n());
      for (int i = 0; i < instance.n(); ++i) nodes[i] = i;
      return zero_one_loss(predictions, truth, nodes);
    }
    case EvalSet::Unlabeled:
      return zero_one_loss(predictions, truth, instance.unlabeled_nodes());
    case EvalSet::Transductive: {
      std::vector<int> clamped(predictions.begin(), predictions.end());
      for (const auto& [node, cls] : instance.labels()) clamped[node] = cls;
      std::vector<int> nodes(instance.n());
      for (int i = 0; i < instance.n(); ++i) nodes[i] = i;
      return zero_one_loss(clamped, truth, nodes);
    }
  }
  return 0.0;
}

double margin_loss(double score, int y_sign, double gamma) {
  if (!(gamma > 0.0)) throw InputError("margin_loss requires gamma > 0");
  if (y_sign != 1 && y_sign != -1) throw InputError("margin_loss requires y in {-1, +1}");
  const double a = (1.0 - 2.0 * score) * y_sign;
  if (a > 0.0) return 1.0;
  if (a >= -gamma) return 1.0 + a / gamma;
  return 0.0;
}

}  // namespace tunelab
