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

#include "tunelab/gnn/sgc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tunelab/csv.hpp"
#include "tunelab/parallel.hpp"

namespace tunelab::gnn {

namespace {

const Eigen::MatrixXd& features_of(const ProblemInstance& instance) {
  if (!instance.features()) throw InputError("SGC requires node features");
  return *instance.features();
}

void check_depth(int depth) {
  if (depth < 0) throw InputError("SGC depth must be nonnegative");
}

// l_gamma applied to a = max_{k != y} p_k - p_y.
double margin_loss_row(const Eigen::RowVectorXd& p, int y, double gamma) {
  double other = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < p.size(); ++k) {
    if (k != y) other = std::max(other, p[k]);
  }
  const double a = other - p[y];
  if (a > 0.0) return 1.0;
  if (a >= -gamma) return 1.0 + a / gamma;
  return 0.0;
}

template <typename Fn>
void for_each_scored_node(const ProblemInstance& instance, Fn&& fn) {
  if (instance.truth()) {
    for (int i = 0; i < instance.n(); ++i) fn(i, (*instance.truth())[i]);
  } else {
    for (const auto& [node, cls] : instance.labels()) fn(node, cls);
  }
}

}  // namespace

Eigen::MatrixXd sgc_operator(const ProblemInstance& instance, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be nonnegative");
  Eigen::MatrixXd w = instance.dense_adjacency();
  w.diagonal().array() += beta;
  const Eigen::VectorXd d = w.rowwise().sum();
  for (int i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw InputError("zero degree at node " + std::to_string(i));
  }
  const Eigen::VectorXd s = d.array().rsqrt();
  return s.asDiagonal() * w * s.asDiagonal();
}

Eigen::MatrixXd sgc_propagate(const ProblemInstance& instance, double beta, int depth) {
  check_depth(depth);
  Eigen::MatrixXd x = features_of(instance);
  if (depth == 0) return x;
  const Eigen::MatrixXd s = sgc_operator(instance, beta);
  for (int l = 0; l < depth; ++l) x = s * x;
  return x;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - top).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Eigen::MatrixXd sgc_forward(const ProblemInstance& instance, const SgcModel& model) {
  const Eigen::MatrixXd& z = features_of(instance);
  if (model.theta.rows() != z.cols()) {
    throw InputError("theta has " + std::to_string(model.theta.rows()) + " rows, features have " +
                     std::to_string(z.cols()) + " columns");
  }
  if (model.theta.cols() != instance.num_classes()) {
    throw InputError("theta column count must equal the number of classes");
  }
  return softmax_rows(sgc_propagate(instance, model.beta, model.depth) * model.theta);
}

SgcDesign sgc_design(std::span<const ProblemInstance> instances, double beta, int depth) {
  if (instances.empty()) throw InputError("SGC training requires at least one instance");
  SgcDesign design;
  design.num_classes = instances.front().num_classes();
  const Eigen::Index d = features_of(instances.front()).cols();
  std::vector<Eigen::MatrixXd> propagated(instances.size());
  std::size_t rows = 0;
  for (const auto& inst : instances) {
    if (features_of(inst).cols() != d) throw InputError("feature dimension differs across instances");
    if (inst.num_classes() != design.num_classes) {
      throw InputError("class count differs across instances");
    }
    rows += inst.labels().size();
  }
  if (rows == 0) throw InputError("SGC training requires labeled nodes");
  parallel_for(instances.size(),
               [&](std::size_t k) { propagated[k] = sgc_propagate(instances[k], beta, depth); });
  design.x.resize(static_cast<Eigen::Index>(rows), d);
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    for (const auto& [node, cls] : instances[k].labels()) {
      design.x.row(r++) = propagated[k].row(node);
      design.labels.push_back(cls);
    }
  }
  return design;
}

double sgc_loss(const SgcDesign& design, const Eigen::MatrixXd& theta) {
  const Eigen::MatrixXd logits = design.x * theta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const double lse = top + std::log((logits.row(i).array() - top).exp().sum());
    total += lse - logits(i, design.labels[i]);
  }
  return total / static_cast<double>(logits.rows());
}

Eigen::MatrixXd sgc_gradient(const SgcDesign& design, const Eigen::MatrixXd& theta) {
  Eigen::MatrixXd residual = softmax_rows(design.x * theta);
  for (Eigen::Index i = 0; i < residual.rows(); ++i) residual(i, design.labels[i]) -= 1.0;
  return design.x.transpose() * residual / static_cast<double>(residual.rows());
}

SgcTrainResult sgc_train(std::span<const ProblemInstance> instances, double beta, int depth,
                         const SgcTrainConfig& config) {
  if (config.iterations < 0) throw InputError("iteration budget must be nonnegative");
  const SgcDesign design = sgc_design(instances, beta, depth);
  SgcTrainResult out;
  out.theta = Eigen::MatrixXd::Zero(design.x.cols(), design.num_classes);
  double loss = sgc_loss(design, out.theta);
  out.loss_history.push_back(loss);
  double step = config.initial_step;
  for (int it = 0; it < config.iterations; ++it) {
    const Eigen::MatrixXd g = sgc_gradient(design, out.theta);
    const double g2 = g.squaredNorm();
    if (g2 <= config.gradient_tolerance * config.gradient_tolerance) break;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h) {
      const Eigen::MatrixXd trial = out.theta - step * g;
      const double trial_loss = sgc_loss(design, trial);
      if (trial_loss <= loss - config.armijo * step * g2) {
        out.theta = trial;
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    out.loss_history.push_back(loss);
    step = std::min(2.0 * step, config.initial_step * 1e3);
  }
  return out;
}

double sgc_accuracy(std::span<const ProblemInstance> instances, const SgcModel& model) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& inst : instances) {
    const Eigen::MatrixXd p = sgc_forward(inst, model);
    for_each_scored_node(inst, [&](int node, int cls) {
      Eigen::Index arg = 0;
      p.row(node).maxCoeff(&arg);
      correct += static_cast<int>(arg) == cls;
      ++total;
    });
  }
  if (total == 0) throw InputError("no nodes with known classes to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double sgc_margin_loss(std::span<const ProblemInstance> instances, const SgcModel& model,
                       double gamma) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  double sum = 0.0;
  std::size_t total = 0;
  for (const auto& inst : instances) {
    const Eigen::MatrixXd p = sgc_forward(inst, model);
    for_each_scored_node(inst, [&](int node, int cls) {
      sum += margin_loss_row(p.row(node), cls, gamma);
      ++total;
    });
  }
  if (total == 0) throw InputError("no nodes with known classes to score");
  return sum / static_cast<double>(total);
}

BetaTuneResult tune_beta(std::span<const ProblemInstance> train,
                         std::span<const ProblemInstance> val, int depth,
                         const std::vector<double>& grid, const SgcTrainConfig& config,
                         ValidationCriterion criterion, double gamma) {
  if (grid.empty()) throw InputError("beta grid is empty");
  for (double b : grid) {
    if (!(b >= 0.0 && b <= 1.0)) throw InputError("beta grid values must lie in [0, 1]");
  }
  BetaTuneResult out;
  out.table.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    SgcModel model;
    model.depth = depth;
    model.beta = grid[k];
    model.theta = sgc_train(train, grid[k], depth, config).theta;
    out.table[k] = {grid[k], sgc_accuracy(train, model), sgc_accuracy(val, model),
                    sgc_margin_loss(val, model, gamma)};
  });
  auto score = [&](const BetaRow& r) {
    return criterion == ValidationCriterion::ZeroOne ? 1.0 - r.val_acc : r.margin_loss;
  };
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.table.size(); ++k) {
    const double a = score(out.table[k]);
    const double b = score(out.table[best]);
    if (a < b || (a == b && out.table[k].beta < out.table[best].beta)) best = k;
  }
  out.best_beta = out.table[best].beta;
  return out;
}

std::string beta_table_csv(const BetaTuneResult& result) {
  CsvTable table({"param", "train_acc", "val_acc", "margin_loss"});
  for (const auto& r : result.table) {
    table.add_row({format_number(r.beta), format_number(r.train_acc), format_number(r.val_acc),
                   format_number(r.margin_loss)});
  }
  return table.str();
}

}  // namespace tunelab::gnn
