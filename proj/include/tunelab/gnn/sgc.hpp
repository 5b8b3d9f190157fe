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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tunelab/instances.hpp"

namespace tunelab::gnn {

struct SgcModel {
  int depth = 1;
  double beta = 0.0;
  Eigen::MatrixXd theta;  // d x c
};

// D~^{-1/2} (W + beta I) D~^{-1/2} with D~ = D + beta I.
Eigen::MatrixXd sgc_operator(const ProblemInstance& instance, double beta);
// S~^L Z.
Eigen::MatrixXd sgc_propagate(const ProblemInstance& instance, double beta, int depth);

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Row-stochastic class probabilities softmax(S~^L Z theta).
Eigen::MatrixXd sgc_forward(const ProblemInstance& instance, const SgcModel& model);

// Labeled rows of the propagated features, pooled over a set of instances.
struct SgcDesign {
  Eigen::MatrixXd x;        // N x d
  std::vector<int> labels;  // N
  int num_classes = 0;
};
SgcDesign sgc_design(std::span<const ProblemInstance> instances, double beta, int depth);

// Mean cross-entropy over the design rows and its gradient (1/N) X^T (P - Y).
double sgc_loss(const SgcDesign& design, const Eigen::MatrixXd& theta);
Eigen::MatrixXd sgc_gradient(const SgcDesign& design, const Eigen::MatrixXd& theta);

struct SgcTrainConfig {
  int iterations = 500;
  double initial_step = 1.0;
  double armijo = 1e-4;
  int max_halvings = 40;
  double gradient_tolerance = 1e-10;
};

struct SgcTrainResult {
  Eigen::MatrixXd theta;
  std::vector<double> loss_history;  // before each iteration, then final
};

// Full-batch gradient descent from theta = 0 with backtracking line search.
SgcTrainResult sgc_train(std::span<const ProblemInstance> instances, double beta, int depth,
                         const SgcTrainConfig& config = {});

// Fraction of correctly classified nodes. Uses ground truth on every node when
// present, otherwise the labeled nodes.
double sgc_accuracy(std::span<const ProblemInstance> instances, const SgcModel& model);
// Mean l_gamma on the probability margin max_{k != y} p_k - p_y.
double sgc_margin_loss(std::span<const ProblemInstance> instances, const SgcModel& model,
                       double gamma);

enum class ValidationCriterion { ZeroOne, Margin };

struct BetaRow {
  double beta = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double margin_loss = 0.0;  // on validation
};

struct BetaTuneResult {
  double best_beta = 0.0;
  std::vector<BetaRow> table;
};

BetaTuneResult tune_beta(std::span<const ProblemInstance> train,
                         std::span<const ProblemInstance> val, int depth,
                         const std::vector<double>& grid, const SgcTrainConfig& config = {},
                         ValidationCriterion criterion = ValidationCriterion::ZeroOne,
                         double gamma = 1.0);

std::string beta_table_csv(const BetaTuneResult& result);

}  // namespace tunelab::gnn
