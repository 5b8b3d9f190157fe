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

enum class Activation { ReLU, Sigmoid, Tanh, Identity };

double activate(Activation act, double v);
Activation parse_activation(const std::string& name);

// Interpolation between degree-normalized aggregation (eta = 0) and attention
// (eta = 1) with one weight matrix U shared by all layers.
struct GcanModel {
  int depth = 1;
  double eta = 0.0;
  Eigen::MatrixXd u;               // d x d
  std::vector<Eigen::VectorXd> v;  // one length-2d attention vector per layer
  Activation activation = Activation::ReLU;
};

// U and V entries uniform in [-0.1, 0.1].
GcanModel gcan_init(int d, int depth, double eta, std::uint64_t seed);

struct GcanForward {
  std::vector<Eigen::MatrixXd> h;          // h[0] = Z, ..., h[L]
  std::vector<Eigen::MatrixXd> attention;  // attention[l] drives layer l + 1; rows sum to 1
  Eigen::VectorXd probability;             // sigmoid(h^L[:, 0])
};

// Neighborhoods are {j : W_ij != 0}; attention for layer l is computed from
// h^{l-1} with V[l-1].
GcanForward gcan_forward(const ProblemInstance& instance, const GcanModel& model);

// Mean l_gamma over labeled nodes of a binary task, class 1 -> y = +1.
double gcan_margin_loss(std::span<const ProblemInstance> instances, const GcanModel& model,
                        double gamma);
// Prediction class 1 iff probability > 1/2; scored on truth when present,
// otherwise on labels.
double gcan_accuracy(std::span<const ProblemInstance> instances, const GcanModel& model);

// Desk-scale limits enforced by gcan_train.
inline constexpr int kGcanMaxNodes = 32;
inline constexpr int kGcanMaxDim = 8;
inline constexpr int kGcanMaxDepth = 2;

struct GcanTrainConfig {
  int iterations = 200;
  double step = 0.5;
  double fd_step = 1e-5;
  int max_halvings = 20;
  double gamma = 1.0;
  std::uint64_t seed = 1;
};

struct GcanTrainResult {
  GcanModel model;
  std::vector<double> loss_history;  // initial loss, then each accepted step
};

// Central differences over all entries of U, then V[0], V[1], ...
Eigen::VectorXd gcan_fd_gradient(std::span<const ProblemInstance> instances,
                                 const GcanModel& model, double gamma, double step);

GcanTrainResult gcan_train(std::span<const ProblemInstance> instances, double eta, int depth,
                           const GcanTrainConfig& config = {});
// Continues from a given model.
GcanTrainResult gcan_train_from(std::span<const ProblemInstance> instances, GcanModel model,
                                const GcanTrainConfig& config);

struct EtaRow {
  double eta = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double margin_loss = 0.0;  // on validation
};

struct EtaTuneResult {
  double best_eta = 0.0;
  std::vector<EtaRow> table;
};

// Trains once per eta; the seed of grid entry k is derive_seed(config.seed, k).
// With `start` given every eta begins from that model instead.
EtaTuneResult tune_eta(std::span<const ProblemInstance> train,
                       std::span<const ProblemInstance> val, int depth,
                       const std::vector<double>& grid, const GcanTrainConfig& config = {},
                       const GcanModel* start = nullptr);

std::string eta_table_csv(const EtaTuneResult& result);

}  // namespace tunelab::gnn
