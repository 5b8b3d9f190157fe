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

#include "tunelab/gnn/gcan.hpp"

#include <algorithm>
#include <cmath>

#include "tunelab/csv.hpp"
#include "tunelab/parallel.hpp"
#include "tunelab/rng.hpp"

namespace tunelab::gnn {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void check_model(const ProblemInstance& instance, const GcanModel& model) {
  if (!instance.features()) throw InputError("GCAN requires node features");
  const Eigen::Index d = instance.features()->cols();
  if (model.depth < 1) throw InputError("GCAN depth must be at least 1");
  if (!(model.eta >= 0.0 && model.eta <= 1.0)) throw InputError("eta must lie in [0, 1]");
  if (model.u.rows() != d || model.u.cols() != d) {
    throw InputError("U must be " + std::to_string(d) + " x " + std::to_string(d));
  }
  if (static_cast<int>(model.v.size()) != model.depth) {
    throw InputError("GCAN needs one attention vector per layer");
  }
  for (const auto& v : model.v) {
    if (v.size() != 2 * d) throw InputError("attention vectors must have length 2d");
  }
}

int parameter_count(const GcanModel& m) {
  int count = static_cast<int>(m.u.size());
  for (const auto& v : m.v) count += static_cast<int>(v.size());
  return count;
}

double& parameter(GcanModel& m, int k) {
  if (k < m.u.size()) return m.u.data()[k];
  k -= static_cast<int>(m.u.size());
  for (auto& v : m.v) {
    if (k < v.size()) return v[k];
    k -= static_cast<int>(v.size());
  }
  throw InputError("parameter index out of range");
}

template <typename Fn>
void for_each_scored_node(const ProblemInstance& instance, Fn&& fn) {
  if (instance.truth()) {
    for (int i = 0; i < instance.n(); ++i) fn(i, (*instance.truth())[i]);
  } else {
    for (const auto& [node, cls] : instance.labels()) fn(node, cls);
  }
}

void check_binary(std::span<const ProblemInstance> instances) {
  if (instances.empty()) throw InputError("GCAN requires at least one instance");
  for (const auto& inst : instances) {
    if (inst.num_classes() != 2) throw InputError("GCAN readout supports binary tasks only");
  }
}

}  // namespace

double activate(Activation act, double v) {
  switch (act) {
    case Activation::ReLU:
      return v > 0.0 ? v : 0.0;
    case Activation::Sigmoid:
      return sigmoid(v);
    case Activation::Tanh:
      return std::tanh(v);
    case Activation::Identity:
      return v;
  }
  return v;
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw InputError("unknown activation \"" + name + "\"");
}

GcanModel gcan_init(int d, int depth, double eta, std::uint64_t seed) {
  if (d < 1 || depth < 1) throw InputError("GCAN dimension and depth must be positive");
  Rng rng(seed);
  GcanModel m;
  m.depth = depth;
  m.eta = eta;
  m.u.resize(d, d);
  for (Eigen::Index k = 0; k < m.u.size(); ++k) m.u.data()[k] = rng.uniform(-0.1, 0.1);
  for (int l = 0; l < depth; ++l) {
    Eigen::VectorXd v(2 * d);
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.uniform(-0.1, 0.1);
    m.v.push_back(v);
  }
  return m;
}

GcanForward gcan_forward(const ProblemInstance& instance, const GcanModel& model) {
  check_model(instance, model);
  const int n = instance.n();
  const Eigen::Index d = model.u.rows();
  const Eigen::MatrixXd w = instance.dense_adjacency();
  const Eigen::VectorXd deg = instance.degrees();
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (w(i, j) != 0.0) nbrs[i].push_back(j);
    }
    if (nbrs[i].empty()) throw InputError("empty neighborhood at node " + std::to_string(i));
  }

  GcanForward out;
  out.h.push_back(*instance.features());
  for (int l = 1; l <= model.depth; ++l) {
    const Eigen::MatrixXd uh = out.h.back() * model.u.transpose();  // row j = U h_j
    const Eigen::VectorXd& v = model.v[l - 1];
    const Eigen::VectorXd self_part = uh * v.head(d);
    const Eigen::VectorXd other_part = uh * v.tail(d);
    Eigen::MatrixXd att = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd next(n, d);
    for (int i = 0; i < n; ++i) {
      double top = -INFINITY;
      for (int j : nbrs[i]) {
        att(i, j) = activate(model.activation, self_part[i] + other_part[j]);
        top = std::max(top, att(i, j));
      }
      double total = 0.0;
      for (int j : nbrs[i]) {
        att(i, j) = std::exp(att(i, j) - top);
        total += att(i, j);
      }
      Eigen::RowVectorXd agg = Eigen::RowVectorXd::Zero(d);
      for (int j : nbrs[i]) {
        att(i, j) /= total;
        const double coef = model.eta * att(i, j) + (1.0 - model.eta) / std::sqrt(deg[i] * deg[j]);
        agg += coef * uh.row(j);
      }
      for (Eigen::Index k = 0; k < d; ++k) next(i, k) = activate(model.activation, agg[k]);
    }
    out.attention.push_back(std::move(att));
    out.h.push_back(std::move(next));
  }
  out.probability = out.h.back().col(0).unaryExpr([](double x) { return sigmoid(x); });
  return out;
}

double gcan_margin_loss(std::span<const ProblemInstance> instances, const GcanModel& model,
                        double gamma) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  check_binary(instances);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& inst : instances) {
    const GcanForward f = gcan_forward(inst, model);
    for (const auto& [node, cls] : inst.labels()) {
      const double a = (1.0 - 2.0 * f.probability[node]) * (cls == 1 ? 1.0 : -1.0);
      sum += a > 0.0 ? 1.0 : (a >= -gamma ? 1.0 + a / gamma : 0.0);
      ++count;
    }
  }
  if (count == 0) throw InputError("GCAN loss requires labeled nodes");
  return sum / static_cast<double>(count);
}

double gcan_accuracy(std::span<const ProblemInstance> instances, const GcanModel& model) {
  check_binary(instances);
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& inst : instances) {
    const GcanForward f = gcan_forward(inst, model);
    for_each_scored_node(inst, [&](int node, int cls) {
      correct += (f.probability[node] > 0.5 ? 1 : 0) == cls;
      ++total;
    });
  }
  if (total == 0) throw InputError("no nodes with known classes to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

Eigen::VectorXd gcan_fd_gradient(std::span<const ProblemInstance> instances,
                                 const GcanModel& model, double gamma, double step) {
  if (!(step > 0.0)) throw InputError("finite-difference step must be positive");
  GcanModel probe = model;
  const int count = parameter_count(model);
  Eigen::VectorXd g(count);
  for (int k = 0; k < count; ++k) {
    double& x = parameter(probe, k);
    const double x0 = x;
    x = x0 + step;
    const double up = gcan_margin_loss(instances, probe, gamma);
    x = x0 - step;
    const double down = gcan_margin_loss(instances, probe, gamma);
    x = x0;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

GcanTrainResult gcan_train_from(std::span<const ProblemInstance> instances, GcanModel model,
                                const GcanTrainConfig& config) {
  check_binary(instances);
  if (config.iterations < 0) throw InputError("iteration budget must be nonnegative");
  if (model.depth > kGcanMaxDepth) {
    throw InputError("GCAN training is limited to depth " + std::to_string(kGcanMaxDepth));
  }
  if (model.u.rows() > kGcanMaxDim) {
    throw InputError("GCAN training is limited to feature dimension " + std::to_string(kGcanMaxDim));
  }
  for (const auto& inst : instances) {
    if (inst.n() > kGcanMaxNodes) {
      throw InputError("GCAN training is limited to " + std::to_string(kGcanMaxNodes) + " nodes");
    }
  }
  GcanTrainResult out;
  double loss = gcan_margin_loss(instances, model, config.gamma);
  out.loss_history.push_back(loss);
  const int count = parameter_count(model);
  for (int it = 0; it < config.iterations; ++it) {
    const Eigen::VectorXd g = gcan_fd_gradient(instances, model, config.gamma, config.fd_step);
    if (g.squaredNorm() == 0.0) break;
    double step = config.step;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h) {
      GcanModel trial = model;
      for (int k = 0; k < count; ++k) parameter(trial, k) -= step * g[k];
      const double trial_loss = gcan_margin_loss(instances, trial, config.gamma);
      if (trial_loss < loss) {
        model = std::move(trial);
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    out.loss_history.push_back(loss);
  }
  out.model = std::move(model);
  return out;
}

GcanTrainResult gcan_train(std::span<const ProblemInstance> instances, double eta, int depth,
                           const GcanTrainConfig& config) {
  check_binary(instances);
  if (!instances.front().features()) throw InputError("GCAN requires node features");
  const int d = static_cast<int>(instances.front().features()->cols());
  if (d > kGcanMaxDim) {
    throw InputError("GCAN training is limited to feature dimension " + std::to_string(kGcanMaxDim));
  }
  if (depth > kGcanMaxDepth) {
    throw InputError("GCAN training is limited to depth " + std::to_string(kGcanMaxDepth));
  }
  return gcan_train_from(instances, gcan_init(d, depth, eta, config.seed), config);
}

EtaTuneResult tune_eta(std::span<const ProblemInstance> train,
                       std::span<const ProblemInstance> val, int depth,
                       const std::vector<double>& grid, const GcanTrainConfig& config,
                       const GcanModel* start) {
  if (grid.empty()) throw InputError("eta grid is empty");
  for (double e : grid) {
    if (!(e >= 0.0 && e <= 1.0)) throw InputError("eta grid values must lie in [0, 1]");
  }
  EtaTuneResult out;
  out.table.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    GcanTrainConfig local = config;
    local.seed = derive_seed(config.seed, k);
    GcanModel model;
    if (start) {
      model = *start;
      model.eta = grid[k];
      model = gcan_train_from(train, model, local).model;
    } else {
      model = gcan_train(train, grid[k], depth, local).model;
    }
    out.table[k] = {grid[k], gcan_accuracy(train, model), gcan_accuracy(val, model),
                    gcan_margin_loss(val, model, config.gamma)};
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.table.size(); ++k) {
    const auto& a = out.table[k];
    const auto& b = out.table[best];
    if (a.val_acc > b.val_acc || (a.val_acc == b.val_acc && a.eta < b.eta)) best = k;
  }
  out.best_eta = out.table[best].eta;
  return out;
}

std::string eta_table_csv(const EtaTuneResult& result) {
  CsvTable table({"param", "train_acc", "val_acc", "margin_loss"});
  for (const auto& r : result.table) {
    table.add_row({format_number(r.eta), format_number(r.train_acc), format_number(r.val_acc),
                   format_number(r.margin_loss)});
  }
  return table.str();
}

}  // namespace tunelab::gnn
