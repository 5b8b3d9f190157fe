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

#include "tunelab/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "tunelab/rng.hpp"

namespace tunelab {

ProblemInstance::ProblemInstance(int n, int num_classes, std::vector<Edge> edges,
                                 std::map<int, int> labels,
                                 std::optional<Eigen::MatrixXd> features,
                                 std::optional<std::vector<int>> truth,
                                 nlohmann::json meta)
    : n_(n),
      num_classes_(num_classes),
      edges_(std::move(edges)),
      labels_(std::move(labels)),
      features_(std::move(features)),
      truth_(std::move(truth)),
      meta_(meta.is_null() ? nlohmann::json::object() : std::move(meta)) {}

std::vector<int> ProblemInstance::labeled_nodes() const {
  std::vector<int> out;
  out.reserve(labels_.size());
  for (const auto& [node, cls] : labels_) out.push_back(node);
  return out;
}

std::vector<int> ProblemInstance::unlabeled_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < n_; ++i) {
    if (!is_labeled(i)) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXd ProblemInstance::dense_adjacency() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_, n_);
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_) continue;
    w(e.i, e.j) += e.weight;
    if (e.i != e.j) w(e.j, e.i) += e.weight;
  }
  return w;
}

Eigen::SparseMatrix<double> ProblemInstance::sparse_adjacency() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges_.size());
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_) continue;
    triplets.emplace_back(e.i, e.j, e.weight);
    if (e.i != e.j) triplets.emplace_back(e.j, e.i, e.weight);
  }
  Eigen::SparseMatrix<double> w(n_, n_);
  w.setFromTriplets(triplets.begin(), triplets.end());
  return w;
}

Eigen::VectorXd ProblemInstance::degrees() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_) continue;
    d[e.i] += e.weight;
    if (e.i != e.j) d[e.j] += e.weight;
  }
  return d;
}

ProblemInstance ProblemInstance::with_truth(std::vector<int> truth) const {
  ProblemInstance copy = *this;
  copy.truth_ = std::move(truth);
  return copy;
}

bool operator==(const ProblemInstance& a, const ProblemInstance& b) {
  if (a.n_ != b.n_ || a.num_classes_ != b.num_classes_ ||
      a.edges_ != b.edges_ || a.labels_ != b.labels_ || a.truth_ != b.truth_ ||
      a.meta_ != b.meta_) {
    return false;
  }
  if (a.features_.has_value() != b.features_.has_value()) return false;
  if (a.features_) {
    const auto& fa = *a.features_;
    const auto& fb = *b.features_;
    if (fa.rows() != fb.rows() || fa.cols() != fb.cols()) return false;
    if (!(fa.array() == fb.array()).all()) return false;
  }
  return true;
}

std::vector<std::string> validate(const ProblemInstance& instance) {
  std::vector<std::string> problems;
  const int n = instance.n();
  const int c = instance.num_classes();
  if (n <= 0) problems.push_back("node count must be positive");
  if (c <= 0) problems.push_back("class count must be positive");

  std::map<std::pair<int, int>, double> seen;
  for (const Edge& e : instance.edges()) {
    std::ostringstream where;
    where << "(" << e.i << ", " << e.j << ")";
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
      problems.push_back("edge " + where.str() + " has endpoint out of range");
      continue;
    }
    if (!std::isfinite(e.weight)) {
      problems.push_back("edge " + where.str() + " has non-finite weight");
      continue;
    }
    if (e.weight < 0.0) {
      problems.push_back("edge " + where.str() + " has negative weight");
    }
    const auto key = std::minmax(e.i, e.j);
    const auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, e.weight);
    } else if (it->second != e.weight) {
      problems.push_back("asymmetric weights for pair " + where.str());
    } else {
      problems.push_back("duplicate edge " + where.str());
    }
  }

  if (n > 0) {
    const Eigen::VectorXd d = instance.degrees();
    for (int i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) {
        problems.push_back("zero degree at node " + std::to_string(i));
      }
    }
  }

  for (const auto& [node, cls] : instance.labels()) {
    if (node < 0 || node >= n) {
      problems.push_back("labeled node " + std::to_string(node) +
                         " out of range");
    }
    if (cls < 0 || cls >= c) {
      problems.push_back("label out of range at node " + std::to_string(node));
    }
  }

  if (const auto& truth = instance.truth()) {
    if (static_cast<int>(truth->size()) != n) {
      problems.push_back("truth length differs from node count");
    } else {
      for (int i = 0; i < n; ++i) {
        if ((*truth)[i] < 0 || (*truth)[i] >= c) {
          problems.push_back("truth out of range at node " + std::to_string(i));
        }
      }
    }
  }

  if (const auto& z = instance.features()) {
    if (z->rows() != n) problems.push_back("feature row count differs from n");
    if (!z->allFinite()) problems.push_back("features contain non-finite values");
  }
  return problems;
}

void require_valid(const ProblemInstance& instance) {
  const auto problems = validate(instance);
  if (problems.empty()) return;
  std::string message = "invalid instance:";
  for (const auto& p : problems) message += " " + p + ";";
  throw InputError(message);
}

Eigen::MatrixXd label_matrix(const ProblemInstance& instance) {
  require_valid(instance);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(instance.n(), instance.num_classes());
  for (const auto& [node, cls] : instance.labels()) y(node, cls) = 1.0;
  return y;
}

Eigen::VectorXd labeled_indicator(const ProblemInstance& instance) {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(instance.n());
  for (const auto& [node, cls] : instance.labels()) delta[node] = 1.0;
  return delta;
}

DegreeData::DegreeData(const Eigen::VectorXd& degrees)
    : degrees_(degrees),
      inv_sqrt_(degrees.array().rsqrt().matrix()),
      log_(degrees.array().log().matrix()) {}

Eigen::VectorXd DegreeData::pow_neg(double delta) const {
  return (-delta * log_.array()).exp().matrix();
}

Eigen::VectorXd DegreeData::pow_shifted(double delta) const {
  return ((delta - 1.0) * log_.array()).exp().matrix();
}

std::vector<int> component_ids(const ProblemInstance& instance) {
  const int n = instance.n();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const Edge& e : instance.edges()) {
    if (e.weight <= 0.0 || e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) continue;
    const int a = find(e.i);
    const int b = find(e.j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  // Relabel roots as 0, 1, ... in order of their smallest node.
  std::vector<int> ids(n, -1);
  std::map<int, int> root_to_id;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    auto [it, inserted] = root_to_id.emplace(r, static_cast<int>(root_to_id.size()));
    ids[i] = it->second;
  }
  return ids;
}

ProblemInstance generate_random(const GeneratorConfig& config) {
  if (config.n < 2) throw InputError("generator requires n >= 2");
  if (config.num_classes < 1) throw InputError("generator requires classes >= 1");
  if (!(config.label_fraction > 0.0 && config.label_fraction <= 1.0)) {
    throw InputError("label_fraction must lie in (0, 1]");
  }
  if (config.edge_density < 0.0 || config.edge_density > 1.0) {
    throw InputError("edge_density must lie in [0, 1]");
  }
  const int n = config.n;
  const int c = config.num_classes;
  Rng rng(config.seed);

  // Ground truth: balanced round-robin classes in shuffled order.
  std::vector<int> truth(n);
  for (int i = 0; i < n; ++i) truth[i] = i % c;
  rng.shuffle(truth);

  std::map<std::pair<int, int>, double> weights;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double w = 0.0;
      if (config.planted) {
        if (truth[i] == truth[j]) {
          if (rng.bernoulli(config.edge_density)) {
            w = rng.uniform(config.intra_lo, config.intra_hi);
          }
        } else if (rng.bernoulli(config.edge_density * config.inter_prob_scale)) {
          w = rng.uniform(0.0, config.inter_hi);
        }
      } else if (rng.bernoulli(config.edge_density)) {
        w = 1.0 - rng.uniform();  // (0, 1]
      }
      if (w > 0.0) weights[{i, j}] = w;
    }
  }

  if (config.connected) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (int k = 0; k + 1 < n; ++k) {
      const auto key = std::minmax(order[k], order[k + 1]);
      if (weights.count(key)) continue;
      const bool same = truth[key.first] == truth[key.second];
      double w = (config.planted && !same) ? rng.uniform(0.0, config.inter_hi)
                                           : 1.0 - rng.uniform();
      if (w <= 0.0) w = 1e-3;
      weights[key] = w;
    }
  }

  std::vector<Edge> edges;
  edges.reserve(weights.size());
  std::vector<double> degree(n, 0.0);
  for (const auto& [key, w] : weights) {
    edges.push_back({key.first, key.second, w});
    degree[key.first] += w;
    degree[key.second] += w;
  }
  nlohmann::json repaired = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    if (degree[i] <= 0.0) {
      edges.push_back({i, i, 1.0});
      repaired.push_back(i);
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  // Labeled set: round(fraction * n) nodes, at least one; planted instances
  // take one node per class first so every class is represented.
  const int num_labeled = std::clamp(
      static_cast<int>(std::llround(config.label_fraction * n)), 1, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<int> chosen;
  if (config.planted) {
    std::vector<bool> has_class(c, false);
    for (int node : order) {
      if (static_cast<int>(chosen.size()) >= num_labeled) break;
      if (!has_class[truth[node]]) {
        has_class[truth[node]] = true;
        chosen.push_back(node);
      }
    }
  }
  for (int node : order) {
    if (static_cast<int>(chosen.size()) >= num_labeled) break;
    if (std::find(chosen.begin(), chosen.end(), node) == chosen.end()) {
      chosen.push_back(node);
    }
  }
  std::map<int, int> labels;
  for (int node : chosen) labels[node] = truth[node];

  std::optional<Eigen::MatrixXd> features;
  if (config.feature_dim > 0) {
    const int d = config.feature_dim;
    Eigen::MatrixXd means(c, d);
    for (int k = 0; k < c; ++k) {
      for (int t = 0; t < d; ++t) means(k, t) = rng.normal();
    }
    Eigen::MatrixXd z(n, d);
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < d; ++t) {
        z(i, t) = means(truth[i], t) + config.feature_noise * rng.normal();
      }
    }
    features = std::move(z);
  }

  nlohmann::json meta = {
      {"generator",
       {{"seed", config.seed},
        {"n", n},
        {"classes", c},
        {"edge_density", config.edge_density},
        {"label_fraction", config.label_fraction},
        {"planted", config.planted},
        {"connected", config.connected}}},
      {"repaired_nodes", repaired}};
  return ProblemInstance(n, c, std::move(edges), std::move(labels),
                         std::move(features), std::move(truth), std::move(meta));
}

nlohmann::json to_json(const ProblemInstance& instance) {
  nlohmann::json j;
  j["n"] = instance.n();
  j["classes"] = instance.num_classes();
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : instance.edges()) edges.push_back({e.i, e.j, e.weight});
  j["edges"] = std::move(edges);
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [node, cls] : instance.labels()) {
    labels[std::to_string(node)] = cls;
  }
  j["labels"] = std::move(labels);
  if (const auto& z = instance.features()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < z->rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < z->cols(); ++k) row.push_back((*z)(r, k));
      rows.push_back(std::move(row));
    }
    j["features"] = std::move(rows);
  } else {
    j["features"] = nullptr;
  }
  nlohmann::json meta = instance.meta();
  if (instance.truth()) meta["truth"] = *instance.truth();
  j["meta"] = std::move(meta);
  return j;
}

namespace {

const nlohmann::json& require_key(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw InputError(std::string("schema error: missing key \"") + key + "\"");
  }
  return j.at(key);
}

int as_int(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number_integer()) {
    throw InputError("schema error: " + what + " must be an integer");
  }
  return v.get<int>();
}

double as_double(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number()) throw InputError("schema error: " + what + " must be a number");
  return v.get<double>();
}

}  // namespace

ProblemInstance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("schema error: top level must be an object");
  const int n = as_int(require_key(j, "n"), "\"n\"");
  const int c = as_int(require_key(j, "classes"), "\"classes\"");

  const auto& jedges = require_key(j, "edges");
  if (!jedges.is_array()) throw InputError("schema error: \"edges\" must be an array");
  std::vector<Edge> edges;
  edges.reserve(jedges.size());
  for (const auto& e : jedges) {
    if (!e.is_array() || e.size() != 3) {
      throw InputError("schema error: each entry of \"edges\" must be [i, j, w]");
    }
    edges.push_back({as_int(e[0], "edge endpoint"), as_int(e[1], "edge endpoint"),
                     as_double(e[2], "edge weight")});
  }

  const auto& jlabels = require_key(j, "labels");
  if (!jlabels.is_object()) throw InputError("schema error: \"labels\" must be an object");
  std::map<int, int> labels;
  for (const auto& [key, value] : jlabels.items()) {
    int node = 0;
    try {
      std::size_t used = 0;
      node = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw InputError("schema error: label key \"" + key + "\" is not a node index");
    }
    labels[node] = as_int(value, "label of node " + key);
  }

  std::optional<Eigen::MatrixXd> features;
  if (j.contains("features") && !j.at("features").is_null()) {
    const auto& rows = j.at("features");
    if (!rows.is_array()) throw InputError("schema error: \"features\" must be an array or null");
    const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].is_array() || static_cast<Eigen::Index>(rows[r].size()) != d) {
        throw InputError("schema error: \"features\" rows must have equal length");
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        z(static_cast<Eigen::Index>(r), k) = as_double(rows[r][k], "feature value");
      }
    }
    features = std::move(z);
  }

  nlohmann::json meta = nlohmann::json::object();
  std::optional<std::vector<int>> truth;
  if (j.contains("meta")) {
    meta = j.at("meta");
    if (!meta.is_object()) throw InputError("schema error: \"meta\" must be an object");
    if (meta.contains("truth")) {
      std::vector<int> t;
      for (const auto& v : meta.at("truth")) t.push_back(as_int(v, "truth entry"));
      truth = std::move(t);
      meta.erase("truth");
    }
  }

  ProblemInstance instance(n, c, std::move(edges), std::move(labels),
                           std::move(features), std::move(truth), std::move(meta));
  require_valid(instance);
  return instance;
}

void save(const std::filesystem::path& path, const ProblemInstance& instance) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << to_json(instance).dump(1) << "\n";
}

ProblemInstance load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace tunelab
