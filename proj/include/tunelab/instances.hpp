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
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "json.hpp"

namespace tunelab {

// Raised for malformed input files, schema violations and instances that
// fail validation where a valid one is required.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int i = 0;
  int j = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// A partially labeled weighted graph. Classes are 0-indexed: class k here is
// class k+1 in the usual [c] = {1, ..., c} notation.
//
// Edges are stored as given (one entry per unordered pair is the canonical
// form); the dense adjacency mirrors each entry so W is symmetric. Instances
// are not modified after construction and can be shared across threads.
class ProblemInstance {
 public:
  ProblemInstance() = default;
  ProblemInstance(int n, int num_classes, std::vector<Edge> edges,
                  std::map<int, int> labels,
                  std::optional<Eigen::MatrixXd> features = std::nullopt,
                  std::optional<std::vector<int>> truth = std::nullopt,
                  nlohmann::json meta = nlohmann::json::object());

  int n() const { return n_; }
  int num_classes() const { return num_classes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<int, int>& labels() const { return labels_; }
  const std::optional<Eigen::MatrixXd>& features() const { return features_; }
  // Ground-truth class of every node, when known.
  const std::optional<std::vector<int>>& truth() const { return truth_; }
  const nlohmann::json& meta() const { return meta_; }

  bool is_labeled(int node) const { return labels_.count(node) != 0; }
  std::vector<int> labeled_nodes() const;
  std::vector<int> unlabeled_nodes() const;

  // Symmetric adjacency W; duplicate listings of a pair are summed.
  Eigen::MatrixXd dense_adjacency() const;
  Eigen::SparseMatrix<double> sparse_adjacency() const;
  // d_i = sum_j W_ij.
  Eigen::VectorXd degrees() const;

  // Same instance with a replaced ground-truth vector.
  ProblemInstance with_truth(std::vector<int> truth) const;

  friend bool operator==(const ProblemInstance& a, const ProblemInstance& b);

 private:
  int n_ = 0;
  int num_classes_ = 0;
  std::vector<Edge> edges_;
  std::map<int, int> labels_;
  std::optional<Eigen::MatrixXd> features_;
  std::optional<std::vector<int>> truth_;
  nlohmann::json meta_ = nlohmann::json::object();
};

// Lists every invariant violation; empty means valid.
std::vector<std::string> validate(const ProblemInstance& instance);

// Throws InputError (joining all violations) unless the instance is valid.
void require_valid(const ProblemInstance& instance);

// Y_ij = 1 iff node i is labeled with class j.
Eigen::MatrixXd label_matrix(const ProblemInstance& instance);

// Diagonal of the labeled-node indicator.
Eigen::VectorXd labeled_indicator(const ProblemInstance& instance);

// Degrees with cached powers used by the normalizations.
class DegreeData {
 public:
  explicit DegreeData(const Eigen::VectorXd& degrees);

  const Eigen::VectorXd& degrees() const { return degrees_; }
  const Eigen::VectorXd& inv_sqrt() const { return inv_sqrt_; }
  const Eigen::VectorXd& log() const { return log_; }
  // d_i^{-delta} and d_i^{delta-1}.
  Eigen::VectorXd pow_neg(double delta) const;
  Eigen::VectorXd pow_shifted(double delta) const;

 private:
  Eigen::VectorXd degrees_;
  Eigen::VectorXd inv_sqrt_;
  Eigen::VectorXd log_;
};

// Connected components of the weighted graph (edges with weight > 0).
std::vector<int> component_ids(const ProblemInstance& instance);

struct GeneratorConfig {
  std::uint64_t seed = 1;
  int n = 8;
  int num_classes = 2;
  double edge_density = 0.5;
  double label_fraction = 0.25;
  bool planted = true;
  // Adds a random spanning path so that every component has a labeled node.
  bool connected = false;
  // Planted weights: intra-cluster edges drawn in [intra_lo, intra_hi],
  // inter-cluster edges (probability edge_density * inter_prob_scale) in
  // [0, inter_hi].
  double intra_lo = 0.5;
  double intra_hi = 1.0;
  double inter_prob_scale = 0.5;
  double inter_hi = 0.1;
  // Optional node features: d dimensions, class-mean signal plus noise.
  int feature_dim = 0;
  double feature_noise = 0.5;
};

// Deterministic synthetic instance. Nodes left at zero degree get a unit
// self-loop, listed under meta["repaired_nodes"].
ProblemInstance generate_random(const GeneratorConfig& config);

nlohmann::json to_json(const ProblemInstance& instance);
// Parses and validates; throws InputError naming the offending key.
ProblemInstance instance_from_json(const nlohmann::json& j);

void save(const std::filesystem::path& path, const ProblemInstance& instance);
ProblemInstance load(const std::filesystem::path& path);

}  // namespace tunelab
