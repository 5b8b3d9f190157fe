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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "tunelab/instances.hpp"
#include "tunelab/profiler.hpp"
#include "tunelab/solvers.hpp"

namespace tunelab {

enum class TuneMode { Exact, Grid };

struct TuneOptions {
  TuneMode mode = TuneMode::Exact;
  int grid_points = 100;  // grid mode only; log-spaced for lambda
  ProfilerConfig profiler;
};

struct TuneResult {
  Family family = Family::Alpha;
  TuneMode mode = TuneMode::Exact;
  double best_param = 0.0;
  double loss = 0.0;  // mean of per_instance_losses
  std::vector<double> per_instance_losses;
  std::vector<double> candidates;
  std::vector<double> candidate_losses;
  std::vector<std::string> warnings;
};

// Mean 0-1 loss per instance at one parameter value, by direct solves.
std::vector<double> instance_losses(std::span<const ProblemInstance> instances,
                                    const FamilySpec& family, double param,
                                    EvalSet eval = EvalSet::Transductive);

// Minimizes the average loss; ties go to the smallest parameter.
TuneResult erm_tune(std::span<const ProblemInstance> instances, const FamilySpec& family,
                    const TuneOptions& options = {});

nlohmann::json to_json(const TuneResult& result);

struct SampleSizePlan {
  int n = 0;
  double epsilon = 0.0;
  double failure_probability = 0.0;
  double pdim_estimate = 0.0;    // log2 n
  double constant_factor = 1.0;  // instantiation of the O(.) constant
  double m_real = 0.0;           // before rounding up
  std::int64_t m = 0;
};

// m = ceil(C (log2 n + ln(1 / failure_probability)) / epsilon^2) with C = 1.
SampleSizePlan sample_size(int n, double epsilon, double failure_probability);

nlohmann::json to_json(const SampleSizePlan& plan);

struct ExperimentConfig {
  GeneratorConfig generator;  // seed is overridden per instance
  FamilySpec family{Family::Delta, 0.99};
  int m_train = 300;
  int m_test = 300;
  std::uint64_t seed = 1;
  // Seeds the test sample; derived from `seed` when absent. Equal seeds and
  // sizes give identical train and test sets.
  std::optional<std::uint64_t> test_seed;
  TuneOptions tune;
};

// Planted two-class generator with n = 30.
ExperimentConfig default_experiment_config();

struct ExperimentReport {
  Family family = Family::Delta;
  std::uint64_t seed = 0;
  std::uint64_t test_seed = 0;
  int m_train = 0;
  int m_test = 0;
  double best_param = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double gap = 0.0;  // |train - test|
  std::vector<std::string> warnings;
};

std::vector<ProblemInstance> sample_instances(const GeneratorConfig& base, std::uint64_t seed,
                                              int count);

ExperimentReport generalization_experiment(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentReport& report);

// One row per seed: seed, best_param, train_loss, test_loss, gap.
std::string gaps_csv(const std::vector<ExperimentReport>& reports);

}  // namespace tunelab
