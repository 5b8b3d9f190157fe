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

#include "tunelab/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tunelab/csv.hpp"
#include "tunelab/parallel.hpp"
#include "tunelab/rng.hpp"

namespace tunelab {

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

const char* mode_name(TuneMode mode) { return mode == TuneMode::Exact ? "exact" : "grid"; }

ParamDomain tuning_domain(const FamilySpec& family, const TuneOptions& options) {
  ParamDomain d = options.profiler.domain.value_or(default_domain(family.family));
  const ParamDomain clamp = default_domain(family.family);
  d.lo = std::max(d.lo, clamp.lo);
  d.hi = std::min(d.hi, clamp.hi);
  d.log_scale = clamp.log_scale;
  if (!(d.lo < d.hi)) throw InputError("empty parameter domain");
  return d;
}

}  // namespace

std::vector<double> instance_losses(std::span<const ProblemInstance> instances,
                                    const FamilySpec& family, double param, EvalSet eval) {
  std::vector<double> out(instances.size());
  const FamilyParam p = family.at(param);
  parallel_for(instances.size(), [&](std::size_t k) {
    const auto pred = predict(solve(instances[k], p));
    out[k] = zero_one_loss(instances[k], pred, eval);
  });
  return out;
}

TuneResult erm_tune(std::span<const ProblemInstance> instances, const FamilySpec& family,
                    const TuneOptions& options) {
  if (instances.empty()) throw InputError("tuning requires at least one instance");
  const ParamDomain d = tuning_domain(family, options);
  const EvalSet eval = options.profiler.eval;
  TuneResult result;
  result.family = family.family;
  result.mode = options.mode;

  if (options.mode == TuneMode::Exact) {
    ProfilerConfig pc = options.profiler;
    pc.domain = d;
    const LossProfile prof = profile(instances, family, pc);
    for (const auto& u : prof.unresolved) {
      std::ostringstream os;
      os.precision(17);
      os << "unresolved interval [" << u.lo << ", " << u.hi << "] on instance " << u.instance;
      result.warnings.push_back(os.str());
    }
    result.candidates.push_back(d.lo);
    for (std::size_t k = 0; k < prof.piece_losses.size(); ++k) {
      const double a = d.to_coord(prof.piece_lo(k));
      const double b = d.to_coord(prof.piece_hi(k));
      result.candidates.push_back(d.from_coord(0.5 * (a + b)));
    }
    result.candidates.push_back(d.hi);
    for (double c : result.candidates) result.candidate_losses.push_back(prof.loss_at(c));
  } else {
    if (options.grid_points < 2) throw InputError("grid mode needs at least 2 points");
    const double t0 = d.to_coord(d.lo);
    const double t1 = d.to_coord(d.hi);
    const int k = options.grid_points;
    for (int i = 0; i < k; ++i) {
      double p = d.from_coord(t0 + (t1 - t0) * i / (k - 1));
      if (i == 0) p = d.lo;
      if (i + 1 == k) p = d.hi;
      result.candidates.push_back(p);
    }
    // Instance-major so each instance keeps one prepared solver.
    std::vector<std::vector<double>> losses(instances.size());
    parallel_for(instances.size(), [&](std::size_t q) {
      const PropagationSolver solver(instances[q]);
      losses[q].reserve(k);
      for (double p : result.candidates) {
        losses[q].push_back(zero_one_loss(instances[q], predict(solver.solve(family.at(p))), eval));
      }
    });
    result.candidate_losses.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
      double s = 0.0;
      for (const auto& row : losses) s += row[i];
      result.candidate_losses[i] = s / static_cast<double>(instances.size());
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.candidates.size(); ++i) {
    const double li = result.candidate_losses[i];
    const double lb = result.candidate_losses[best];
    if (li < lb || (li == lb && result.candidates[i] < result.candidates[best])) best = i;
  }
  result.best_param = result.candidates[best];
  result.per_instance_losses = instance_losses(instances, family, result.best_param, eval);
  result.loss = mean(result.per_instance_losses);
  if (std::abs(result.loss - result.candidate_losses[best]) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "direct evaluation at the optimum gives " << result.loss << ", profile gives "
       << result.candidate_losses[best];
    result.warnings.push_back(os.str());
  }
  return result;
}

nlohmann::json to_json(const TuneResult& result) {
  return {{"family", family_name(result.family)},
          {"mode", mode_name(result.mode)},
          {"best_param", result.best_param},
          {"loss", result.loss},
          {"per_instance_losses", result.per_instance_losses},
          {"candidates", result.candidates},
          {"candidate_losses", result.candidate_losses},
          {"warnings", result.warnings}};
}

SampleSizePlan sample_size(int n, double epsilon, double failure_probability) {
  if (n < 2) throw InputError("sample_size requires n >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (!(failure_probability > 0.0 && failure_probability < 1.0)) {
    throw InputError("failure probability must lie in (0, 1)");
  }
  SampleSizePlan plan;
  plan.n = n;
  plan.epsilon = epsilon;
  plan.failure_probability = failure_probability;
  plan.pdim_estimate = std::log2(static_cast<double>(n));
  plan.m_real = plan.constant_factor * (plan.pdim_estimate + std::log(1.0 / failure_probability)) /
                (epsilon * epsilon);
  plan.m = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(plan.m_real)));
  return plan;
}

nlohmann::json to_json(const SampleSizePlan& plan) {
  return {{"n", plan.n},
          {"epsilon", plan.epsilon},
          {"failure_probability", plan.failure_probability},
          {"pdim_estimate", plan.pdim_estimate},
          {"constant_factor", plan.constant_factor},
          {"m_real", plan.m_real},
          {"m", plan.m}};
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig config;
  config.generator.n = 30;
  config.generator.num_classes = 2;
  config.generator.planted = true;
  config.generator.edge_density = 0.3;
  config.generator.label_fraction = 0.2;
  return config;
}

std::vector<ProblemInstance> sample_instances(const GeneratorConfig& base, std::uint64_t seed,
                                              int count) {
  if (count < 1) throw InputError("sample size must be positive");
  std::vector<ProblemInstance> out(count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
    GeneratorConfig g = base;
    g.seed = derive_seed(seed, k);
    out[k] = generate_random(g);
  });
  return out;
}

ExperimentReport generalization_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.family = config.family.family;
  report.seed = config.seed;
  report.test_seed = config.test_seed.value_or(derive_seed(config.seed, 0x7e57ULL));
  report.m_train = config.m_train;
  report.m_test = config.m_test;

  const auto train = sample_instances(config.generator, config.seed, config.m_train);
  const auto test = sample_instances(config.generator, report.test_seed, config.m_test);
  const TuneResult tuned = erm_tune(train, config.family, config.tune);
  report.best_param = tuned.best_param;
  report.train_loss = tuned.loss;
  report.warnings = tuned.warnings;
  report.test_loss = mean(instance_losses(test, config.family, tuned.best_param, config.tune.profiler.eval));
  report.gap = std::abs(report.train_loss - report.test_loss);
  return report;
}

nlohmann::json to_json(const ExperimentReport& report) {
  return {{"family", family_name(report.family)},
          {"seed", report.seed},
          {"test_seed", report.test_seed},
          {"m_train", report.m_train},
          {"m_test", report.m_test},
          {"best_param", report.best_param},
          {"train_loss", report.train_loss},
          {"test_loss", report.test_loss},
          {"train_accuracy", 1.0 - report.train_loss},
          {"test_accuracy", 1.0 - report.test_loss},
          {"gap", report.gap},
          {"warnings", report.warnings}};
}

std::string gaps_csv(const std::vector<ExperimentReport>& reports) {
  CsvTable table({"seed", "best_param", "train_loss", "test_loss", "gap"});
  for (const auto& r : reports) {
    table.add_row({std::to_string(r.seed), format_number(r.best_param), format_number(r.train_loss),
                   format_number(r.test_loss), format_number(r.gap)});
  }
  return table.str();
}

}  // namespace tunelab
