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

#include "tunelab/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "tunelab/parallel.hpp"

namespace tunelab {

namespace {

// Sign-change triggers stop subdividing at this multiple of the tolerance.
constexpr double kSignGuard = 1e3;

int pair_count(int c) { return c * (c - 1) / 2; }

signed char gap_sign(double a, double b) {
  const double g = a - b;
  if (std::abs(g) <= 1e-14 * (std::abs(a) + std::abs(b))) return 0;
  return g > 0.0 ? 1 : -1;
}

struct Sample {
  double coord = 0.0;
  double param = 0.0;
  std::vector<int> predictions;
  std::vector<signed char> signs;  // relevant node x pair
  std::vector<double> margins;     // relevant node
};

struct RawBreak {
  double location;
  std::vector<FlipRecord> flips;
};

class InstanceProfiler {
 public:
  InstanceProfiler(const ProblemInstance& instance, int index, const FamilySpec& family,
                   const ProfilerConfig& config, const ParamDomain& domain)
      : instance_(instance),
        index_(index),
        family_(family),
        config_(config),
        domain_(domain),
        solver_(instance) {
    if (config_.eval == EvalSet::All) {
      for (int i = 0; i < instance.n(); ++i) relevant_.push_back(i);
    } else {
      relevant_ = instance.unlabeled_nodes();
    }
  }

  LossProfile run() {
    const int grid = config_.initial_grid;
    const double t0 = domain_.to_coord(domain_.lo);
    const double t1 = domain_.to_coord(domain_.hi);
    std::vector<Sample> samples;
    samples.reserve(grid);
    for (int k = 0; k < grid; ++k) {
      const double t = k + 1 == grid ? t1 : t0 + (t1 - t0) * k / (grid - 1);
      samples.push_back(evaluate(t, k == 0 ? domain_.lo : (k + 1 == grid ? domain_.hi : domain_.from_coord(t))));
    }
    for (int k = 0; k + 1 < grid; ++k) refine(samples[k], samples[k + 1], 0, true);

    LossProfile out;
    out.family = family_.family;
    out.domain = domain_;
    out.num_instances = 1;
    merge_breaks(out);
    out.unresolved = std::move(unresolved_);
    const std::size_t pieces = out.breakpoints.size() + 1;
    out.piece_losses.resize(pieces);
    for (std::size_t k = 0; k < pieces; ++k) {
      const double a = domain_.to_coord(out.piece_lo(k));
      const double b = domain_.to_coord(out.piece_hi(k));
      out.piece_losses[k] = loss_at_coord(0.5 * (a + b));
    }
    return out;
  }

 private:
  Sample evaluate(double coord, double param) {
    Sample s;
    s.coord = coord;
    s.param = param;
    const ScoreMatrix f = solver_.solve(family_.at(param));
    s.predictions = predict(f);
    const int c = instance_.num_classes();
    s.signs.reserve(relevant_.size() * pair_count(c));
    s.margins.reserve(relevant_.size());
    for (int node : relevant_) {
      for (int j = 0; j < c; ++j) {
        for (int k = j + 1; k < c; ++k) {
          s.signs.push_back(gap_sign(f.scores(node, j), f.scores(node, k)));
        }
      }
      const int top = s.predictions[node];
      double runner_up = -INFINITY;
      for (int k = 0; k < c; ++k) {
        if (k != top) runner_up = std::max(runner_up, f.scores(node, k));
      }
      s.margins.push_back(c > 1 ? f.scores(node, top) - runner_up : INFINITY);
    }
    return s;
  }

  Sample midpoint(const Sample& l, const Sample& r) {
    const double t = 0.5 * (l.coord + r.coord);
    return evaluate(t, domain_.from_coord(t));
  }

  bool same_predictions(const Sample& a, const Sample& b) const {
    for (int node : relevant_) {
      if (a.predictions[node] != b.predictions[node]) return false;
    }
    return true;
  }

  static bool signs_differ(const Sample& a, const Sample& b) {
    for (std::size_t i = 0; i < a.signs.size(); ++i) {
      if (a.signs[i] != 0 && b.signs[i] != 0 && a.signs[i] != b.signs[i]) return true;
    }
    return false;
  }

  // A parabola through the three margin samples dipping below zero hints at
  // an even number of crossings hidden between agreeing endpoints.
  static bool margin_dips(const Sample& l, const Sample& m, const Sample& r) {
    for (std::size_t i = 0; i < m.margins.size(); ++i) {
      const double ml = l.margins[i];
      const double mm = m.margins[i];
      const double mr = r.margins[i];
      if (!std::isfinite(ml) || !std::isfinite(mm) || !std::isfinite(mr)) continue;
      const double curvature = 0.5 * (ml + mr) - mm;
      const double slope = 0.5 * (mr - ml);
      if (curvature <= 0.0 || std::abs(slope) >= 2.0 * curvature) continue;
      if (mm - slope * slope / (4.0 * curvature) < 0.0) return true;
    }
    return false;
  }

  bool too_narrow(const Sample& l, const Sample& r, double width_limit) const {
    const double coord_eps = 4e-16 * std::max(1.0, std::max(std::abs(l.coord), std::abs(r.coord)));
    return (r.param - l.param) <= width_limit || (r.coord - l.coord) <= coord_eps;
  }

  void refine(const Sample& l, const Sample& r, int depth, bool probe) {
    const double tol = config_.tolerance;
    if (!same_predictions(l, r)) {
      if (too_narrow(l, r, tol) || depth >= config_.max_depth) {
        record_break(l, r);
        if (r.param - l.param > tol) unresolved_.push_back({index_, l.param, r.param});
        return;
      }
      const Sample m = midpoint(l, r);
      refine(l, m, depth + 1, false);
      refine(m, r, depth + 1, false);
      return;
    }

    const bool sign_trigger = signs_differ(l, r) && !too_narrow(l, r, kSignGuard * tol);
    if (!probe && !sign_trigger) return;
    if (too_narrow(l, r, tol) || depth >= config_.max_depth) {
      if (probe && depth > 0) unresolved_.push_back({index_, l.param, r.param});
      return;
    }
    const Sample m = midpoint(l, r);
    if (!same_predictions(l, m)) {
      refine(l, m, depth + 1, false);
      refine(m, r, depth + 1, false);
      return;
    }
    const bool dips = margin_dips(l, m, r);
    if (dips || sign_trigger) {
      refine(l, m, depth + 1, dips);
      refine(m, r, depth + 1, dips);
    }
  }

  void record_break(const Sample& l, const Sample& r) {
    RawBreak b;
    b.location = 0.5 * (l.param + r.param);
    for (int node : relevant_) {
      if (l.predictions[node] != r.predictions[node]) {
        b.flips.push_back({index_, node, l.predictions[node], r.predictions[node], b.location});
      }
    }
    raw_.push_back(std::move(b));
  }

  void merge_breaks(LossProfile& out) {
    std::sort(raw_.begin(), raw_.end(),
              [](const RawBreak& a, const RawBreak& b) { return a.location < b.location; });
    std::size_t k = 0;
    while (k < raw_.size()) {
      std::size_t end = k + 1;
      double sum = raw_[k].location;
      while (end < raw_.size() && raw_[end].location - raw_[end - 1].location <= config_.tolerance) {
        sum += raw_[end].location;
        ++end;
      }
      const double location = sum / static_cast<double>(end - k);
      out.breakpoints.push_back(location);
      out.multiplicity.push_back(static_cast<int>(end - k));
      for (std::size_t q = k; q < end; ++q) {
        for (FlipRecord f : raw_[q].flips) {
          f.location = location;
          out.flips.push_back(f);
        }
      }
      k = end;
    }
  }

  double loss_at_coord(double coord) {
    const ScoreMatrix f = solver_.solve(family_.at(domain_.from_coord(coord)));
    const auto pred = predict(f);
    return zero_one_loss(instance_, pred, config_.eval);
  }

  const ProblemInstance& instance_;
  int index_;
  FamilySpec family_;
  ProfilerConfig config_;
  ParamDomain domain_;
  PropagationSolver solver_;
  std::vector<int> relevant_;
  std::vector<RawBreak> raw_;
  std::vector<UnresolvedInterval> unresolved_;
};

void check_config(const ProfilerConfig& config) {
  if (!(config.tolerance > 0.0)) throw InputError("profiler tolerance must be positive");
  if (config.initial_grid < 2) throw InputError("profiler grid must have at least 2 points");
  if (config.max_depth < 1) throw InputError("profiler depth must be positive");
}

ParamDomain resolve_domain(const FamilySpec& family, const std::optional<ParamDomain>& domain) {
  ParamDomain d = domain.value_or(default_domain(family.family));
  const ParamDomain clamp = default_domain(family.family);
  d.lo = std::max(d.lo, clamp.lo);
  d.hi = std::min(d.hi, clamp.hi);
  d.log_scale = clamp.log_scale;
  if (!(d.lo < d.hi)) throw InputError("empty parameter domain");
  return d;
}

}  // namespace

std::size_t LossProfile::piece_index(double param) const {
  return static_cast<std::size_t>(
      std::upper_bound(breakpoints.begin(), breakpoints.end(), param) - breakpoints.begin());
}

double LossProfile::loss_at(double param) const { return piece_losses.at(piece_index(param)); }

double LossProfile::piece_lo(std::size_t k) const { return k == 0 ? domain.lo : breakpoints[k - 1]; }

double LossProfile::piece_hi(std::size_t k) const {
  return k == breakpoints.size() ? domain.hi : breakpoints[k];
}

double score_gap(const PropagationSolver& solver, const FamilyParam& param, int node,
                 int class_j, int class_k) {
  if (class_j == class_k) throw InputError("score_gap requires two distinct classes");
  if (class_j < 0 || class_k < 0 || class_j >= solver.num_classes() ||
      class_k >= solver.num_classes()) {
    throw InputError("score_gap class index out of range");
  }
  if (node < 0 || node >= solver.n()) throw InputError("score_gap node out of range");
  const ScoreMatrix f = solver.solve(param);
  return f.scores(node, class_j) - f.scores(node, class_k);
}

double score_gap(const ProblemInstance& instance, const FamilyParam& param, int node,
                 int class_j, int class_k) {
  return score_gap(PropagationSolver(instance), param, node, class_j, class_k);
}

LossProfile profile(const ProblemInstance& instance, const FamilySpec& family,
                    const ProfilerConfig& config) {
  check_config(config);
  if (!instance.truth()) throw InputError("profiling requires ground truth labels");
  const ParamDomain domain = resolve_domain(family, config.domain);
  return InstanceProfiler(instance, 0, family, config, domain).run();
}

LossProfile profile(std::span<const ProblemInstance> instances, const FamilySpec& family,
                    const ProfilerConfig& config) {
  if (instances.empty()) throw InputError("profile requires at least one instance");
  check_config(config);
  const ParamDomain domain = resolve_domain(family, config.domain);
  for (const auto& inst : instances) {
    if (!inst.truth()) throw InputError("profiling requires ground truth labels");
  }
  std::vector<LossProfile> parts(instances.size());
  parallel_for(instances.size(), [&](std::size_t k) {
    parts[k] = InstanceProfiler(instances[k], static_cast<int>(k), family, config, domain).run();
  });
  if (parts.size() == 1) return parts.front();

  struct Located {
    double location;
    int multiplicity;
  };
  std::vector<Located> all;
  LossProfile out;
  out.family = family.family;
  out.domain = domain;
  out.num_instances = static_cast<int>(instances.size());
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < p.breakpoints.size(); ++k) {
      all.push_back({p.breakpoints[k], p.multiplicity[k]});
    }
    out.flips.insert(out.flips.end(), p.flips.begin(), p.flips.end());
    out.unresolved.insert(out.unresolved.end(), p.unresolved.begin(), p.unresolved.end());
  }
  std::sort(all.begin(), all.end(),
            [](const Located& a, const Located& b) { return a.location < b.location; });
  std::sort(out.flips.begin(), out.flips.end(), [](const FlipRecord& a, const FlipRecord& b) {
    return std::tie(a.location, a.instance, a.node) < std::tie(b.location, b.instance, b.node);
  });
  for (std::size_t k = 0; k < all.size();) {
    std::size_t end = k + 1;
    double sum = all[k].location;
    int mult = all[k].multiplicity;
    while (end < all.size() && all[end].location - all[end - 1].location <= config.tolerance) {
      sum += all[end].location;
      mult += all[end].multiplicity;
      ++end;
    }
    out.breakpoints.push_back(sum / static_cast<double>(end - k));
    out.multiplicity.push_back(mult);
    k = end;
  }
  const std::size_t pieces = out.breakpoints.size() + 1;
  out.piece_losses.assign(pieces, 0.0);
  for (std::size_t k = 0; k < pieces; ++k) {
    const double a = domain.to_coord(out.piece_lo(k));
    const double b = domain.to_coord(out.piece_hi(k));
    const double mid = domain.from_coord(0.5 * (a + b));
    double sum = 0.0;
    for (const auto& p : parts) sum += p.loss_at(mid);
    out.piece_losses[k] = sum / static_cast<double>(parts.size());
  }
  return out;
}

std::vector<SweepPoint> dense_sweep_oracle(const ProblemInstance& instance,
                                           const FamilySpec& family, int grid_size,
                                           EvalSet eval, std::optional<ParamDomain> domain) {
  if (grid_size < 2) throw InputError("sweep grid must have at least 2 points");
  const ParamDomain d = resolve_domain(family, domain);
  const PropagationSolver solver(instance);
  const double t0 = d.to_coord(d.lo);
  const double t1 = d.to_coord(d.hi);
  std::vector<SweepPoint> out;
  out.reserve(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    double p = d.from_coord(t0 + (t1 - t0) * k / (grid_size - 1));
    if (k == 0) p = d.lo;
    if (k + 1 == grid_size) p = d.hi;
    const auto pred = predict(solver.solve(family.at(p)));
    out.push_back({p, zero_one_loss(instance, pred, eval)});
  }
  return out;
}

int GapSignChanges::max_sign_changes() const {
  int best = 0;
  for (const auto& row : sign_changes) {
    for (int v : row) best = std::max(best, v);
  }
  return best;
}

int GapSignChanges::max_prediction_flips() const {
  int best = 0;
  for (const auto& row : prediction_flips) {
    for (int v : row) best = std::max(best, v);
  }
  return best;
}

GapSignChanges count_gap_sign_changes(const ProblemInstance& instance,
                                      const FamilySpec& family, int grid_size,
                                      std::optional<ParamDomain> domain) {
  if (grid_size < 2) throw InputError("sweep grid must have at least 2 points");
  const ParamDomain d = resolve_domain(family, domain);
  const PropagationSolver solver(instance);
  const int n = instance.n();
  const int c = instance.num_classes();
  const int pairs = pair_count(c);
  std::vector<int> pair_index(c * c, -1);
  for (int j = 0, p = 0; j < c; ++j) {
    for (int k = j + 1; k < c; ++k, ++p) {
      pair_index[j * c + k] = p;
      pair_index[k * c + j] = p;
    }
  }
  GapSignChanges out;
  out.n = n;
  out.num_classes = c;
  out.sign_changes.assign(n, std::vector<int>(pairs, 0));
  out.prediction_flips.assign(n, std::vector<int>(pairs, 0));
  std::vector<signed char> last(static_cast<std::size_t>(n) * pairs, 0);
  std::vector<int> last_pred;
  const double t0 = d.to_coord(d.lo);
  const double t1 = d.to_coord(d.hi);
  for (int step = 0; step < grid_size; ++step) {
    double p = d.from_coord(t0 + (t1 - t0) * step / (grid_size - 1));
    if (step == 0) p = d.lo;
    if (step + 1 == grid_size) p = d.hi;
    const ScoreMatrix f = solver.solve(family.at(p));
    const auto pred = predict(f);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) {
        for (int k = j + 1; k < c; ++k) {
          const int pi = pair_index[j * c + k];
          const signed char s = gap_sign(f.scores(i, j), f.scores(i, k));
          signed char& prev = last[static_cast<std::size_t>(i) * pairs + pi];
          if (s != 0) {
            if (prev != 0 && s != prev) ++out.sign_changes[i][pi];
            prev = s;
          }
        }
      }
      if (!last_pred.empty() && last_pred[i] != pred[i]) {
        ++out.prediction_flips[i][pair_index[last_pred[i] * c + pred[i]]];
      }
    }
    last_pred = pred;
  }
  return out;
}

}  // namespace tunelab
