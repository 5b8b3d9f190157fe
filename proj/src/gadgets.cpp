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

#include "tunelab/gadgets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tunelab/parallel.hpp"

namespace tunelab {

namespace {

constexpr double kThresholdAccuracy = 1e-6;
constexpr int kMaxShatterBits = 8;

double edge_weight(const FamilySpec& family, double t) {
  switch (family.family) {
    case Family::Alpha:
      return 4.0 * t * t - 2.0;
    case Family::Lambda:
      return 2.0 * t / (t - 1.0);
    case Family::Delta:
      return std::pow(2.0 * family.c_const, 1.0 / t) - 2.0;
  }
  return 0.0;
}

void check_delta_constant(double c) {
  if (!(c >= 0.5 && c < 1.0)) {
    throw InputError("delta gadgets need c_const in [0.5, 1)");
  }
}

std::string format_range(const ThresholdRange& r) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << r.lo << ", " << r.hi << ")";
  return os.str();
}

}  // namespace

std::vector<std::vector<double>> GadgetSpec::weights() const {
  if (family.family == Family::Lambda) {
    return {{0, 0, 1, 0}, {0, 0, 1, 0}, {1, 1, 0, x}, {0, 0, x, 0}};
  }
  return {{0, 1, 1, x}, {1, 0, 0, 0}, {1, 0, 0, 0}, {x, 0, 0, 0}};
}

std::vector<std::pair<int, int>> GadgetSpec::labels() const {
  if (family.family == Family::Lambda) return {{0, 0}, {1, 0}, {3, 1}};
  return {{0, 0}, {1, 1}, {2, 1}};
}

ThresholdRange admissible_thresholds(const FamilySpec& family) {
  switch (family.family) {
    case Family::Alpha:
      return {1.0 / std::sqrt(2.0), default_domain(Family::Alpha).hi};
    case Family::Lambda:
      return {1.0, default_domain(Family::Lambda).hi};
    case Family::Delta:
      check_delta_constant(family.c_const);
      return {0.0, std::log(2.0 * family.c_const) / std::log(2.0)};
  }
  return {0.0, 0.0};
}

GadgetSpec make_gadget_spec(const FamilySpec& family, double threshold) {
  const ThresholdRange range = admissible_thresholds(family);
  if (!std::isfinite(threshold) || !(threshold > range.lo && threshold < range.hi)) {
    std::ostringstream os;
    os.precision(17);
    os << family_name(family.family) << " gadget threshold " << threshold
       << " outside admissible range " << format_range(range)
       << "; the derived edge weight x must be positive";
    throw InputError(os.str());
  }
  GadgetSpec spec;
  spec.family = family;
  spec.designed_threshold = threshold;
  spec.x = edge_weight(family, threshold);
  if (!(spec.x > 0.0) || !std::isfinite(spec.x)) {
    throw InputError("derived gadget edge weight is not a positive finite number");
  }
  switch (family.family) {
    case Family::Alpha:
      spec.node_u = 3;
      break;
    case Family::Lambda:
      spec.node_u = 2;
      spec.encoding = LabelEncoding::Signed;
      break;
    case Family::Delta:
      // u follows the class-1 pair at small delta and the class-0 node beyond.
      spec.node_u = 3;
      spec.class_below = 1;
      spec.class_above = 0;
      break;
  }
  return spec;
}

ProblemInstance build_gadget(const GadgetSpec& spec) { return build_gadget(spec, spec.class_above); }

ProblemInstance build_gadget(const GadgetSpec& spec, int truth_u) {
  if (truth_u != 0 && truth_u != 1) throw InputError("gadget truth must be class 0 or 1");
  const auto w = spec.weights();
  std::vector<Edge> edges;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (w[i][j] != 0.0) edges.push_back({i, j, w[i][j]});
    }
  }
  std::map<int, int> labels;
  std::vector<int> truth(4, 0);
  for (const auto& [node, cls] : spec.labels()) {
    labels[node] = cls;
    truth[node] = cls;
  }
  truth[spec.node_u] = truth_u;
  nlohmann::json meta = {{"gadget",
                          {{"family", family_name(spec.family.family)},
                           {"c_const", spec.family.c_const},
                           {"threshold", spec.designed_threshold},
                           {"x", spec.x},
                           {"u", spec.node_u}}}};
  ProblemInstance out(4, 2, std::move(edges), std::move(labels), std::nullopt, std::move(truth),
                      std::move(meta));
  require_valid(out);
  return out;
}

FlipMeasurement verify_flip(const ProblemInstance& gadget, const GadgetSpec& spec, double tol,
                            int sweep_points) {
  if (!(tol > 0.0)) throw InputError("bisection tolerance must be positive");
  if (sweep_points < 2) throw InputError("sweep needs at least 2 points");
  const int u = spec.node_u;
  if (u < 0 || u >= gadget.n()) throw InputError("gadget node u out of range");

  const PropagationSolver solver(gadget, spec.encoding);
  const ParamDomain d = default_domain(spec.family.family);
  auto predict_u = [&](double p) { return predict(solver.solve(spec.family.at(p)))[u]; };

  FlipMeasurement out;
  out.designed = spec.designed_threshold;
  const double t0 = d.to_coord(d.lo);
  const double t1 = d.to_coord(d.hi);
  auto coord_at = [&](int k) { return t0 + (t1 - t0) * k / (sweep_points - 1); };
  int prev = predict_u(d.lo);
  int bracket = -1;
  out.class_below = prev;
  for (int k = 1; k < sweep_points; ++k) {
    const double p = k + 1 == sweep_points ? d.hi : d.from_coord(coord_at(k));
    const int cur = predict_u(p);
    if (cur != prev) {
      ++out.sweep_flips;
      if (bracket < 0) bracket = k;
      out.class_above = cur;
    }
    prev = cur;
  }
  if (out.sweep_flips != 1) {
    out.message = "expected exactly one flip of node u, found " + std::to_string(out.sweep_flips);
    return out;
  }

  double lo = coord_at(bracket - 1);
  double hi = coord_at(bracket);
  for (int iter = 0; iter < 200; ++iter) {
    if (d.from_coord(hi) - d.from_coord(lo) <= tol) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (predict_u(d.from_coord(mid)) == out.class_below ? lo : hi) = mid;
  }
  out.measured = 0.5 * (d.from_coord(lo) + d.from_coord(hi));

  std::ostringstream os;
  os.precision(17);
  if (out.class_below != spec.class_below || out.class_above != spec.class_above) {
    os << "flip direction " << out.class_below << "->" << out.class_above << " differs from design "
       << spec.class_below << "->" << spec.class_above;
  } else if (std::abs(out.measured - out.designed) > std::max(tol, kThresholdAccuracy)) {
    os << "measured threshold " << out.measured << " differs from designed " << out.designed;
  } else {
    out.ok = true;
  }
  out.message = os.str();
  return out;
}

AlternatingInstance build_alternating(const FamilySpec& family,
                                      const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw InputError("alternating instance needs at least one threshold");
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    if (!(thresholds[k] > thresholds[k - 1])) {
      throw InputError("alternating thresholds must be strictly increasing");
    }
  }
  AlternatingInstance out;
  out.thresholds = thresholds;
  const int k = static_cast<int>(thresholds.size());
  std::vector<Edge> edges;
  std::map<int, int> labels;
  std::vector<int> truth;
  truth.reserve(4 * k);
  for (int g = 0; g < k; ++g) {
    const GadgetSpec spec = make_gadget_spec(family, thresholds[g]);
    const int offset = 4 * g;
    const auto w = spec.weights();
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        if (w[i][j] != 0.0) edges.push_back({offset + i, offset + j, w[i][j]});
      }
    }
    std::vector<int> local(4, 0);
    for (const auto& [node, cls] : spec.labels()) {
      labels[offset + node] = cls;
      local[node] = cls;
    }
    local[spec.node_u] = g % 2 == 0 ? spec.class_below : spec.class_above;
    truth.insert(truth.end(), local.begin(), local.end());
    out.gadgets.push_back(spec);
  }
  const double n = 4.0 * k;
  out.l_min = (k / 2) / n;
  out.l_max = out.l_min + 1.0 / n;
  out.witness = 0.5 * (out.l_min + out.l_max);
  nlohmann::json meta = {{"alternating",
                          {{"family", family_name(family.family)},
                           {"c_const", family.c_const},
                           {"thresholds", thresholds},
                           {"witness", out.witness}}}};
  out.instance = ProblemInstance(4 * k, 2, std::move(edges), std::move(labels), std::nullopt,
                                 std::move(truth), std::move(meta));
  require_valid(out.instance);
  return out;
}

ThresholdRange shatter_ladder_range(const FamilySpec& family) {
  switch (family.family) {
    case Family::Alpha:
      return {0.72, 0.98};
    case Family::Lambda:
      return {1.5, 30.0};
    case Family::Delta: {
      if (!(family.c_const >= 0.9 && family.c_const <= 0.999)) {
        throw InputError("delta shattering needs c_const in [0.9, 0.999]");
      }
      return {0.1, admissible_thresholds(family).hi - 0.01};
    }
  }
  return {0.0, 0.0};
}

ShatterFamily build_shatter_family(const FamilySpec& family, int m) {
  if (m < 1 || m > kMaxShatterBits) {
    throw InputError("shatter family size must be between 1 and " +
                     std::to_string(kMaxShatterBits));
  }
  const ThresholdRange range = shatter_ladder_range(family);
  const ParamDomain d = default_domain(family.family);
  const int count = (1 << m) - 1;
  const double c0 = d.to_coord(range.lo);
  const double c1 = d.to_coord(range.hi);
  const double spacing = count > 1 ? (c1 - c0) / (count - 1) : 0.5 * (c1 - c0);

  std::vector<double> coords(count);
  for (int t = 0; t < count; ++t) coords[t] = count > 1 ? c0 + spacing * t : 0.5 * (c0 + c1);

  ShatterFamily out;
  out.family = family;
  out.m = m;
  out.thresholds.resize(count);
  for (int t = 0; t < count; ++t) out.thresholds[t] = d.from_coord(coords[t]);
  // Distinct edge weights keep the components distinguishable.
  for (int t = 1; t < count; ++t) {
    const double xa = edge_weight(family, out.thresholds[t - 1]);
    const double xb = edge_weight(family, out.thresholds[t]);
    if (std::abs(xa - xb) <= 1e-12 * std::max(std::abs(xa), std::abs(xb))) {
      coords[t] += (t % 2 == 0 ? 1e-4 : -1e-4) * spacing;
      out.thresholds[t] = d.from_coord(coords[t]);
    }
  }
  for (int t = 0; t < count; ++t) (void)make_gadget_spec(family, out.thresholds[t]);

  const double first = std::max(coords.front() - 0.5 * spacing,
                                 0.5 * (d.to_coord(d.lo) + coords.front()));
  const double last = std::min(coords.back() + 0.5 * spacing,
                               0.5 * (coords.back() + d.to_coord(d.hi)));
  out.cell_points.push_back(d.from_coord(first));
  for (int t = 1; t < count; ++t) {
    out.cell_points.push_back(d.from_coord(0.5 * (coords[t - 1] + coords[t])));
  }
  out.cell_points.push_back(d.from_coord(last));

  // Ladder threshold index t (1-based) toggles bit i when 2^i divides t.
  for (int i = 0; i < m; ++i) {
    std::vector<double> own;
    for (int t = 1; t <= count; ++t) {
      if (((t >> i) & 1) != (((t - 1) >> i) & 1)) own.push_back(out.thresholds[t - 1]);
    }
    out.members.push_back(build_alternating(family, own));
    out.witnesses.push_back(out.members.back().witness);
  }
  return out;
}

ShatterReport verify_shattering(const ShatterFamily& family) {
  ShatterReport report;
  report.m = family.m;
  const std::size_t cells = family.cell_points.size();
  std::vector<PropagationSolver> solvers;
  solvers.reserve(family.members.size());
  for (const auto& member : family.members) solvers.emplace_back(member.instance);

  std::vector<std::uint32_t> patterns(cells, 0);
  parallel_for(cells, [&](std::size_t cell) {
    std::uint32_t bits = 0;
    const FamilyParam param = family.family.at(family.cell_points[cell]);
    for (std::size_t i = 0; i < solvers.size(); ++i) {
      const auto pred = predict(solvers[i].solve(param));
      const double loss = zero_one_loss(family.members[i].instance, pred);
      if (loss > family.witnesses[i]) bits |= 1u << i;
    }
    patterns[cell] = bits;
  });
  const std::set<std::uint32_t> achieved(patterns.begin(), patterns.end());
  report.patterns_achieved.assign(achieved.begin(), achieved.end());
  for (std::uint32_t b = 0; b < (1u << family.m); ++b) {
    if (!achieved.count(b)) report.missing.push_back(b);
  }
  report.pass = report.missing.empty();
  return report;
}

nlohmann::json shatter_sidecar(const ShatterFamily& family) {
  nlohmann::json truth = nlohmann::json::object();
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t i = 0; i < family.members.size(); ++i) {
    truth[std::to_string(i)] = *family.members[i].instance.truth();
    levels.push_back({{"l_min", family.members[i].l_min}, {"l_max", family.members[i].l_max}});
  }
  return {{"family", family_name(family.family.family)},
          {"c_const", family.family.c_const},
          {"m", family.m},
          {"thresholds", family.thresholds},
          {"witnesses", family.witnesses},
          {"cell_points", family.cell_points},
          {"levels", levels},
          {"truth", truth}};
}

nlohmann::json gadget_sidecar(const GadgetSpec& spec, const ProblemInstance& gadget) {
  nlohmann::json truth = nlohmann::json::object();
  if (gadget.truth()) truth[std::to_string(spec.node_u)] = (*gadget.truth())[spec.node_u];
  return {{"family", family_name(spec.family.family)},
          {"c_const", spec.family.c_const},
          {"thresholds", {spec.designed_threshold}},
          {"witnesses", nlohmann::json::array()},
          {"x", spec.x},
          {"u", spec.node_u},
          {"class_below", spec.class_below},
          {"class_above", spec.class_above},
          {"truth", truth}};
}

}  // namespace tunelab
