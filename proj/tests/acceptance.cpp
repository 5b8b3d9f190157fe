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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "oracles.hpp"
#include "tunelab/gadgets.hpp"
#include "tunelab/gnn/bounds.hpp"
#include "tunelab/gnn/gcan.hpp"
#include "tunelab/gnn/sgc.hpp"
#include "tunelab/parallel.hpp"
#include "tunelab/profiler.hpp"
#include "tunelab/rng.hpp"
#include "tunelab/tuner.hpp"

using namespace tunelab;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. Gadget thresholds.
Verdict gadget_thresholds() {
  const auto start = Clock::now();
  Rng rng(101);
  int bad = 0;
  double worst = 0.0;
  for (const FamilySpec fam : {FamilySpec{Family::Alpha}, FamilySpec{Family::Lambda},
                               FamilySpec{Family::Delta, 0.99}}) {
    for (int k = 0; k < 30; ++k) {
      double t = 0.0;
      switch (fam.family) {
        case Family::Alpha: t = rng.uniform(0.71, 0.999); break;
        case Family::Lambda: t = std::exp(rng.uniform(std::log(1.05), std::log(1e4))); break;
        case Family::Delta: t = rng.uniform(0.1, 0.98); break;
      }
      const GadgetSpec spec = make_gadget_spec(fam, t);
      double analytic = 0.0;
      switch (fam.family) {
        case Family::Alpha: analytic = std::sqrt(spec.x + 2) / 2; break;
        case Family::Lambda: analytic = spec.x / (spec.x - 2); break;
        case Family::Delta: analytic = std::log(2 * fam.c_const) / std::log(spec.x + 2); break;
      }
      const FlipMeasurement m = verify_flip(build_gadget(spec), spec);
      const double err = std::abs(m.measured - analytic);
      worst = std::max(worst, err);
      if (!m.ok || err > 1e-6) ++bad;
    }
  }
  const double secs = seconds_since(start);
  return {bad == 0 && secs < 30.0,
          std::to_string(bad) + " failures of 90, max error " + fmt("%.2e", worst) + ", " +
              fmt("%.1f s", secs)};
}

// 2. Shattering for m = 1..4.
Verdict shattering() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (Family f : {Family::Alpha, Family::Lambda}) {
    for (int m = 1; m <= 4; ++m) {
      const ShatterFamily fam = build_shatter_family({f}, m);
      const ShatterReport rep = verify_shattering(fam);
      int nodes = 0;
      for (const auto& member : fam.members) nodes = std::max(nodes, member.instance.n());
      const bool this_ok = rep.pass && rep.patterns_achieved.size() == (std::size_t{1} << m) &&
                           nodes <= 4 * ((1 << m) - 1);
      ok = ok && this_ok;
      if (!this_ok) detail += std::string(family_name(f)) + " m=" + std::to_string(m) + " failed; ";
    }
  }
  const double secs = seconds_since(start);
  return {ok && secs < 60.0, detail + "8 families, " + fmt("%.1f s", secs)};
}

// 3. Prediction flips per node and class pair along a 1e5-point sweep.
Verdict breakpoint_counts() {
  const auto start = Clock::now();
  constexpr int kPerFamily = 100;
  std::vector<int> violations(3 * kPerFamily, 0);
  std::vector<int> worst_flips(3 * kPerFamily, 0);
  std::vector<int> worst_signs(3 * kPerFamily, 0);
  parallel_for(violations.size(), [&](std::size_t idx) {
    const int f = static_cast<int>(idx / kPerFamily);
    const std::uint64_t seed = derive_seed(3003, idx);
    Rng rng(seed);
    const int n = 4 + static_cast<int>(rng.below(9));
    const int c = 2 + static_cast<int>(rng.below(2));
    const auto inst = testing::random_instance(seed, n, c, rng.uniform(0.2, 0.7));
    const FamilySpec fam{static_cast<Family>(f)};
    const GapSignChanges counts = count_gap_sign_changes(inst, fam, 100000);
    worst_flips[idx] = counts.max_prediction_flips();
    worst_signs[idx] = counts.max_sign_changes();
    if (counts.max_prediction_flips() > n) violations[idx] = 1;
  });
  int total = 0;
  int worst = 0;
  int signs = 0;
  for (std::size_t k = 0; k < violations.size(); ++k) {
    total += violations[k];
    worst = std::max(worst, worst_flips[k]);
    signs = std::max(signs, worst_signs[k]);
  }
  return {total == 0, std::to_string(total) + " violations over 300 instances, most flips " +
                          std::to_string(worst) + ", most gap sign changes " + std::to_string(signs) +
                          ", " + fmt("%.1f s", seconds_since(start))};
}

// 4. Exact ERM never loses to a 1e4-point grid.
Verdict exact_dominance() {
  const auto start = Clock::now();
  int violations = 0;
  int hits = 0;
  int equal_on_hit = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(derive_seed(4004, s));
    const int m = 1 + static_cast<int>(rng.below(5));
    std::vector<ProblemInstance> set;
    for (int k = 0; k < m; ++k) {
      const int n = 4 + static_cast<int>(rng.below(9));
      set.push_back(testing::random_instance(rng.below(1u << 30), n, 2 + static_cast<int>(rng.below(2))));
    }
    const FamilySpec fam{static_cast<Family>(s % 3), 0.99};
    const TuneResult exact = erm_tune(set, fam);
    TuneOptions grid;
    grid.mode = TuneMode::Grid;
    grid.grid_points = 10000;
    const TuneResult g = erm_tune(set, fam, grid);
    if (exact.loss > g.loss) ++violations;
    // Does the grid reach a piece attaining the exact optimum?
    const LossProfile prof = profile(set, fam);
    bool hit = false;
    for (double x : g.candidates) {
      const std::size_t piece = prof.piece_index(x);
      bool on_break = false;
      for (double b : prof.breakpoints) on_break = on_break || x == b;
      if (!on_break && prof.piece_losses[piece] == exact.loss) hit = true;
    }
    if (hit) {
      ++hits;
      if (g.loss == exact.loss) {
        ++equal_on_hit;
      } else {
        ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 50 sets, grid hit the optimal piece in " +
                               std::to_string(hits) + " (equal in " + std::to_string(equal_on_hit) + "), " +
                               fmt("%.1f s", seconds_since(start))};
}

// 5. Generalization gap on the planted generator.
Verdict generalization() {
  const auto start = Clock::now();
  ExperimentConfig cfg = default_experiment_config();
  cfg.family = {Family::Delta, 0.99};
  cfg.m_train = 300;
  cfg.m_test = 300;
  double mean = 0.0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = derive_seed(5005, s);
    const ExperimentReport r = generalization_experiment(cfg);
    mean += r.gap;
    worst = std::max(worst, r.gap);
  }
  mean /= 20;
  const double secs = seconds_since(start);
  return {mean <= 0.05 && worst <= 0.1 && secs < 300.0,
          "mean gap " + fmt("%.4f", mean) + ", max gap " + fmt("%.4f", worst) + ", " + fmt("%.1f s", secs)};
}

// 6. GCAN endpoints against the GCN and GAT references.
Verdict gcan_endpoints() {
  Rng rng(606);
  int violations = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int n = 3 + static_cast<int>(rng.below(14));
    const int d = 1 + static_cast<int>(rng.below(4));
    const int depth = 1 + static_cast<int>(rng.below(2));
    const auto inst = testing::random_instance(derive_seed(6006, s), n, 2, rng.uniform(0.2, 0.7), d);
    gnn::GcanModel m;
    m.depth = depth;
    m.u.resize(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m.u(i, j) = rng.normal();
    }
    for (int l = 0; l < depth; ++l) {
      Eigen::VectorXd v(2 * d);
      for (int k = 0; k < 2 * d; ++k) v[k] = rng.normal();
      m.v.push_back(v);
    }
    m.eta = 0.0;
    const double e0 = (gnn::gcan_forward(inst, m).h.back() - testing::reference_gcn(inst, m.u, depth))
                          .cwiseAbs()
                          .maxCoeff();
    m.eta = 1.0;
    const double e1 = (gnn::gcan_forward(inst, m).h.back() - testing::reference_gat(inst, m.u, m.v, depth))
                          .cwiseAbs()
                          .maxCoeff();
    worst = std::max({worst, e0, e1});
    if (e0 > 1e-12 || e1 > 1e-12) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over 50 draws, max deviation " + fmt("%.2e", worst)};
}

// 7. SGC gradient, training and forward pass.
Verdict sgc_correctness() {
  Rng rng(707);
  double grad_err = 0.0;
  double fwd_err = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = testing::random_instance(derive_seed(7007, s), 10, 3, 0.4, 3);
    const std::vector<ProblemInstance> set{inst};
    const double beta = rng.uniform(0.0, 1.0);
    const auto design = gnn::sgc_design(set, beta, 2);
    Eigen::MatrixXd theta(3, 3);
    for (int i = 0; i < 9; ++i) theta(i / 3, i % 3) = rng.normal();
    const Eigen::MatrixXd g = gnn::sgc_gradient(design, theta);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        Eigen::MatrixXd up = theta;
        Eigen::MatrixXd dn = theta;
        up(i, j) += 1e-6;
        dn(i, j) -= 1e-6;
        const double fd = (gnn::sgc_loss(design, up) - gnn::sgc_loss(design, dn)) / 2e-6;
        grad_err = std::max(grad_err, std::abs(fd - g(i, j)) / std::max(1.0, std::abs(g(i, j))));
      }
    }
    const Eigen::MatrixXd p = gnn::sgc_forward(inst, {2, beta, theta});
    fwd_err = std::max(fwd_err, (p - testing::naive_sgc(inst, beta, 2, theta)).cwiseAbs().maxCoeff());
  }

  GeneratorConfig gc;
  gc.seed = 21;
  gc.n = 24;
  gc.edge_density = 0.4;
  gc.label_fraction = 0.5;
  gc.connected = true;
  gc.feature_dim = 3;
  gc.feature_noise = 0.2;
  const auto planted = generate_random(gc);
  const std::vector<ProblemInstance> train{planted};
  const gnn::SgcModel model{2, 0.5, gnn::sgc_train(train, 0.5, 2).theta};
  const Eigen::MatrixXd p = gnn::sgc_forward(planted, model);
  int hit = 0;
  for (const auto& [node, cls] : planted.labels()) {
    Eigen::Index arg = 0;
    p.row(node).maxCoeff(&arg);
    hit += arg == cls;
  }
  const double acc = static_cast<double>(hit) / static_cast<double>(planted.labels().size());
  return {grad_err <= 1e-5 && acc >= 0.95 && fwd_err <= 1e-10,
          "gradient error " + fmt("%.2e", grad_err) + ", train accuracy " + fmt("%.3f", acc) +
              ", forward deviation " + fmt("%.2e", fwd_err)};
}

// 8. Bound calculators.
Verdict bounds() {
  // 50-digit reference values.
  constexpr double kSgc = 7.4396287702211338362;
  constexpr double kGcan = 11.78854123114791735;
  const gnn::BoundInputs in;
  const double es = std::abs(gnn::rademacher_bound_sgc(in) - kSgc) / kSgc;
  const double eg = std::abs(gnn::rademacher_bound_gcan(in) - kGcan) / kGcan;
  bool mono = true;
  for (double m : {100.0, 1000.0, 1e4}) {
    gnn::BoundInputs a;
    a.m = m;
    gnn::BoundInputs b = a;
    b.m = 100 * m;
    mono = mono && gnn::rademacher_bound_sgc(b) < gnn::rademacher_bound_sgc(a) &&
           gnn::rademacher_bound_gcan(b) < gnn::rademacher_bound_gcan(a);
  }
  double prev = 0.0;
  for (double d : {1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    gnn::BoundInputs a;
    a.d = d;
    const double ratio = gnn::rademacher_bound_gcan(a) / gnn::rademacher_bound_sgc(a);
    mono = mono && ratio > prev;
    prev = ratio;
  }
  return {es <= 1e-12 && eg <= 1e-12 && mono, "relative errors " + fmt("%.1e", es) + " / " + fmt("%.1e", eg) +
                                                  ", monotonicity " + (mono ? "holds" : "broken")};
}

// 9. Residuals of every solve made by this binary.
Verdict residuals() {
  const ResidualStats s = residual_stats();
  return {s.violations == 0 && s.max_residual <= kResidualTolerance && s.solves > 0,
          std::to_string(s.solves) + " solves, max residual " + fmt("%.2e", s.max_residual) + ", " +
              std::to_string(s.violations) + " over tolerance"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"1 gadget thresholds", gadget_thresholds},
      {"2 shattering m=1..4", shattering},
      {"3 breakpoint counts", breakpoint_counts},
      {"4 exact vs grid ERM", exact_dominance},
      {"5 generalization gap", generalization},
      {"6 GCAN endpoints", gcan_endpoints},
      {"7 SGC correctness", sgc_correctness},
      {"8 bound calculators", bounds},
      {"9 solver residuals", residuals}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s  %-22s %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
