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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tunelab/gadgets.hpp"
#include "tunelab/rng.hpp"
#include "tunelab/solvers.hpp"

using namespace tunelab;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

ProblemInstance self_loops(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, i, 1.0});
  return ProblemInstance(n, 2, edges, {{0, 0}, {2, 1}}, std::nullopt,
                         std::vector<int>(n, 0));
}

ProblemInstance scaled(const ProblemInstance& inst, double k) {
  std::vector<Edge> edges = inst.edges();
  for (auto& e : edges) e.weight *= k;
  return ProblemInstance(inst.n(), inst.num_classes(), edges, inst.labels(), inst.features(),
                         inst.truth());
}

}  // namespace

TEST_CASE("alpha family") {
  SUBCASE("self-loops only give F = Y") {
    const auto inst = self_loops(4);
    for (double a : {0.1, 0.5, 0.9}) {
      CHECK(max_abs_diff(solve_local_global(inst, a).scores, label_matrix(inst)) <= 1e-12);
    }
  }
  SUBCASE("gadget predictions either side of 0.75") {
    const auto g = build_gadget(make_gadget_spec({Family::Alpha}, 0.75));
    CHECK(predict(solve_local_global(g, 0.70))[3] == 0);
    CHECK(predict(solve_local_global(g, 0.80))[3] == 1);
    CHECK(predict(solve_local_global(g, 0.75 + 1e-6))[3] == 1);
  }
  SUBCASE("random 6-node instance against the cofactor inverse") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto inst = testing::random_instance(s, 6, 2);
      const auto sys = testing::alpha_system(inst, 0.5);
      const Eigen::MatrixXd expected = testing::cofactor_inverse(sys.a) * sys.b;
      CHECK(max_abs_diff(solve_local_global(inst, 0.5).scores, expected) <= 1e-8);
    }
  }
  SUBCASE("labeled nodes keep their labels as alpha goes to zero") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      GeneratorConfig g;
      g.seed = s;
      g.n = 12;
      g.num_classes = 3;
      const auto inst = generate_random(g);
      const auto f = solve_local_global(inst, 1e-6);
      CHECK(max_abs_diff(f.scores, label_matrix(inst)) <= 1e-5);
      const auto pred = predict(f);
      for (const auto& [node, cls] : inst.labels()) CHECK(pred[node] == cls);
    }
  }
}

TEST_CASE("lambda family") {
  SUBCASE("single self-looped node") {
    ProblemInstance inst(1, 2, {{0, 0, 1.0}}, {{0, 0}});
    for (double l : {1e-3, 1.0, 50.0}) {
      const auto f = solve_smoothing(inst, l);
      CHECK(f.scores(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(predict(f)[0] == 0);
    }
  }
  SUBCASE("signed gadget flips at x / (x - 2)") {
    const auto spec = make_gadget_spec({Family::Lambda}, 2.0);
    CHECK(spec.x == doctest::Approx(4.0));
    const auto g = build_gadget(spec);
    const auto below = solve_smoothing(g, 2.0 - 1e-6, LabelEncoding::Signed);
    const auto above = solve_smoothing(g, 2.0 + 1e-6, LabelEncoding::Signed);
    CHECK(below.scores.cols() == 1);
    CHECK(below.scores(spec.node_u, 0) < 0.0);
    CHECK(above.scores(spec.node_u, 0) > 0.0);
    CHECK(predict(below)[spec.node_u] == 0);
    CHECK(predict(above)[spec.node_u] == 1);
  }
  SUBCASE("signed and one-hot predictions agree") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto inst = testing::random_instance(s, 8, 2);
      for (double l : {0.01, 1.0, 100.0}) {
        CHECK(predict(solve_smoothing(inst, l)) ==
              predict(solve_smoothing(inst, l, LabelEncoding::Signed)));
      }
    }
  }
  SUBCASE("random 5-node instance against Gaussian elimination") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto inst = testing::random_instance(s, 5, 2);
      CHECK(max_abs_diff(solve_smoothing(inst, 2.0).scores, testing::oracle_lambda(inst, 2.0)) <=
            1e-8);
    }
  }
  SUBCASE("unlabeled component is reported") {
    ProblemInstance inst(4, 2, {{0, 1, 1.0}, {2, 3, 1.0}}, {{0, 0}});
    try {
      solve_smoothing(inst, 1.0);
      FAIL("expected an error");
    } catch (const SolverError& e) {
      CHECK(std::string(e.what()).find("component 1 (nodes 2 3)") != std::string::npos);
    }
    CHECK_NOTHROW(solve_local_global(inst, 0.5));
  }
}

TEST_CASE("delta family") {
  SUBCASE("gadget flips at ln(2c) / ln(x + 2)") {
    const FamilySpec fam{Family::Delta, 0.99};
    const auto spec = make_gadget_spec(fam, 0.8);
    const auto g = build_gadget(spec);
    CHECK(std::log(2 * 0.99) / std::log(spec.x + 2) == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(predict(solve_normalized_adj(g, 0.8 - 1e-6, 0.99))[3] == spec.class_below);
    CHECK(predict(solve_normalized_adj(g, 0.8 + 1e-6, 0.99))[3] == spec.class_above);
  }
  SUBCASE("delta one half equals the symmetric normalization") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto inst = testing::random_instance(s, 9, 3);
      const Eigen::MatrixXd w = inst.dense_adjacency();
      const Eigen::VectorXd r = inst.degrees().array().rsqrt();
      const Eigen::MatrixXd sym = r.asDiagonal() * w * r.asDiagonal();
      const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(9, 9) - 0.9 * sym;
      const Eigen::MatrixXd expected = testing::naive_solve(a, label_matrix(inst));
      CHECK(max_abs_diff(solve_normalized_adj(inst, 0.5, 0.9).scores, expected) <= 1e-10);
    }
  }
  SUBCASE("random 6-node instance against a dense inverse") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto inst = testing::random_instance(s, 6, 3);
      const auto sys = testing::delta_system(inst, 0.3, 0.99);
      const Eigen::MatrixXd inverse = testing::naive_solve(sys.a, Eigen::MatrixXd::Identity(6, 6));
      CHECK(max_abs_diff(solve_normalized_adj(inst, 0.3, 0.99).scores, inverse * sys.b) <= 1e-8);
    }
  }
  SUBCASE("parameter checks") {
    const auto inst = testing::random_instance(3, 5, 2);
    CHECK_THROWS_AS(solve_normalized_adj(inst, 1.5), InputError);
    CHECK_THROWS_AS(solve_normalized_adj(inst, 0.5, 1.0), InputError);
    CHECK_THROWS_AS(solve_local_global(inst, 1.0), InputError);
    CHECK_THROWS_AS(solve_smoothing(inst, 0.0), InputError);
  }
}

TEST_CASE("edge scaling") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto inst = testing::random_instance(s, 8, 2);
    const auto big = scaled(inst, 7.5);
    CHECK(max_abs_diff(solve_local_global(inst, 0.6).scores,
                       solve_local_global(big, 0.6).scores) <= 1e-10);
    CHECK(max_abs_diff(solve_normalized_adj(inst, 0.3).scores,
                       solve_normalized_adj(big, 0.3).scores) <= 1e-10);
  }
  const auto g = build_gadget(make_gadget_spec({Family::Lambda}, 3.0));
  const auto big = scaled(g, 4.0);
  for (double l : {1.5, 2.0, 6.0, 12.0}) {
    // lambda rescales with the Laplacian.
    CHECK(predict(solve_smoothing(g, l))[2] == predict(solve_smoothing(big, 4.0 * l))[2]);
  }
}

TEST_CASE("every family matches its oracle on random instances") {
  for (std::uint64_t s = 1; s <= 15; ++s) {
    const auto inst = testing::random_instance(s, 10, 3);
    CHECK(max_abs_diff(solve_local_global(inst, 0.99).scores, testing::oracle_alpha(inst, 0.99)) <=
          1e-8);
    CHECK(max_abs_diff(solve_smoothing(inst, 1e-3).scores, testing::oracle_lambda(inst, 1e-3)) <=
          1e-8);
    CHECK(max_abs_diff(solve_normalized_adj(inst, 0.9).scores,
                       testing::oracle_delta(inst, 0.9, 0.99)) <= 1e-8);
  }
}

TEST_CASE("sparse path") {
  GeneratorConfig g;
  g.seed = 5;
  g.n = kDenseLimit + 40;
  g.num_classes = 2;
  g.edge_density = 4.0 / g.n;
  g.connected = true;
  g.label_fraction = 0.05;
  const auto inst = generate_random(g);
  const auto f = solve_local_global(inst, 0.9);
  CHECK(f.residual <= kResidualTolerance);
  const auto d = solve_normalized_adj(inst, 0.4);
  CHECK(d.residual <= kResidualTolerance);
  const auto l = solve_smoothing(inst, 0.5);
  CHECK(l.residual <= kResidualTolerance);
}

TEST_CASE("prediction and losses") {
  Eigen::MatrixXd rows(2, 2);
  rows << 0.2, 0.9, 0.5, 0.5;
  const auto pred = predict(rows);
  CHECK(pred[0] == 1);
  CHECK(pred[1] == 0);

  const std::vector<int> truth{0, 1, 1, 0};
  const std::vector<int> all{0, 1, 2, 3};
  CHECK(zero_one_loss(truth, truth, all) == 0.0);
  CHECK(zero_one_loss(std::vector<int>{1, 0, 0, 1}, truth, all) == 1.0);
  CHECK(zero_one_loss(std::vector<int>{0, 1, 1, 1}, truth, all) == 0.25);
  CHECK_THROWS_AS(zero_one_loss(truth, truth, std::vector<int>{}), InputError);

  CHECK(margin_loss(1.0, +1, 0.1) == 0.0);
  CHECK(margin_loss(0.0, +1, 0.3) == 1.0);
  CHECK(margin_loss(0.5, +1, 0.2) == 1.0);
  CHECK(margin_loss(0.5, -1, 0.2) == 1.0);
  CHECK(margin_loss(0.55, +1, 0.2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(margin_loss(0.5, 1, 0.0), InputError);

  Rng rng(17);
  for (int k = 0; k < 2000; ++k) {
    const double f = rng.uniform();
    const int y = rng.bernoulli(0.5) ? 1 : -1;
    const double gamma = rng.uniform(1e-3, 2.0);
    const bool wrong = (f > 0.5 && y < 0) || (f <= 0.5 && y > 0);
    CHECK(margin_loss(f, y, gamma) >= (wrong ? 1.0 : 0.0));
  }
}

TEST_CASE("evaluation sets") {
  const auto g = build_gadget(make_gadget_spec({Family::Alpha}, 0.75), 1);
  const auto pred = predict(solve_local_global(g, 0.7));
  CHECK(zero_one_loss(g, pred, EvalSet::Transductive) == 0.25);
  CHECK(zero_one_loss(g, pred, EvalSet::Unlabeled) == 1.0);
  const auto above = predict(solve_local_global(g, 0.8));
  CHECK(zero_one_loss(g, above, EvalSet::Transductive) == 0.0);
  // Node 0 (labeled class 0) follows u above the threshold.
  CHECK(zero_one_loss(g, above, EvalSet::All) == 0.25);
}

TEST_CASE("residual record") {
  const auto inst = testing::random_instance(4, 7, 2);
  const auto before = residual_stats().solves;
  const auto f = solve(inst, LambdaParam{3.0});
  CHECK(residual_stats().solves == before + 1);
  CHECK(f.residual <= kResidualTolerance);
  CHECK(std::holds_alternative<LambdaParam>(f.provenance));
}
