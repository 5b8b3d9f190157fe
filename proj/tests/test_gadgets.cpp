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

#include <chrono>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tunelab/gadgets.hpp"
#include "tunelab/profiler.hpp"
#include "tunelab/rng.hpp"

using namespace tunelab;

namespace {

ProblemInstance disjoint_union(const ProblemInstance& a, const ProblemInstance& b) {
  std::vector<Edge> edges = a.edges();
  for (Edge e : b.edges()) edges.push_back({e.i + a.n(), e.j + a.n(), e.weight});
  std::map<int, int> labels = a.labels();
  for (const auto& [node, cls] : b.labels()) labels[node + a.n()] = cls;
  return ProblemInstance(a.n() + b.n(), a.num_classes(), edges, labels);
}

}  // namespace

TEST_CASE("gadget specs") {
  SUBCASE("alpha threshold 0.75 gives x = 0.25") {
    const auto s = make_gadget_spec({Family::Alpha}, 0.75);
    CHECK(s.x == doctest::Approx(0.25));
    CHECK(std::sqrt(s.x + 2) / 2 == doctest::Approx(0.75));
  }
  SUBCASE("lambda threshold 2 gives x = 4") {
    const auto s = make_gadget_spec({Family::Lambda}, 2.0);
    CHECK(s.x == doctest::Approx(4.0));
    CHECK(s.x / (s.x - 2) == doctest::Approx(2.0));
  }
  SUBCASE("delta admissibility") {
    CHECK_THROWS_AS(make_gadget_spec({Family::Delta, 0.75}, 0.8), InputError);
    CHECK_THROWS_AS(make_gadget_spec({Family::Delta, 0.75}, 0.99), InputError);
    const auto s = make_gadget_spec({Family::Delta, 0.99}, 0.98);
    CHECK(s.x > 0.0);
    CHECK(s.x == doctest::Approx(std::pow(1.98, 1 / 0.98) - 2));
    CHECK_THROWS_AS(make_gadget_spec({Family::Delta, 0.4}, 0.5), InputError);
    // Region edge: x > 0 iff t < ln(2c) / ln 2.
    const double edge = std::log(1.98) / std::log(2.0);
    CHECK_NOTHROW(make_gadget_spec({Family::Delta, 0.99}, edge - 1e-6));
    CHECK_THROWS_AS(make_gadget_spec({Family::Delta, 0.99}, edge + 1e-6), InputError);
  }
  SUBCASE("range errors") {
    CHECK_THROWS_AS(make_gadget_spec({Family::Alpha}, 0.70), InputError);
    CHECK_THROWS_AS(make_gadget_spec({Family::Alpha}, 1.0), InputError);
    CHECK_THROWS_AS(make_gadget_spec({Family::Lambda}, 1.0), InputError);
  }
}

TEST_CASE("verify_flip on designed gadgets") {
  const auto a = make_gadget_spec({Family::Alpha}, 0.75);
  const auto fa = verify_flip(build_gadget(a), a);
  CHECK(fa.ok);
  CHECK(std::abs(fa.measured - 0.75) <= 1e-6);

  const auto l = make_gadget_spec({Family::Lambda}, 2.0);
  const auto fl = verify_flip(build_gadget(l), l);
  CHECK(fl.ok);
  CHECK(std::abs(fl.measured - 2.0) <= 1e-6);

  const auto d = make_gadget_spec({Family::Delta, 0.99}, 0.5);
  const auto fd = verify_flip(build_gadget(d), d);
  CHECK(fd.ok);
  CHECK(fd.class_below == 1);
  CHECK(fd.class_above == 0);
  CHECK(std::abs(fd.measured - std::log(1.98) / std::log(d.x + 2)) <= 1e-6);
}

TEST_CASE("randomized thresholds and flip uniqueness") {
  Rng rng(2024);
  const std::vector<std::pair<FamilySpec, std::pair<double, double>>> draws{
      {{Family::Alpha}, {0.71, 0.999}},
      {{Family::Lambda}, {1.05, 1e4}},
      {{Family::Delta, 0.99}, {0.1, 0.98}}};
  for (const auto& [fam, range] : draws) {
    for (int k = 0; k < 10; ++k) {
      const double t = fam.family == Family::Lambda
                           ? std::exp(rng.uniform(std::log(range.first), std::log(range.second)))
                           : rng.uniform(range.first, range.second);
      const auto spec = make_gadget_spec(fam, t);
      const auto r = verify_flip(build_gadget(spec), spec);
      CHECK_MESSAGE(r.ok, r.message);
      CHECK(r.sweep_flips == 1);
    }
  }
}

TEST_CASE("broken gadget is reported") {
  auto spec = make_gadget_spec({Family::Alpha}, 0.75);
  const auto g = build_gadget(spec);
  spec.designed_threshold = 0.8;
  const auto r = verify_flip(g, spec);
  CHECK_FALSE(r.ok);
  CHECK(r.message.find("differs") != std::string::npos);

  // A graph whose u never changes.
  ProblemInstance flat(4, 2, {{0, 3, 1.0}, {1, 2, 1.0}}, {{0, 0}, {1, 1}, {2, 1}},
                       std::nullopt, std::vector<int>{0, 1, 1, 0});
  const auto r2 = verify_flip(flat, make_gadget_spec({Family::Alpha}, 0.75));
  CHECK_FALSE(r2.ok);
  CHECK(r2.sweep_flips == 0);
}

TEST_CASE("alternating instances") {
  SUBCASE("k = 1 reduces to a gadget") {
    const auto alt = build_alternating({Family::Alpha}, {0.8});
    CHECK(alt.instance.n() == 4);
    const auto p = profile(alt.instance, {Family::Alpha});
    CHECK(p.breakpoints.size() == 1);
    CHECK(alt.l_min < alt.witness);
    CHECK(alt.witness < alt.l_max);
  }
  SUBCASE("k = 3 levels against the dense sweep") {
    const auto alt = build_alternating({Family::Alpha}, {0.72, 0.80, 0.88});
    CHECK(alt.l_min == doctest::Approx(1.0 / 12));
    CHECK(alt.l_max == doctest::Approx(2.0 / 12));
    const auto sweep = dense_sweep_oracle(alt.instance, {Family::Alpha}, 20000);
    for (const auto& pt : sweep) {
      int crossed = 0;
      for (double t : alt.thresholds) crossed += pt.param > t;
      const double expected = crossed % 2 == 0 ? alt.l_min : alt.l_max;
      bool near = false;
      for (double t : alt.thresholds) near = near || std::abs(pt.param - t) < 1e-6;
      if (!near) CHECK(pt.loss == doctest::Approx(expected).epsilon(1e-14));
    }
  }
  SUBCASE("lambda and delta alternate too") {
    for (const FamilySpec fam : {FamilySpec{Family::Lambda}, FamilySpec{Family::Delta, 0.99}}) {
      const std::vector<double> t = fam.family == Family::Lambda ? std::vector<double>{1.5, 4.0, 20.0, 90.0}
                                                                 : std::vector<double>{0.2, 0.45, 0.7, 0.9};
      const auto alt = build_alternating(fam, t);
      const auto p = profile(alt.instance, fam);
      REQUIRE(p.breakpoints.size() == 4);
      for (std::size_t k = 0; k < p.piece_losses.size(); ++k) {
        CHECK((p.piece_losses[k] > alt.witness) == (k % 2 == 1));
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_alternating({Family::Alpha}, {0.8, 0.75}), InputError);
    CHECK_THROWS_AS(build_alternating({Family::Alpha}, {}), InputError);
    CHECK_THROWS_AS(build_alternating({Family::Alpha}, {0.5}), InputError);
  }
}

TEST_CASE("shattering") {
  SUBCASE("m = 1") {
    const auto fam = build_shatter_family({Family::Alpha}, 1);
    CHECK(fam.thresholds.size() == 1);
    CHECK(fam.members.size() == 1);
    const auto rep = verify_shattering(fam);
    CHECK(rep.pass);
    CHECK(rep.patterns_achieved.size() == 2);
  }
  SUBCASE("m = 2 alpha") {
    const auto rep = verify_shattering(build_shatter_family({Family::Alpha}, 2));
    CHECK(rep.pass);
    CHECK(rep.patterns_achieved.size() == 4);
  }
  SUBCASE("m = 3 structure") {
    const auto fam = build_shatter_family({Family::Lambda}, 3);
    CHECK(fam.thresholds.size() == 7);
    CHECK(fam.members[0].thresholds.size() == 7);
    CHECK(fam.members[1].thresholds.size() == 3);
    CHECK(fam.members[2].thresholds.size() == 1);
    CHECK(fam.members[2].thresholds[0] == fam.thresholds[3]);
    for (std::size_t k = 1; k < fam.thresholds.size(); ++k) {
      CHECK(fam.thresholds[k] > fam.thresholds[k - 1]);
    }
    const auto rep = verify_shattering(fam);
    CHECK(rep.pass);
    CHECK(rep.patterns_achieved.size() == 8);
  }
  SUBCASE("m = 4 within ten seconds") {
    const auto start = std::chrono::steady_clock::now();
    for (Family f : {Family::Alpha, Family::Lambda}) {
      const auto rep = verify_shattering(build_shatter_family({f}, 4));
      CHECK(rep.pass);
      CHECK(rep.patterns_achieved.size() == 16);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 10.0);
  }
  SUBCASE("delta family") {
    for (int m = 1; m <= 4; ++m) CHECK(verify_shattering(build_shatter_family({Family::Delta, 0.99}, m)).pass);
    CHECK_THROWS_AS(build_shatter_family({Family::Delta, 0.8}, 2), InputError);
  }
  SUBCASE("corrupted witness fails and lists the missing patterns") {
    auto fam = build_shatter_family({Family::Alpha}, 2);
    fam.witnesses[0] += 1.0;
    const auto rep = verify_shattering(fam);
    CHECK_FALSE(rep.pass);
    CHECK(rep.missing == std::vector<std::uint32_t>{1, 3});
  }
  SUBCASE("size limits") {
    CHECK_THROWS_AS(build_shatter_family({Family::Alpha}, 0), InputError);
    CHECK_THROWS_AS(build_shatter_family({Family::Alpha}, 20), InputError);
  }
}

TEST_CASE("disjoint union keeps predictions on the original nodes") {
  const auto gadget = build_gadget(make_gadget_spec({Family::Alpha}, 0.8));
  for (std::uint64_t s = 1; s <= 6; ++s) {
    const auto inst = testing::random_instance(s, 7, 2);
    const auto joined = disjoint_union(inst, gadget);
    for (const FamilyParam& p : {FamilyParam{AlphaParam{0.6}}, FamilyParam{LambdaParam{2.0}},
                                 FamilyParam{DeltaParam{0.4}}}) {
      const Eigen::MatrixXd a = solve(inst, p).scores;
      const Eigen::MatrixXd b = solve(joined, p).scores.topRows(inst.n());
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("sidecars") {
  const auto spec = make_gadget_spec({Family::Lambda}, 3.0);
  const auto g = build_gadget(spec, 0);
  const auto j = gadget_sidecar(spec, g);
  CHECK(j["family"] == "lambda");
  CHECK(j["thresholds"][0].get<double>() == 3.0);
  CHECK(j["truth"]["2"] == 0);

  const auto fam = build_shatter_family({Family::Alpha}, 2);
  const auto s = shatter_sidecar(fam);
  CHECK(s["thresholds"].size() == 3);
  CHECK(s["witnesses"].size() == 2);
  CHECK(s["truth"].size() == 2);
  CHECK(instance_from_json(to_json(fam.members[0].instance)) == fam.members[0].instance);
}
