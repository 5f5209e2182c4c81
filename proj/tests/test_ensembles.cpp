// SPDX-License-Identifier: Apache-2.0

#include "testutil.hpp"

#include <avgbench/ensembles.hpp>
#include <avgbench/kak.hpp>
#include <avgbench/spacetime.hpp>

#include <numbers>

using namespace avgbench;
constexpr double pi = std::numbers::pi;

namespace {

// Independent oracle for the twirls' rescaling action: the average's Pauli
// coefficients are the seed's multiplied by sign-counted weights. Computed
// from Pauli (anti)commutation alone, without the ensemble machinery.
int comm_sign(int a, int b) { return (a == 0 || b == 0 || a == b) ? 1 : -1; }

MatrixXd twirl3_filter() {
  MatrixXd x(16, 16);
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      double acc = 0.0;
      for (int post = 0; post < 4; ++post) acc += 0.25 * comm_sign(post, out / 4);
      x(out, in) = acc;
    }
  return x;
}

MatrixXd twirl4_filter(double lambda) {
  MatrixXd x(16, 16);
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      const int b1 = out / 4, b2 = out % 4, a1 = in / 4, a2 = in % 4;
      double s5 = 0.25, s4 = 0.25;
      for (int g = 1; g <= 3; ++g)
        for (int d = 1; d <= 3; ++d) {
          s5 += comm_sign(g, a2) * comm_sign(d, b1) / 12.0;
          s4 += comm_sign(g, a1) * comm_sign(d, b2) / 12.0;
        }
      x(out, in) = lambda * s5 + (1.0 - lambda) * s4;
    }
  return x;
}

}  // namespace

TEST_CASE("ensembles are normalized and unitary") {
  auto g = testutil::rng(41);
  const Matrix4cd u = haar_su4(g);
  for (const auto& e : {reflection_ensemble(u), twirl_4way(u, 0.5), twirl_3way(u)}) {
    double sum = 0;
    for (const auto& m : e.members) {
      REQUIRE(unitarity_residual(m.element.realized()) < 1e-12);
      sum += m.probability;
    }
    REQUIRE(std::abs(sum - 1.0) < 1e-12);
  }
  REQUIRE(twirl_4way(u, 0.0).members.size() == 10);
  REQUIRE(twirl_4way(u, 1.0).members.size() == 10);
  REQUIRE_THROWS_AS(twirl_4way(u, 1.5), std::invalid_argument);
}

TEST_CASE("reflection ensemble") {
  SECTION("dual-unitary seeds are fixed points") {
    KakForm k;
    k.theta = {pi / 4, pi / 4, 0.4};
    k.w_a = su2_exponential(0.3, 0.1, -0.2);
    const GateEnsemble e = reflection_ensemble(k);
    const Matrix4cd u = kak_compose(k);
    for (const auto& m : e.members)
      REQUIRE(testutil::mat_dist(m.element.realized(), u) < 1e-12);
    REQUIRE(classify(average_channel(e)).four_way());
  }
  SECTION("generic interaction parameters give a 4-way average") {
    KakForm k;
    k.theta = {0.3, 0.2, 0.6};
    const auto c = classify(average_channel(reflection_ensemble(k)));
    REQUIRE(c.four_way());
    REQUIRE(c.max_residual() < 1e-10);
  }
  SECTION("parameters near dual-unitarity with fixed generic locals") {
    // theta_z = 0.6, delta_x = delta_y = 0.05 and explicit one-qubit gates
    KakForm k;
    k.theta = {pi / 4 + 0.05, pi / 4 + 0.05, 0.6};
    k.w_a = su2_exponential(1.54383, 1.80539, 0.17212);
    k.w_b = su2_exponential(1.64979, 0.48791, 0.20562);
    const GateEnsemble e = reflection_ensemble(k);
    REQUIRE(testutil::mat_dist(e.members.front().element.realized(), kak_compose(k)) <
            1e-12);
    REQUIRE(classify(average_channel(e)).four_way());
  }
  SECTION("the original gate is always a member") {
    auto g = testutil::rng(42);
    const Matrix4cd u = haar_su4(g);
    const GateEnsemble e = reflection_ensemble(u);
    double best = 1e9;
    for (const auto& m : e.members)
      best = std::min(best, testutil::phase_dist(m.element.realized(), u));
    REQUIRE(best < 1e-9);
  }
  SECTION("double reflection is the identity") {
    auto g = testutil::rng(43);
    const KakForm k = kak_decompose(haar_su4(g));
    const KakForm twice = reflect_about_dual_unitary(reflect_about_dual_unitary(k));
    for (int c = 0; c < 3; ++c) REQUIRE(std::abs(twice.theta[c] - k.theta[c]) < 1e-10);
  }
}

TEST_CASE("twirl averages act as elementwise rescalings of the seed PTM") {
  auto g = testutil::rng(44);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix4cd u = haar_su4(g);
    const MatrixXd seed = superop_to_ptm(unitary_superop(u)).mat;

    const MatrixXd p3 = superop_to_ptm(average_channel(twirl_3way(u))).mat;
    REQUIRE((p3 - twirl3_filter().cwiseProduct(seed)).norm() < 1e-10);

    for (const double lambda : {0.0, 0.5, 1.0}) {
      const MatrixXd p4 = superop_to_ptm(average_channel(twirl_4way(u, lambda))).mat;
      REQUIRE((p4 - twirl4_filter(lambda).cwiseProduct(seed)).norm() < 1e-10);
    }
  }
}

TEST_CASE("twirl_4way of the identity gate") {
  const Superoperator avg = average_channel(twirl_4way(Matrix4cd::Identity(), 1.0));
  REQUIRE(classify(avg).four_way());
  // mixture of the identity and nine pairwise Pauli conjugations
  MatrixXcd expect = 0.25 * MatrixXcd::Identity(16, 16);
  for (int gq = 1; gq <= 3; ++gq)
    for (int d = 1; d <= 3; ++d)
      expect += unitary_superop(Matrix4cd(pauli_pair(d, gq))).mat / 12.0;
  REQUIRE(testutil::mat_dist(avg.mat, expect) < 1e-12);
}

TEST_CASE("average_channel is linear and CPTP") {
  auto g = testutil::rng(45);
  const Matrix4cd u = haar_su4(g);
  GateEnsemble single;
  single.members.push_back({1.0, DressedGate{{0, 0}, {0, 0}, u}});
  REQUIRE(testutil::mat_dist(average_channel(single).mat, unitary_superop(u).mat) <
          1e-13);

  const GateEnsemble e = twirl_4way(u, 0.7);
  MatrixXcd manual = MatrixXcd::Zero(16, 16);
  for (const auto& m : e.members)
    manual += m.probability * unitary_superop(m.element.realized()).mat;
  REQUIRE(testutil::mat_dist(average_channel(e).mat, manual) < 1e-13);

  const auto r = check_cptp(average_channel(e));
  REQUIRE(r.cp);
  REQUIRE(r.tp);
  REQUIRE(r.unital);
}
