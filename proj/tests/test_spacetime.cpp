// SPDX-License-Identifier: Apache-2.0

#include "testutil.hpp"

#include <avgbench/ensembles.hpp>
#include <avgbench/kak.hpp>
#include <avgbench/spacetime.hpp>

#include <numbers>

using namespace avgbench;
constexpr double pi = std::numbers::pi;

namespace {

Superoperator depolarizing2q() {
  std::vector<MatrixXcd> kraus;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) kraus.push_back(0.25 * pauli_pair(a, b));
  return kraus_superop(kraus);
}

Matrix4cd dual_unitary_gate(double theta_z) {
  return canonical_interaction({pi / 4, pi / 4, theta_z});
}

}  // namespace

TEST_CASE("classification of folded unitaries") {
  SECTION("dual-unitary point is 4-way") {
    const auto c = classify(unitary_superop(dual_unitary_gate(0.23)));
    REQUIRE(c.four_way());
    REQUIRE(c.max_residual() < 1e-12);
    REQUIRE(c.label() == "4-way");
  }
  SECTION("generic unitary is only tp+unital") {
    const auto c = classify(unitary_superop(canonical_interaction({0.3, 0.0, 0.0})));
    REQUIRE(c.tp);
    REQUIRE(c.unital);
    REQUIRE_FALSE(c.left_space_unital);
    REQUIRE_FALSE(c.right_space_unital);
    REQUIRE(c.label() == "tp+unital");
  }
  SECTION("reflection average of a random gate is 4-way") {
    auto g = testutil::rng(31);
    const auto c = classify(average_channel(reflection_ensemble(haar_su4(g))));
    REQUIRE(c.four_way());
    REQUIRE(c.max_residual() < 1e-10);
  }
  SECTION("depolarizing channel is 4-way") {
    REQUIRE(classify(depolarizing2q()).four_way());
  }
}

TEST_CASE("transfer matrices of reference channels") {
  SECTION("completely depolarizing channel") {
    for (const auto side : {TransferSide::plus, TransferSide::minus}) {
      const Matrix4cd m = transfer(depolarizing2q(), side);
      const auto ptm = superop_to_ptm(Superoperator{m, 1});
      MatrixXd expect = MatrixXd::Zero(4, 4);
      expect(0, 0) = 1;
      REQUIRE((ptm.mat - expect).norm() < 1e-12);
    }
  }
  SECTION("swap transports the light ray perfectly") {
    const Matrix4cd mp =
        transfer(unitary_superop(testutil::swap_matrix()), TransferSide::plus);
    REQUIRE(mp.isIdentity(1e-12));
  }
  SECTION("Haar average kills every traceless component") {
    auto g = testutil::rng(32);
    const int n = 720;
    MatrixXcd acc = MatrixXcd::Zero(16, 16);
    for (int i = 0; i < n; ++i) acc += unitary_superop(haar_su4(g)).mat / double(n);
    const Superoperator avg{acc, 2};
    for (const auto side : {TransferSide::plus, TransferSide::minus}) {
      const auto ptm = superop_to_ptm(Superoperator{transfer(avg, side), 1});
      REQUIRE(std::abs(ptm.mat(0, 0) - 1.0) < 1e-12);
      REQUIRE(ptm.mat.bottomRightCorner(3, 3).norm() < 5.0 / std::sqrt(double(n)));
    }
  }
}

TEST_CASE("transfer matrices of 4-way channels are CPTP with unit leading eigenvalue") {
  auto g = testutil::rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const Superoperator avg = average_channel(reflection_ensemble(haar_su4(g)));
    for (const auto side : {TransferSide::plus, TransferSide::minus}) {
      const Superoperator m{Matrix4cd(transfer(avg, side)), 1};
      const auto rep_cptp = check_cptp(m, 1e-9);
      REQUIRE(rep_cptp.cp);
      REQUIRE(rep_cptp.tp);
      REQUIRE(rep_cptp.unital);
      Eigen::ComplexEigenSolver<Matrix4cd> es(m.mat, false);
      const Eigen::Vector4d mods = es.eigenvalues().cwiseAbs();
      REQUIRE(mods.maxCoeff() <= 1.0 + 1e-10);
      REQUIRE(std::abs(mods.maxCoeff() - 1.0) < 1e-10);
      REQUIRE(second_eigenvalue_modulus(m.mat) <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("4-way twirl rescales one transfer matrix by 1/3 and preserves the other") {
  auto g = testutil::rng(34);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix4cd u = haar_su4(g);
    const Superoperator folded = unitary_superop(u);
    for (const double lambda : {0.0, 1.0}) {
      const Superoperator avg = average_channel(twirl_4way(u, lambda));
      const TransferSide kept = lambda == 1.0 ? TransferSide::plus : TransferSide::minus;
      const TransferSide scaled = lambda == 1.0 ? TransferSide::minus : TransferSide::plus;
      const auto p_kept = superop_to_ptm({Matrix4cd(transfer(avg, kept)), 1});
      const auto p_seed_kept = superop_to_ptm({Matrix4cd(transfer(folded, kept)), 1});
      REQUIRE((p_kept.mat - p_seed_kept.mat).norm() < 1e-10);
      const auto p_scaled = superop_to_ptm({Matrix4cd(transfer(avg, scaled)), 1});
      const auto p_seed_scaled = superop_to_ptm({Matrix4cd(transfer(folded, scaled)), 1});
      REQUIRE((p_scaled.mat.bottomRightCorner(3, 3) -
               p_seed_scaled.mat.bottomRightCorner(3, 3) / 3.0)
                  .norm() < 1e-10);
      REQUIRE(std::abs(p_scaled.mat(0, 0) - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("two_site_transfer and boundary maps on identity channels") {
  const Superoperator id2 = Superoperator::identity(2);
  const auto b = boundary_maps(id2, id2);
  REQUIRE(b.m_r.isIdentity(1e-12));

  // the identity staircase keeps Bell caps invariant on both open legs
  const auto m2 = two_site_transfer(id2, id2);
  const Eigen::Matrix<cd, 16, 1> bb = Eigen::kroneckerProduct(bell_vec(), bell_vec());
  REQUIRE((m2.adjoint() * bb - bb).norm() < 1e-12);
  REQUIRE((m2 * bb - bb).norm() < 1e-12);
}

TEST_CASE("classification over random ensembles") {
  auto g = testutil::rng(35);
  const int n = 60;
  int left_fail = 0;
  double worst4 = 0, worst3 = 0;
  for (int rep = 0; rep < n; ++rep) {
    const Matrix4cd u = haar_su4(g);
    const auto refl = classify(average_channel(reflection_ensemble(u)));
    REQUIRE(refl.four_way());
    worst4 = std::max(worst4, refl.max_residual());
    const auto tw4 = classify(average_channel(twirl_4way(u, 0.37)));
    REQUIRE(tw4.four_way());
    worst4 = std::max(worst4, tw4.max_residual());
    const auto tw3 = classify(average_channel(twirl_3way(u)));
    REQUIRE(tw3.three_way_right());
    worst3 = std::max(worst3,
                      std::max(tw3.tp_residual,
                               std::max(tw3.unital_residual, tw3.right_residual)));
    if (!tw3.left_space_unital) ++left_fail;
  }
  REQUIRE(worst4 < 1e-10);
  REQUIRE(worst3 < 1e-10);
  REQUIRE(left_fail == n);  // generic gates give genuinely 3-way averages
}

TEST_CASE("twirl_3way of a dual-unitary gate stays 4-way") {
  const auto c = classify(average_channel(twirl_3way(dual_unitary_gate(0.6))));
  REQUIRE(c.four_way());
}
