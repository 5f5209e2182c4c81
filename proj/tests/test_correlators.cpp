// SPDX-License-Identifier: Apache-2.0

#include "testutil.hpp"

#include <avgbench/correlators.hpp>
#include <avgbench/simulator.hpp>

#include <chrono>
#include <numbers>

using namespace avgbench;
constexpr double pi = std::numbers::pi;

namespace {

enum class Avg { reflection, twirl4_0, twirl4_half, twirl4_1, twirl3 };

GateEnsemble make_ensemble(Avg kind, const Matrix4cd& u) {
  switch (kind) {
    case Avg::reflection: return reflection_ensemble(u);
    case Avg::twirl4_0: return twirl_4way(u, 0.0);
    case Avg::twirl4_half: return twirl_4way(u, 0.5);
    case Avg::twirl4_1: return twirl_4way(u, 1.0);
    case Avg::twirl3: return twirl_3way(u);
  }
  throw std::logic_error("bad kind");
}

// random circuit with independent seed gates per slot, averaged slot-wise
ChannelCircuit random_circuit(Avg kind, int L, int T, InitKind init,
                              std::mt19937_64& g) {
  ChannelCircuit c;
  c.L = L;
  c.T = T;
  c.init = init == InitKind::bell_product ? InitialState::bell_product(L)
                                          : InitialState::plus_bell(L);
  c.layers.resize(T);
  for (int k = 1; k <= T; ++k)
    for (size_t t = 0; t < c.tiles_of_layer(k).size(); ++t)
      c.layers[k - 1].push_back(average_channel(make_ensemble(kind, haar_su4(g))));
  return c;
}

double oracle(const ChannelCircuit& c, const Observable& o) {
  return exact_average_expectations(spec_from_channels(c, {o}))[0];
}

double oracle2(const ChannelCircuit& c, const Observable& a, const Observable& b) {
  Observable joint;
  joint.sites.resize(b.sites[0] - a.sites[0] + 1);
  for (size_t i = 0; i < joint.sites.size(); ++i) joint.sites[i] = a.sites[0] + int(i);
  const int span = int(joint.sites.size());
  MatrixXcd op = a.op;
  for (int q = 1; q < span - 1; ++q)
    op = Eigen::kroneckerProduct(op, Matrix2cd::Identity()).eval();
  op = Eigen::kroneckerProduct(op, b.op).eval();
  joint.op = op;
  return exact_average_expectations(spec_from_channels(c, {joint}))[0];
}

Observable random_traceless_single(int site, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  MatrixXcd a = n(g) * pauli(1) + n(g) * pauli(2) + n(g) * pauli(3);
  return {{site}, a / std::max(1.0, a.norm())};
}

Observable random_traceless_joint(int left, int k, std::mt19937_64& g) {
  const Eigen::Index d = Eigen::Index(1) << k;
  MatrixXcd h = haar_unitary(d, g);
  MatrixXcd op = h + h.adjoint();
  op -= (op.trace() / double(d)) * MatrixXcd::Identity(d, d);
  op /= op.norm();
  Observable o;
  for (int q = 0; q < k; ++q) o.sites.push_back(left + q);
  o.op = op;
  return o;
}

}  // namespace

TEST_CASE("single-site scheme") {
  auto g = testutil::rng(81);
  SECTION("swap circuit transports sigma_x perfectly") {
    const ChannelCircuit c = ChannelCircuit::uniform(
        8, 3, InitialState::plus_bell(8), unitary_superop(testutil::swap_matrix()));
    const Observable o = Observable::pauli_at(3, 1);
    REQUIRE(std::abs(avg_single_site(c, o) - 1.0) < 1e-12);
    REQUIRE(std::abs(oracle(c, o) - 1.0) < 1e-12);
  }
  SECTION("values vanish away from the light-ray endpoint") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 8, 3, InitKind::plus_bell, g);
    for (const int x : {0, 1, 2, 4, 5, 6}) {
      const Observable o = Observable::pauli_at(x, 3);
      REQUIRE(avg_single_site(c, o) == 0.0);
      REQUIRE(std::abs(oracle(c, o)) < 1e-12);
    }
  }
  SECTION("random one-sided twirl circuits match the oracle") {
    for (const int L : {6, 8})
      for (int T = 1; T <= 3; ++T) {
        const ChannelCircuit c = random_circuit(Avg::twirl3, L, T, InitKind::plus_bell, g);
        const Observable o = random_traceless_single(T, g);
        REQUIRE(std::abs(avg_single_site(c, o) - oracle(c, o)) < 1e-10);
      }
  }
  SECTION("coherent-error circuit at the ideal angle matches the oracle") {
    const BrickworkSpec spec = build_coherent_error_spec(1, pi / 4, 3, 8);
    const ChannelCircuit c = to_channel_circuit(spec);
    const double classical = avg_single_site(c, spec.observables[0]);
    REQUIRE(std::abs(classical - oracle(c, spec.observables[0])) < 1e-10);
    REQUIRE(std::abs(classical) > 1e-6);  // retains signal from the circuit
  }
  SECTION("reflection circuits support the scheme too") {
    const ChannelCircuit c = random_circuit(Avg::reflection, 8, 2, InitKind::plus_bell, g);
    const Observable o = random_traceless_single(2, g);
    REQUIRE(std::abs(avg_single_site(c, o) - oracle(c, o)) < 1e-10);
  }
  SECTION("preconditions") {
    const ChannelCircuit generic = ChannelCircuit::uniform(
        6, 1, InitialState::plus_bell(6),
        unitary_superop(canonical_interaction({0.3, 0.1, 0.0})));
    REQUIRE_THROWS_WITH(avg_single_site(generic, Observable::pauli_at(1, 1)),
                        Catch::Matchers::ContainsSubstring("layer 1"));
    const ChannelCircuit c = random_circuit(Avg::twirl3, 6, 1, InitKind::plus_bell, g);
    REQUIRE_THROWS_AS(avg_single_site(c, Observable::pauli_at(1, 0)),
                      std::invalid_argument);  // identity component
  }
}

TEST_CASE("two-body scheme") {
  auto g = testutil::rng(82);
  SECTION("depolarizing channels kill all correlators") {
    std::vector<MatrixXcd> kraus;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) kraus.push_back(0.25 * pauli_pair(a, b));
    const ChannelCircuit c = ChannelCircuit::uniform(
        8, 1, InitialState::bell_product(8), kraus_superop(kraus));
    REQUIRE(std::abs(avg_two_body(c, Observable::pauli_at(1, 1),
                                  Observable::pauli_at(4, 1))) < 1e-14);
  }
  SECTION("reflection-averaged circuits match the oracle at distance 2T+1") {
    for (const int L : {6, 8})
      for (int T = 1; T <= 2; ++T) {
        const ChannelCircuit c =
            random_circuit(Avg::reflection, L, T, InitKind::bell_product, g);
        for (const int i : two_body_positions(c)) {
          const Observable a = random_traceless_single(i, g);
          const Observable b = random_traceless_single(i + 2 * T + 1, g);
          const double classical = avg_two_body(c, a, b);
          const double dense = oracle2(c, a, b);
          INFO("L=" << L << " T=" << T << " i=" << i);
          REQUIRE(std::abs(classical - dense) < 1e-10);
        }
      }
  }
  SECTION("two-sided twirl circuits match the oracle") {
    for (const auto kind : {Avg::twirl4_0, Avg::twirl4_half, Avg::twirl4_1}) {
      const ChannelCircuit c = random_circuit(kind, 8, 2, InitKind::bell_product, g);
      const int i = two_body_positions(c).front();
      const Observable a = random_traceless_single(i, g);
      const Observable b = random_traceless_single(i + 5, g);
      REQUIRE(std::abs(avg_two_body(c, a, b) - oracle2(c, a, b)) < 1e-10);
    }
  }
  SECTION("correlators vanish off the critical distance and parity") {
    const ChannelCircuit c = random_circuit(Avg::reflection, 8, 1, InitKind::bell_product, g);
    // T=1: valid positions have i odd, distance 3
    for (const auto& [i, j] : std::vector<std::pair<int, int>>{
             {1, 6}, {1, 2}, {2, 5}, {0, 3}, {3, 7}}) {
      const Observable a = Observable::pauli_at(i, 3);
      const Observable b = Observable::pauli_at(j, 3);
      REQUIRE(avg_two_body(c, a, b) == 0.0);
      REQUIRE(std::abs(oracle2(c, a, b)) < 1e-12);
    }
  }
  SECTION("a 3-way circuit is rejected") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 8, 1, InitKind::bell_product, g);
    REQUIRE_THROWS_WITH(
        avg_two_body(c, Observable::pauli_at(1, 1), Observable::pauli_at(4, 1)),
        Catch::Matchers::ContainsSubstring("4-way"));
  }
}

TEST_CASE("three-site and k-body schemes") {
  auto g = testutil::rng(83);
  SECTION("depolarizing channels annihilate traceless observables") {
    std::vector<MatrixXcd> kraus;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) kraus.push_back(0.25 * pauli_pair(a, b));
    const ChannelCircuit c = ChannelCircuit::uniform(
        8, 2, InitialState::bell_product(8), kraus_superop(kraus));
    const int x = k_body_positions(c, 3).front();
    REQUIRE(std::abs(avg_three_site(c, random_traceless_joint(x, 3, g))) < 1e-13);
  }
  SECTION("boundary maps alone reproduce the oracle at T = 1") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 8, 1, InitKind::bell_product, g);
    for (const int x : k_body_positions(c, 3)) {
      const Observable o = random_traceless_joint(x, 3, g);
      REQUIRE(std::abs(avg_three_site(c, o) - oracle(c, o)) < 1e-10);
    }
  }
  SECTION("staircase products match the oracle in depth") {
    for (const int L : {6, 8})
      for (int T = 1; T <= 3; ++T) {
        const ChannelCircuit c = random_circuit(Avg::twirl3, L, T, InitKind::bell_product, g);
        for (const int x : k_body_positions(c, 3)) {
          const Observable o = random_traceless_joint(x, 3, g);
          const double via_maps = avg_three_site(c, o);
          const double via_window = avg_k_body(c, o);
          const double dense = oracle(c, o);
          INFO("L=" << L << " T=" << T << " x=" << x);
          REQUIRE(std::abs(via_maps - via_window) < 1e-11);
          REQUIRE(std::abs(via_maps - dense) < 1e-10);
        }
      }
  }
  SECTION("k = 4 windows match the oracle") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 10, 2, InitKind::bell_product, g);
    for (const int x : k_body_positions(c, 4)) {
      const Observable o = random_traceless_joint(x, 4, g);
      REQUIRE(std::abs(avg_k_body(c, o) - oracle(c, o)) < 1e-10);
    }
  }
  SECTION("k = 1 and k = 2 stay oracle-exact and vanish away from the edges") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 8, 2, InitKind::bell_product, g);
    for (const int k : {1, 2})
      for (const int x : k_body_positions(c, k)) {
        const Observable o =
            k == 1 ? random_traceless_single(x, g) : random_traceless_joint(x, 2, g);
        const double v = avg_k_body(c, o);
        REQUIRE(std::abs(v - oracle(c, o)) < 1e-10);
        // in the bulk the one-sided erasures force these to zero exactly
        if (k_body_in_strip_margins(c, x, k)) REQUIRE(std::abs(v) < 1e-12);
      }
  }
  SECTION("k = 1 on the plus-state input reduces to the single-site scheme") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 8, 2, InitKind::plus_bell, g);
    const Observable o = random_traceless_single(2, g);
    REQUIRE(avg_k_body(c, o) == avg_single_site(c, o));
  }
  SECTION("oversized supports and incompatible positions are rejected") {
    const ChannelCircuit c = random_circuit(Avg::twirl3, 8, 1, InitKind::bell_product, g);
    REQUIRE_THROWS_WITH(avg_k_body(c, random_traceless_joint(0, 7, g)),
                        Catch::Matchers::ContainsSubstring("k = 6"));
    const int bad_x = k_body_positions(c, 3).front() + 1;
    REQUIRE_THROWS_WITH(avg_k_body(c, random_traceless_joint(bad_x, 3, g)),
                        Catch::Matchers::ContainsSubstring("position"));
  }
}

TEST_CASE("noisy evaluation") {
  auto g = testutil::rng(84);
  PauliNoiseModel noise;
  noise.uniform = {0.005, 0.005, 0.005};
  SECTION("zero noise reduces to the noiseless value exactly") {
    ChannelCircuit c = random_circuit(Avg::reflection, 8, 2, InitKind::bell_product, g);
    const int i = two_body_positions(c).front();
    const Observable a = random_traceless_single(i, g);
    const Observable b = random_traceless_single(i + 5, g);
    const double clean = avg_two_body(c, a, b);
    c.noise = PauliNoiseModel{};
    REQUIRE(avg_two_body(c, a, b) == clean);
  }
  SECTION("noisy two-body values match the noisy oracle") {
    ChannelCircuit c = random_circuit(Avg::reflection, 8, 2, InitKind::bell_product, g);
    c.noise = noise;
    for (const int i : two_body_positions(c)) {
      const Observable a = random_traceless_single(i, g);
      const Observable b = random_traceless_single(i + 5, g);
      REQUIRE(std::abs(avg_two_body(c, a, b) - oracle2(c, a, b)) < 1e-10);
    }
  }
  SECTION("noisy single-site and three-site values match the noisy oracle") {
    ChannelCircuit c1 = random_circuit(Avg::twirl3, 8, 3, InitKind::plus_bell, g);
    c1.noise = noise;
    const Observable o1 = random_traceless_single(3, g);
    REQUIRE(std::abs(avg_single_site(c1, o1) - oracle(c1, o1)) < 1e-10);

    ChannelCircuit c3 = random_circuit(Avg::twirl3, 8, 2, InitKind::bell_product, g);
    c3.noise = noise;
    const int x = k_body_positions(c3, 3).front();
    const Observable o3 = random_traceless_joint(x, 3, g);
    REQUIRE(std::abs(avg_three_site(c3, o3) - oracle(c3, o3)) < 1e-10);
  }
  SECTION("full depolarization kills traceless correlators") {
    ChannelCircuit c = random_circuit(Avg::reflection, 6, 1, InitKind::bell_product, g);
    c.noise = PauliNoiseModel{};
    c.noise->uniform = {0.25, 0.25, 0.25};
    REQUIRE(std::abs(avg_two_body(c, Observable::pauli_at(1, 1),
                                  Observable::pauli_at(4, 1))) < 1e-14);
  }
  SECTION("invalid probabilities are rejected") {
    ChannelCircuit c = random_circuit(Avg::twirl3, 6, 1, InitKind::plus_bell, g);
    c.noise = PauliNoiseModel{};
    c.noise->uniform = {0.6, 0.3, 0.2};
    REQUIRE_THROWS_AS(avg_single_site(c, Observable::pauli_at(1, 1)),
                      std::invalid_argument);
  }
}

TEST_CASE("depth decay bound from the subleading transfer eigenvalue") {
  auto g = testutil::rng(85);
  const Superoperator avg = average_channel(reflection_ensemble(haar_su4(g)));
  const Matrix4cd mp = transfer(avg, TransferSide::plus);
  const double lam2 = second_eigenvalue_modulus(mp);
  // conditioning constant from the eigenvector basis of the traceless block
  Eigen::ComplexEigenSolver<Matrix4cd> es(mp);
  const double cond = es.eigenvectors().jacobiSvd().singularValues()(0) /
                      es.eigenvectors().jacobiSvd().singularValues()(3);
  const double c0 = 2.0 * cond;
  for (int T = 1; T <= 10; ++T) {
    const ChannelCircuit c =
        ChannelCircuit::uniform(2 * T + 2, T, InitialState::plus_bell(2 * T + 2), avg);
    const double v = avg_single_site(c, Observable::pauli_at(T, 3));
    REQUIRE(std::abs(v) <= c0 * std::pow(lam2, T) + 1e-12);
  }
}

TEST_CASE("classical cost is local") {
  auto g = testutil::rng(86);
  const Superoperator avg = average_channel(twirl_3way(haar_su4(g)));
  // a large chain and a deep circuit stay cheap: the contraction touches
  // only O(T) transfer objects, never the full register
  const int L = 2000, T = 400;
  const ChannelCircuit c = ChannelCircuit::uniform(L, T, InitialState::plus_bell(L), avg);
  const auto start = std::chrono::steady_clock::now();
  const double v = avg_single_site(c, Observable::pauli_at(T, 1));
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  REQUIRE(std::isfinite(v));
  REQUIRE(ms < 2000);
}
