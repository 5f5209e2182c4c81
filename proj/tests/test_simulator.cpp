// SPDX-License-Identifier: Apache-2.0

#include "testutil.hpp"

#include <avgbench/simulator.hpp>

#include <numbers>

using namespace avgbench;
constexpr double pi = std::numbers::pi;

namespace {

Observable zz_at(int i) {
  return {{i, i + 1}, MatrixXcd(kron2(pauli(3), pauli(3)))};
}

// dense reference: apply Kraus operators as explicit full-register matrices
std::vector<cd> kraus_reference(const std::vector<cd>& vec_rho, int L,
                                const std::vector<MatrixXcd>& kraus_full) {
  const Eigen::Index d = Eigen::Index(1) << L;
  MatrixXcd rho(d, d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) rho(m, n) = vec_rho[size_t(m) * d + n];
  MatrixXcd out = MatrixXcd::Zero(d, d);
  for (const auto& k : kraus_full) out += k * rho * k.adjoint();
  std::vector<cd> res(size_t(d) * d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) res[size_t(m) * d + n] = out(m, n);
  return res;
}

double max_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("initial states") {
  SECTION("bell product correlations") {
    DenseState rho(InitialState::bell_product(4));
    REQUIRE(std::abs(rho.trace() - 1.0) < 1e-12);
    REQUIRE(std::abs(rho.purity() - 1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation(zz_at(0)) - 1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation({{0, 1}, MatrixXcd(kron2(pauli(1), pauli(1)))}) -
                     1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation({{0, 1}, MatrixXcd(kron2(pauli(2), pauli(2)))}) +
                     1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation(Observable::pauli_at(2, 3))) < 1e-12);
    REQUIRE(std::abs(rho.expectation(zz_at(1))) < 1e-12);
  }
  SECTION("plus-state construction with a mixed trailing site") {
    DenseState rho(InitialState::plus_bell(6));
    REQUIRE(std::abs(rho.trace() - 1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation(Observable::pauli_at(0, 1)) - 1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation(zz_at(1)) - 1.0) < 1e-12);
    REQUIRE(std::abs(rho.expectation(Observable::pauli_at(5, 3))) < 1e-12);
    REQUIRE(rho.purity() < 1.0 - 1e-3);  // trailing site is maximally mixed
  }
  SECTION("statevector matches the dense state on pure inits") {
    const InitialState init = InitialState::bell_product(4);
    DenseState rho(init);
    Statevector psi(init);
    for (const auto& o : {zz_at(0), zz_at(1), Observable::pauli_at(3, 1)})
      REQUIRE(std::abs(rho.expectation(o) - psi.expectation(o)) < 1e-12);
  }
}

TEST_CASE("pair-channel kernel against explicit Kraus conjugation") {
  auto g = testutil::rng(71);
  const int L = 3;
  for (int p = 0; p <= 1; ++p) {
    DenseState rho(InitialState::explicit_product(
        {testutil::random_density(2, g), testutil::random_density(2, g),
         testutil::random_density(2, g)}));
    // random CPTP pair channel from two Kraus operators
    const MatrixXcd big = haar_unitary(8, g);
    std::vector<MatrixXcd> kraus = {big.block(0, 0, 4, 4), big.block(4, 0, 4, 4)};
    const Superoperator e = kraus_superop(kraus);

    std::vector<MatrixXcd> kraus_full;
    for (const auto& k : kraus) {
      MatrixXcd f = p == 0 ? Eigen::kroneckerProduct(k, Matrix2cd::Identity()).eval()
                           : Eigen::kroneckerProduct(Matrix2cd::Identity(), k).eval();
      kraus_full.push_back(f);
    }
    const auto expect = kraus_reference(rho.data(), L, kraus_full);
    rho.apply_pair_channel(p, e.mat);
    REQUIRE(max_diff(rho.data(), expect) < 1e-13);
  }
}

TEST_CASE("site-channel kernel and noise layers") {
  auto g = testutil::rng(72);
  const int L = 3;
  PauliNoiseModel noise;
  noise.uniform = {0.02, 0.013, 0.04};
  DenseState rho(InitialState::explicit_product(
      {testutil::random_density(2, g), testutil::random_density(2, g),
       testutil::random_density(2, g)}));
  const auto pr = noise.uniform;
  const double p0 = 1 - pr[0] - pr[1] - pr[2];
  std::vector<cd> ref = rho.data();
  for (int s = 0; s < L; ++s) {
    std::vector<MatrixXcd> kraus_full;
    for (int a = 0; a < 4; ++a) {
      const double w = a == 0 ? p0 : pr[a - 1];
      std::vector<int> digits(L, 0);
      digits[s] = a;
      kraus_full.push_back(std::sqrt(w) * pauli_string(digits));
    }
    ref = kraus_reference(ref, L, kraus_full);
  }
  rho.apply_noise_layer(noise);
  REQUIRE(max_diff(rho.data(), ref) < 1e-13);
}

TEST_CASE("exact average evolution") {
  SECTION("identity circuit preserves Bell correlations") {
    BrickworkSpec spec = BrickworkSpec::uniform(
        4, 2, InitialState::bell_product(4),
        BrickworkSpec::Slot::from_gate(Matrix4cd::Identity()));
    spec.observables = {zz_at(0)};
    REQUIRE(std::abs(exact_average_expectations(spec)[0] - 1.0) < 1e-12);
  }
  SECTION("averaged channels equal the weighted member evolutions") {
    auto g = testutil::rng(73);
    BrickworkSpec spec = BrickworkSpec::uniform(
        4, 2, InitialState::bell_product(4),
        BrickworkSpec::Slot::from_ensemble(twirl_3way(haar_su4(g))));
    spec.observables = {zz_at(0), zz_at(2), Observable::pauli_at(1, 1)};
    const auto exact = exact_average_expectations(spec);
    const auto enumerated = enumerate_exhaustive(spec);
    for (size_t i = 0; i < exact.size(); ++i)
      REQUIRE(std::abs(exact[i] - enumerated[i]) < 1e-10);
  }
  SECTION("exhaustive identity also holds with reflections and mixed sites") {
    auto g = testutil::rng(74);
    BrickworkSpec spec = BrickworkSpec::uniform(
        4, 2, InitialState::plus_bell(4),
        BrickworkSpec::Slot::from_ensemble(reflection_ensemble(haar_su4(g))));
    spec.observables = {Observable::pauli_at(2, 1), zz_at(1)};
    const auto exact = exact_average_expectations(spec);
    const auto enumerated = enumerate_exhaustive(spec);
    for (size_t i = 0; i < exact.size(); ++i)
      REQUIRE(std::abs(exact[i] - enumerated[i]) < 1e-10);
  }
  SECTION("purity never increases under unital averaged channels") {
    auto g = testutil::rng(75);
    const InitialState init = InitialState::bell_product(6);
    DenseState rho(init);
    double last = rho.purity();
    for (int k = 1; k <= 4; ++k) {
      const auto tiles = layer_tiles(6, layer_tile_parity(init, k));
      for (int t : tiles)
        rho.apply_pair_channel(t, average_channel(twirl_4way(haar_su4(g), 0.5)).mat);
      const double now = rho.purity();
      REQUIRE(now <= last + 1e-12);
      last = now;
    }
  }
}

TEST_CASE("sampled rounds") {
  auto g = testutil::rng(76);
  SECTION("single-member ensembles have zero variance") {
    BrickworkSpec spec = BrickworkSpec::uniform(
        4, 2, InitialState::bell_product(4),
        BrickworkSpec::Slot::from_gate(haar_su4(g)));
    spec.observables = {zz_at(0)};
    const SampleRun run = sample_rounds(spec, 32, 7);
    const double exact = exact_average_expectations(spec)[0];
    REQUIRE(run.summary.stddev[0] < 1e-12);
    REQUIRE(std::abs(run.summary.mean[0] - exact) < 1e-10);
  }
  SECTION("sampling is reproducible and thread-count independent") {
    BrickworkSpec spec = BrickworkSpec::uniform(
        6, 3, InitialState::plus_bell(6),
        BrickworkSpec::Slot::from_ensemble(reflection_ensemble(haar_su4(g))));
    spec.observables = {Observable::pauli_at(3, 1)};
    const SampleRun a = sample_rounds(spec, 40, 99, 1);
    const SampleRun b = sample_rounds(spec, 40, 99, 3);
    for (int r = 0; r < 40; ++r) {
      REQUIRE(a.rounds[r].choices == b.rounds[r].choices);
      REQUIRE(a.rounds[r].values[0] == b.rounds[r].values[0]);
    }
  }
  SECTION("sample mean converges to the averaged-channel value") {
    BrickworkSpec spec = BrickworkSpec::uniform(
        6, 2, InitialState::bell_product(6),
        BrickworkSpec::Slot::from_ensemble(twirl_4way(haar_su4(g), 1.0)));
    spec.observables = {zz_at(2)};
    const SampleRun run = sample_rounds(spec, 2000, 1234);
    const double exact = exact_average_expectations(spec)[0];
    REQUIRE(std::abs(run.summary.mean[0] - exact) <=
            5.0 * std::max(run.summary.standard_error[0], 1e-6));
  }
}

TEST_CASE("finite-shot estimation") {
  auto g = testutil::rng(77);
  SECTION("eigenstates give zero-variance estimates") {
    const Statevector psi(InitialState::bell_product(4));
    std::mt19937_64 shots_rng(5);
    const double est = shot_sample(psi, zz_at(0), 100, shots_rng);
    REQUIRE(est == 1.0);
  }
  SECTION("estimator is unbiased within statistical error") {
    BrickworkSpec spec = BrickworkSpec::uniform(
        4, 2, InitialState::bell_product(4),
        BrickworkSpec::Slot::from_gate(haar_su4(g)));
    Statevector psi(spec.init);
    for (int k = 1; k <= spec.T; ++k)
      for (int t : spec.tiles_of_layer(k)) psi.apply_gate(t, spec.layers[k - 1][0].gate);
    const Observable o = Observable::pauli_at(1, 3);
    const double exact = psi.expectation(o);
    const int shots = 200000;
    std::mt19937_64 shots_rng(17);
    const double est = shot_sample(psi, o, shots, shots_rng);
    // <Z> outcomes sit in {-1, 1}: per-shot variance is at most 1
    REQUIRE(std::abs(est - exact) < 5.0 / std::sqrt(double(shots)));
  }
  SECTION("fixed seeds reproduce bit-identical estimates") {
    const Statevector psi(InitialState::plus_bell(4));
    std::mt19937_64 r1(3), r2(3);
    const Observable o = sample_complexity_observable(1);
    REQUIRE(shot_sample(psi, o, 5000, r1) == shot_sample(psi, o, 5000, r2));
  }
}

TEST_CASE("coherent-error experiment gates") {
  for (int n = 1; n <= 3; ++n) {
    REQUIRE(unitarity_residual(coherent_error_gate(n, pi / 4)) < 1e-12);
    REQUIRE(unitarity_residual(coherent_error_gate(n, pi / 4 + 0.3)) < 1e-12);
  }
  // phi = pi/4 is the exact T gate
  Matrix2cd texp;
  texp << 1, 0, 0, std::exp(cd(0, pi / 4));
  REQUIRE(testutil::mat_dist(t_gate(pi / 4), texp) < 1e-15);
  const BrickworkSpec spec = build_coherent_error_spec(1, pi / 4);
  REQUIRE(spec.L == 12);
  REQUIRE(spec.T == 5);
  REQUIRE(spec.observables.size() == 1);
  REQUIRE(spec.observables[0].sites[0] == 5);
}

TEST_CASE("sample-complexity experiment construction") {
  const BrickworkSpec spec = build_sample_complexity_spec(3);
  REQUIRE(spec.L == 8);
  for (int k = 1; k <= 3; ++k) {
    const auto& slot = spec.layers[k - 1][0];
    REQUIRE(slot.kind == BrickworkSpec::Slot::Kind::ensemble);
    REQUIRE(classify(average_channel(slot.ensemble)).four_way());
  }
  // observable is normalized for benchmarking
  REQUIRE(spec.observables[0].operator_norm() <= 1.0 + 1e-12);
  REQUIRE(spec.observables[0].traceless());
  REQUIRE(build_sample_complexity_spec(9).L == 20);
}
