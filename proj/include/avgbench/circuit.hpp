// SPDX-License-Identifier: Apache-2.0
//
// Circuit-layout vocabulary shared by the exact simulator and the
// transfer-matrix evaluators: initial states, observables, Pauli noise and
// the brickwork tiling.
//
// Layer k (1-based) acts on nearest-neighbour tiles starting at parity
// (prep_parity + k) mod 2, where the preparation tiling counts as layer 0:
// Bell-pair products occupy even tiles (0,1),(2,3),... and the plus-state
// construction puts |+> on site 0 with Bell pairs on odd tiles. Open
// boundaries leave the outermost sites idle on mismatched layers.

#pragma once

#include "pauli.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace avgbench {

enum class InitKind { bell_product, plus_bell, explicit_product };

struct InitialState {
  InitKind kind = InitKind::bell_product;
  int L = 0;
  std::vector<Matrix2cd> site_states;  // explicit_product only

  static InitialState bell_product(int L) {
    if (L < 2 || L % 2 != 0)
      throw std::invalid_argument("bell_product: L must be even and >= 2");
    return {InitKind::bell_product, L, {}};
  }
  // |+> on site 0, Bell pairs on (1,2),(3,4),...; for even L the last site
  // is left maximally mixed
  static InitialState plus_bell(int L) {
    if (L < 2) throw std::invalid_argument("plus_bell: L must be >= 2");
    return {InitKind::plus_bell, L, {}};
  }
  static InitialState explicit_product(std::vector<Matrix2cd> sites) {
    InitialState s{InitKind::explicit_product, int(sites.size()), std::move(sites)};
    for (const auto& rho : s.site_states) {
      if ((rho - rho.adjoint()).norm() > 1e-12 || std::abs(rho.trace() - 1.0) > 1e-12)
        throw std::invalid_argument("explicit_product: sites must be density matrices");
    }
    return s;
  }

  // parity of the tiling occupied by the state preparation "layer"
  int prep_parity() const { return kind == InitKind::plus_bell ? 1 : 0; }
};

inline int layer_tile_parity(const InitialState& init, int layer) {
  return (init.prep_parity() + layer) % 2;
}

// left sites of the two-qubit tiles of one brickwork layer
inline std::vector<int> layer_tiles(int L, int parity) {
  std::vector<int> t;
  for (int s = parity; s + 1 < L; s += 2) t.push_back(s);
  return t;
}

struct Observable {
  std::vector<int> sites;  // contiguous, ascending
  MatrixXcd op;            // joint operator on the listed sites

  static Observable single(int site, const Matrix2cd& o) { return {{site}, o}; }

  static Observable pauli_at(int site, int a) { return single(site, pauli(a)); }

  int support() const { return int(sites.size()); }

  void validate() const {
    if (sites.empty()) throw std::invalid_argument("observable: empty support");
    for (size_t i = 1; i < sites.size(); ++i)
      if (sites[i] <= sites[i - 1])
        throw std::invalid_argument("observable: sites must be ascending");
    const Eigen::Index d = Eigen::Index(1) << sites.size();
    if (op.rows() != d || op.cols() != d)
      throw std::invalid_argument("observable: operator dimension mismatch");
    if ((op - op.adjoint()).norm() > 1e-12)
      throw std::invalid_argument("observable: operator must be Hermitian");
  }

  bool traceless(double tol = 1e-12) const { return std::abs(op.trace()) <= tol; }

  double operator_norm() const {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(op, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
};

// Gate- and layer-independent Pauli-diagonal noise applied to every site
// after each brickwork layer; stored through its per-qubit marginals.
struct PauliNoiseModel {
  std::array<double, 3> uniform{0.0, 0.0, 0.0};                // p_x, p_y, p_z
  std::optional<std::vector<std::array<double, 3>>> per_site;  // overrides uniform

  void validate(int L) const {
    auto check = [](const std::array<double, 3>& p) {
      if (p[0] < 0 || p[1] < 0 || p[2] < 0 || p[0] + p[1] + p[2] > 1.0 + 1e-12)
        throw std::invalid_argument("noise: invalid Pauli probabilities");
    };
    check(uniform);
    if (per_site) {
      if (int(per_site->size()) != L)
        throw std::invalid_argument("noise: per-site list does not match L");
      for (const auto& p : *per_site) check(p);
    }
  }

  std::array<double, 3> marginals(int site) const {
    return per_site ? (*per_site)[site] : uniform;
  }

  bool zero() const {
    if (per_site) {
      for (const auto& p : *per_site)
        if (p[0] != 0 || p[1] != 0 || p[2] != 0) return false;
      return true;
    }
    return uniform[0] == 0 && uniform[1] == 0 && uniform[2] == 0;
  }

  // folded single-qubit channel with this site's marginal probabilities
  Matrix4cd reduced_superop(int site) const {
    const auto p = marginals(site);
    const double p0 = 1.0 - p[0] - p[1] - p[2];
    Matrix4cd m = Matrix4cd::Zero();
    const double w[4] = {p0, p[0], p[1], p[2]};
    for (int a = 0; a < 4; ++a)
      m += w[a] * Eigen::kroneckerProduct(pauli(a), pauli(a).conjugate()).eval();
    return m;
  }
};

// Brickwork circuit of per-slot folded channels: the object every classical
// correlator scheme evaluates, and the one the dense oracle evolves.
struct ChannelCircuit {
  int L = 0;
  int T = 0;
  InitialState init;
  std::vector<std::vector<Superoperator>> layers;  // [layer-1][tile]
  std::optional<PauliNoiseModel> noise;

  std::vector<int> tiles_of_layer(int k) const {
    return layer_tiles(L, layer_tile_parity(init, k));
  }

  const Superoperator& channel_at(int layer, int left_site) const {
    const auto tiles = tiles_of_layer(layer);
    for (size_t t = 0; t < tiles.size(); ++t)
      if (tiles[t] == left_site) return layers[layer - 1][t];
    throw std::invalid_argument("channel_at: no tile starts at site " +
                                std::to_string(left_site) + " in layer " +
                                std::to_string(layer));
  }

  static ChannelCircuit uniform(int L, int T, InitialState init,
                                const Superoperator& e) {
    ChannelCircuit c;
    c.L = L;
    c.T = T;
    c.init = std::move(init);
    c.layers.resize(T);
    for (int k = 1; k <= T; ++k)
      c.layers[k - 1].assign(c.tiles_of_layer(k).size(), e);
    return c;
  }

  void validate() const {
    if (int(layers.size()) != T)
      throw std::invalid_argument("channel circuit: layer count mismatch");
    for (int k = 1; k <= T; ++k)
      if (layers[k - 1].size() != tiles_of_layer(k).size())
        throw std::invalid_argument("channel circuit: slot count mismatch");
    if (noise) noise->validate(L);
  }
};

}  // namespace avgbench
