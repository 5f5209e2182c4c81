// SPDX-License-Identifier: Apache-2.0
//
// Finite gate ensembles whose averages are space-time channels: the
// reflection ensemble about the dual-unitary point, and the one- and
// two-sided Pauli twirls. Every member is a single two-qubit unitary on the
// original pair of qubits (Pauli dressings collapse into the gate), so each
// realization preserves the circuit architecture exactly.

#pragma once

#include "kak.hpp"
#include "pauli.hpp"
#include "spacetime.hpp"

#include <numbers>
#include <vector>

namespace avgbench {

// sigma_post * U * sigma_pre as a single two-qubit unitary
struct DressedGate {
  std::array<int, 2> pre{0, 0};   // Pauli applied before, per qubit
  std::array<int, 2> post{0, 0};  // Pauli applied after, per qubit
  Matrix4cd gate = Matrix4cd::Identity();

  Matrix4cd realized() const {
    return pauli_pair(post[0], post[1]) * gate * pauli_pair(pre[0], pre[1]);
  }
};

struct GateEnsemble {
  struct Member {
    double probability = 0.0;
    DressedGate element;
  };
  std::vector<Member> members;

  void validate() const {
    double sum = 0.0;
    for (const auto& m : members) {
      if (m.probability < 0.0)
        throw std::invalid_argument("ensemble: negative probability");
      if (!is_unitary(m.element.gate, 1e-10))
        throw std::invalid_argument("ensemble: non-unitary member");
      sum += m.probability;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("ensemble: probabilities do not sum to 1");
  }
};

inline Superoperator average_channel(const GateEnsemble& e) {
  e.validate();
  MatrixXcd acc = MatrixXcd::Zero(16, 16);
  for (const auto& m : e.members)
    acc += m.probability * unitary_superop(m.element.realized()).mat;
  return {acc, 2};
}

// Uniform ensemble over the four reflections of (theta_x, theta_y) about the
// dual-unitary point pi/4; the (+,+) member is the original gate. Reflects
// the stated parameters verbatim, without re-canonicalizing, so a gate built
// directly from interaction parameters keeps its exact form in the ensemble.
inline GateEnsemble reflection_ensemble(const KakForm& k) {
  constexpr double q = std::numbers::pi / 4;
  const double dx = k.theta[0] - q;
  const double dy = k.theta[1] - q;
  GateEnsemble e;
  for (const double sx : {+1.0, -1.0})
    for (const double sy : {+1.0, -1.0}) {
      KakForm r = k;
      r.theta = {q + sx * dx, q + sy * dy, k.theta[2]};
      DressedGate g;
      g.gate = kak_compose(r);
      e.members.push_back({0.25, g});
    }
  return e;
}

inline GateEnsemble reflection_ensemble(const Matrix4cd& u) {
  return reflection_ensemble(kak_decompose(u));
}

// apply the (-,-) reflection to a form's (theta_x, theta_y)
inline KakForm reflect_about_dual_unitary(const KakForm& k) {
  constexpr double q = std::numbers::pi / 4;
  KakForm r = k;
  r.theta = {2 * q - k.theta[0], 2 * q - k.theta[1], k.theta[2]};
  return r;
}

// Two-sided Pauli twirl with a 4-way average for every seed gate. lambda = 1
// dresses (pre on qubit 2, post on qubit 1), preserving the plus transfer
// matrix; lambda = 0 dresses the mirrored legs, preserving the minus one;
// intermediate values mix the two strategies convexly.
inline GateEnsemble twirl_4way(const Matrix4cd& u, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("twirl_4way: lambda must be in [0, 1]");
  if (!is_unitary(u, 1e-10))
    throw std::invalid_argument("twirl_4way: gate is not unitary");
  GateEnsemble e;
  DressedGate undressed;
  undressed.gate = u;
  e.members.push_back({0.25, undressed});
  for (int g = 1; g <= 3; ++g)
    for (int d = 1; d <= 3; ++d) {
      if (lambda > 0.0) {
        DressedGate m;
        m.gate = u;
        m.pre = {0, g};
        m.post = {d, 0};
        e.members.push_back({lambda / 12.0, m});
      }
      if (lambda < 1.0) {
        DressedGate m;
        m.gate = u;
        m.pre = {g, 0};
        m.post = {0, d};
        e.members.push_back({(1.0 - lambda) / 12.0, m});
      }
    }
  return e;
}

enum class TwirlLeg { first, second };

// One-sided output twirl: effectively a completely depolarizing channel on
// the chosen output qubit. Twirling the first output leaves the average
// right-space-unital (a 3-way channel); the second leaves it left-unital.
inline GateEnsemble twirl_3way(const Matrix4cd& u, TwirlLeg leg = TwirlLeg::first) {
  if (!is_unitary(u, 1e-10))
    throw std::invalid_argument("twirl_3way: gate is not unitary");
  GateEnsemble e;
  for (int a = 0; a < 4; ++a) {
    DressedGate m;
    m.gate = u;
    if (leg == TwirlLeg::first)
      m.post = {a, 0};
    else
      m.post = {0, a};
    e.members.push_back({0.25, m});
  }
  return e;
}

}  // namespace avgbench
