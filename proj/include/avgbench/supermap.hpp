// SPDX-License-Identifier: Apache-2.0
//
// Search for averaging strategies as diagonal rescaling supermaps: a
// 256-entry tensor x acting on a channel's Pauli transfer matrix by
// elementwise multiplication. The positivity operator S of such a supermap
// expands into 256 mutually commuting tensor products of sigma^T (x) sigma
// factors, all diagonal in the product Bell basis, so S >= 0 reduces to 256
// linear sign-pattern inequalities in x. The optimization is therefore a
// linear program over the joint eigenbasis coordinates, which coincide (up
// to 1/256) with the weights of a Pauli-dressing mixture; a dense
// eigendecomposition of the assembled S certifies every reported solution.
//
// Index conventions: Pauli pairs are flattened as 4*first + second; x is
// stored as x(out_pair, in_pair), aligned with the PTM layout. Dressings
// (pre gamma1 gamma2, post delta1 delta2) are flattened base-4 in that
// order.

#pragma once

#include "ensembles.hpp"
#include "pauli.hpp"
#include "simplex.hpp"
#include "spacetime.hpp"

#include <optional>
#include <string>

namespace avgbench {

// +1 when the Paulis commute, -1 when they anticommute
inline int commutation_sign(int a, int b) {
  return (a == 0 || b == 0 || a == b) ? 1 : -1;
}

// sigma_a^T = transpose_sign(a) * sigma_a
inline int transpose_sign(int a) { return a == 2 ? -1 : 1; }

struct RescalingSupermap {
  Eigen::Matrix<double, 16, 16> x = Eigen::Matrix<double, 16, 16>::Ones();

  double operator()(int b1, int b2, int a1, int a2) const {
    return x(4 * b1 + b2, 4 * a1 + a2);
  }
};

struct PauliDressingDistribution {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(256);  // index 64g1+16g2+4d1+d2

  double weight(int g1, int g2, int d1, int d2) const {
    return p(64 * g1 + 16 * g2 + 4 * d1 + d2);
  }
};

namespace supermap_detail {

inline int dressing_index(int g1, int g2, int d1, int d2) {
  return 64 * g1 + 16 * g2 + 4 * d1 + d2;
}

// sign tensor of one dressing: x^{gd}(out, in) = product of commutation signs
inline double dressing_sign(int j, int out, int in) {
  const int g1 = (j >> 6) & 3, g2 = (j >> 4) & 3, d1 = (j >> 2) & 3, d2 = j & 3;
  const int a1 = in >> 2, a2 = in & 3, b1 = out >> 2, b2 = out & 3;
  return double(commutation_sign(g1, a1) * commutation_sign(g2, a2) *
                commutation_sign(d1, b1) * commutation_sign(d2, b2));
}

inline Eigen::VectorXd cell_row(int out, int in) {
  Eigen::VectorXd row(256);
  for (int j = 0; j < 256; ++j) row(j) = dressing_sign(j, out, in);
  return row;
}

inline int dressing_class(int j) {
  const int g1 = (j >> 6) & 3, g2 = (j >> 4) & 3, d1 = (j >> 2) & 3, d2 = j & 3;
  return ((g1 > 0) << 3) | ((g2 > 0) << 2) | ((d1 > 0) << 1) | (d2 > 0);
}

}  // namespace supermap_detail

// Joint-eigenbasis coordinates of the positivity operator: entry j is the
// eigenvalue of S on the Bell-basis sector labeled by dressing j. Dividing
// by 256 gives the (unique) candidate Pauli-dressing weights.
inline Eigen::VectorXd supermap_spectrum(const RescalingSupermap& s) {
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(256);
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      const double v = s.x(out, in);
      if (v == 0.0) continue;
      for (int j = 0; j < 256; ++j)
        lam(j) += v * supermap_detail::dressing_sign(j, out, in);
    }
  return lam;
}

inline RescalingSupermap supermap_from_weights(const Eigen::VectorXd& q) {
  RescalingSupermap s;
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      double acc = 0.0;
      for (int j = 0; j < 256; ++j) {
        if (q(j) == 0.0) continue;
        acc += q(j) * supermap_detail::dressing_sign(j, out, in);
      }
      s.x(out, in) = acc;
    }
  return s;
}

// Dense positivity operator of the supermap, with the transposed factors of
// the Choi expansion made explicit through transpose_sign.
inline MatrixXcd assemble_positivity_operator(const RescalingSupermap& s) {
  MatrixXcd acc = MatrixXcd::Zero(256, 256);
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      const double v = s.x(out, in);
      if (v == 0.0) continue;
      const int a1 = in >> 2, a2 = in & 3, b1 = out >> 2, b2 = out & 3;
      const int tsign = transpose_sign(a1) * transpose_sign(a2) *
                        transpose_sign(b1) * transpose_sign(b2);
      const MatrixXcd half = Eigen::kroneckerProduct(
          pauli_pair(a1, a2), pauli_pair(b1, b2));
      acc += (v * tsign) * Eigen::kroneckerProduct(half, half).eval();
    }
  return acc;
}

struct SupermapCertificate {
  double min_eigenvalue = 0.0;
  double spectrum_agreement = 0.0;  // dense vs sign-pattern eigenvalues
  bool positive = false;
};

inline SupermapCertificate certify_supermap(const RescalingSupermap& s,
                                            double tol = 1e-8) {
  SupermapCertificate c;
  const MatrixXcd big = assemble_positivity_operator(s);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(big, Eigen::EigenvaluesOnly);
  Eigen::VectorXd dense = es.eigenvalues();
  Eigen::VectorXd predicted = supermap_spectrum(s);
  std::sort(dense.data(), dense.data() + dense.size());
  std::sort(predicted.data(), predicted.data() + predicted.size());
  c.min_eigenvalue = dense(0);
  c.spectrum_agreement = (dense - predicted).cwiseAbs().maxCoeff();
  c.positive = c.min_eigenvalue >= -tol;
  return c;
}

inline void validate_supermap(const RescalingSupermap& s) {
  if (std::abs(s.x(0, 0) - 1.0) > 1e-8)
    throw std::invalid_argument("supermap: identity entry must be 1");
  if (supermap_spectrum(s).minCoeff() < -1e-6)
    throw std::invalid_argument("supermap: positivity operator is not PSD");
}

// elementwise action on the Pauli transfer matrix of a two-qubit gate
inline Superoperator apply_supermap(const RescalingSupermap& s, const Matrix4cd& u) {
  validate_supermap(s);
  PauliTransferMatrix ptm = superop_to_ptm(unitary_superop(u));
  ptm.mat = ptm.mat.cwiseProduct(s.x);
  return ptm_to_superop(ptm);
}

struct DecomposeResult {
  bool feasible = false;
  PauliDressingDistribution distribution;
  double residual = 0.0;         // max |sum p x^{gd} - x_target|
  Eigen::VectorXd farkas;        // dual certificate when infeasible
  double min_coordinate = 0.0;   // most negative eigen-coordinate / 256
  int min_index = 0;
};

// Find p >= 0, sum p = 1 with sum_j p_j x^{(j)} = x_target entrywise. The
// constraint matrix is an invertible sign matrix, so the solution is unique
// when it exists; the simplex phase 1 either finds it or returns a dual
// certificate.
inline DecomposeResult lp_decompose(const RescalingSupermap& target) {
  LpProblem lp;
  lp.a.resize(256, 256);
  lp.b.resize(256);
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      const int cell = 16 * out + in;
      lp.a.row(cell) = supermap_detail::cell_row(out, in);
      lp.b(cell) = target.x(out, in);
    }
  lp.c = Eigen::VectorXd::Zero(256);
  const LpResult r = solve_lp(lp);

  DecomposeResult d;
  const Eigen::VectorXd q = supermap_spectrum(target) / 256.0;
  d.min_coordinate = q.minCoeff(&d.min_index);
  if (r.status != LpStatus::optimal) {
    d.feasible = false;
    d.farkas = r.dual;
    return d;
  }
  d.feasible = true;
  d.distribution.p = r.x;
  d.residual = (lp.a * r.x - lp.b).cwiseAbs().maxCoeff();
  return d;
}

inline GateEnsemble ensemble_from_distribution(const PauliDressingDistribution& dist,
                                               const Matrix4cd& u,
                                               double weight_tol = 1e-12) {
  GateEnsemble e;
  for (int j = 0; j < 256; ++j) {
    if (dist.p(j) <= weight_tol) continue;
    DressedGate g;
    g.pre = {(j >> 6) & 3, (j >> 4) & 3};
    g.post = {(j >> 2) & 3, j & 3};
    g.gate = u;
    e.members.push_back({dist.p(j), g});
  }
  return e;
}

// canonical tables of the two twirling strategies -----------------------

// one-sided output twirl on the first qubit: keeps exactly the coefficients
// with identity on the first output slot
inline RescalingSupermap twirl3_rescaling_table() {
  RescalingSupermap s;
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) s.x(out, in) = (out >> 2) == 0 ? 1.0 : 0.0;
  return s;
}

// two-sided twirl family; lambda = 1 preserves the plus transfer matrix,
// lambda = 0 the minus one, intermediate values interpolate
inline RescalingSupermap twirl4_rescaling_table(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("twirl4_rescaling_table: lambda must be in [0,1]");
  auto c = [](int a) { return a == 0 ? 3.0 : -1.0; };
  RescalingSupermap s;
  for (int out = 0; out < 16; ++out)
    for (int in = 0; in < 16; ++in) {
      const int a1 = in >> 2, a2 = in & 3, b1 = out >> 2, b2 = out & 3;
      const double s5 = 0.25 + c(a2) * c(b1) / 12.0;
      const double s4 = 0.25 + c(a1) * c(b2) / 12.0;
      s.x(out, in) = lambda * s5 + (1.0 - lambda) * s4;
    }
  return s;
}

// optimization ------------------------------------------------------------

enum class SdpMode { three_way, four_way };

struct SdpOptions {
  std::optional<double> lambda;  // four_way only: pin the optimal-family member
  bool force_both_unit = false;  // demand both transfer blocks preserved exactly
  bool canonical = true;         // lexicographic tie-breaks + class symmetrization
};

struct SdpResult {
  bool feasible = false;
  double optimum = 0.0;  // x_RTM (three_way) or x_RTM + x_LTM (four_way)
  RescalingSupermap x;
  Eigen::VectorXd dressing_weights;  // eigen-coordinates / 256
  SupermapCertificate certificate;
  Eigen::VectorXd farkas;
  int lp_iterations = 0;
};

namespace supermap_detail {

struct CellSet {
  std::vector<std::pair<int, int>> cells;  // (out, in)
  Eigen::VectorXd sum_row() const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(256);
    for (auto [o, i] : cells) r += cell_row(o, i);
    return r;
  }
};

inline CellSet block(bool in_first, bool out_first) {
  // in_first: input pattern (a,1) vs (1,a); out_first likewise
  CellSet set;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b) {
      const int in = in_first ? 4 * a : a;
      const int out = out_first ? 4 * b : b;
      set.cells.emplace_back(out, in);
    }
  return set;
}

inline Eigen::VectorXd class_symmetrize(const Eigen::VectorXd& q) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(16), counts = Eigen::VectorXd::Zero(16);
  for (int j = 0; j < 256; ++j) {
    sums(dressing_class(j)) += q(j);
    counts(dressing_class(j)) += 1.0;
  }
  Eigen::VectorXd out(256);
  for (int j = 0; j < 256; ++j) out(j) = sums(dressing_class(j)) / counts(dressing_class(j));
  return out;
}

}  // namespace supermap_detail

inline SdpResult solve_sdp(SdpMode mode, const SdpOptions& opts = {}) {
  using namespace supermap_detail;
  // x_RTM lives on the (a 1) -> (1 b) block, x_LTM on (1 a) -> (b 1)
  const CellSet rtm = block(true, false);
  const CellSet ltm = block(false, true);
  const CellSet kill_right = block(true, true);   // right space unitality
  const CellSet kill_left = block(false, false);  // left space unitality

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add_row = [&](const Eigen::VectorXd& r, double v) {
    rows.push_back(r);
    rhs.push_back(v);
  };

  add_row(cell_row(0, 0), 1.0);  // normalize the identity entry
  for (auto [o, i] : kill_right.cells) add_row(cell_row(o, i), 0.0);
  if (mode == SdpMode::four_way)
    for (auto [o, i] : kill_left.cells) add_row(cell_row(o, i), 0.0);

  auto add_uniformity = [&](const CellSet& set) {
    const auto [o0, i0] = set.cells.front();
    for (size_t k = 1; k < set.cells.size(); ++k) {
      const auto [o, i] = set.cells[k];
      add_row(cell_row(o, i) - cell_row(o0, i0), 0.0);
    }
  };
  add_uniformity(rtm);
  if (mode == SdpMode::four_way) add_uniformity(ltm);

  Eigen::VectorXd objective = cell_row(rtm.cells[0].first, rtm.cells[0].second);
  if (mode == SdpMode::four_way)
    objective += cell_row(ltm.cells[0].first, ltm.cells[0].second);

  if (opts.lambda) {
    if (mode != SdpMode::four_way)
      throw std::invalid_argument("solve_sdp: lambda applies to the four-way mode");
    add_row(cell_row(rtm.cells[0].first, rtm.cells[0].second),
            (1.0 + 2.0 * *opts.lambda) / 3.0);
  }
  if (opts.force_both_unit) {
    add_row(cell_row(rtm.cells[0].first, rtm.cells[0].second), 1.0);
    add_row(cell_row(ltm.cells[0].first, ltm.cells[0].second), 1.0);
  }

  auto run = [&](const Eigen::VectorXd& cost) {
    LpProblem lp;
    lp.a.resize(int(rows.size()), 256);
    lp.b.resize(int(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      lp.a.row(int(i)) = rows[i];
      lp.b(int(i)) = rhs[i];
    }
    lp.c = cost;
    return solve_lp(lp);
  };

  SdpResult out;
  LpResult r = run(-objective);
  out.lp_iterations = r.iterations;
  if (r.status == LpStatus::infeasible) {
    out.feasible = false;
    out.farkas = r.dual;
    return out;
  }
  if (r.status == LpStatus::unbounded)
    throw std::runtime_error("solve_sdp: unexpected unbounded program");
  out.feasible = true;
  out.optimum = objective.dot(r.x);

  if (opts.canonical) {
    // tie-breaks on the optimal face: keep the undressed gate with maximal
    // weight, then preserve the one-sided coefficient blocks as much as
    // possible; finally average over the Pauli-relabeling classes
    add_row(objective, out.optimum);
    Eigen::VectorXd keep_gate = Eigen::VectorXd::Zero(256);
    keep_gate(0) = 1.0;
    r = run(-keep_gate);
    if (r.status != LpStatus::optimal)
      throw std::runtime_error("solve_sdp: tie-break stage failed");
    add_row(keep_gate, r.x(0));
    const Eigen::VectorXd onesided = kill_left.sum_row() + kill_right.sum_row();
    r = run(-onesided);
    if (r.status != LpStatus::optimal)
      throw std::runtime_error("solve_sdp: tie-break stage failed");
    out.lp_iterations += r.iterations;
    out.dressing_weights = class_symmetrize(r.x);
  } else {
    out.dressing_weights = r.x;
  }
  out.x = supermap_from_weights(out.dressing_weights);
  out.certificate = certify_supermap(out.x);
  return out;
}

// close the loop: decompose, average over random seeds, and check both the
// promised classification and the elementwise rescaling relation
struct SupermapVerifyReport {
  bool ok = false;
  bool decomposable = false;
  std::string promised;
  double max_ptm_mismatch = 0.0;
  double max_class_residual = 0.0;
  int samples = 0;
};

template <typename Rng>
SupermapVerifyReport verify_supermap(const RescalingSupermap& s, int n_samples,
                                     Rng& rng, double tol = 1e-9) {
  SupermapVerifyReport rep;
  const DecomposeResult dec = lp_decompose(s);
  rep.decomposable = dec.feasible;
  if (!dec.feasible) return rep;

  auto block_norm = [&](bool in_first, bool out_first) {
    double m = 0.0;
    for (auto [o, i] : supermap_detail::block(in_first, out_first).cells)
      m = std::max(m, std::abs(s.x(o, i)));
    return m;
  };
  const bool right = block_norm(true, true) < tol;
  const bool left = block_norm(false, false) < tol;
  rep.promised = right && left ? "4-way"
                 : right       ? "3-way-right"
                 : left        ? "3-way-left"
                               : "tp+unital";

  rep.samples = n_samples;
  rep.ok = true;
  for (int k = 0; k < n_samples; ++k) {
    const Matrix4cd u = haar_su4(rng);
    const Superoperator avg =
        average_channel(ensemble_from_distribution(dec.distribution, u));
    const MatrixXd expect =
        superop_to_ptm(unitary_superop(u)).mat.cwiseProduct(s.x);
    rep.max_ptm_mismatch = std::max(
        rep.max_ptm_mismatch,
        (superop_to_ptm(avg).mat - expect).cwiseAbs().maxCoeff());
    const SpaceTimeClass c = classify(avg, tol);
    double residual = std::max(c.tp_residual, c.unital_residual);
    if (right) residual = std::max(residual, c.right_residual);
    if (left) residual = std::max(residual, c.left_residual);
    rep.max_class_residual = std::max(rep.max_class_residual, residual);
  }
  rep.ok = rep.max_ptm_mismatch < tol && rep.max_class_residual < tol;
  return rep;
}

}  // namespace avgbench
