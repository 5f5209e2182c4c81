// SPDX-License-Identifier: Apache-2.0
//
// Cartan decomposition of two-qubit unitaries into
//   U = e^{i phase} (w_a (x) w_b) exp(i sum_c theta_c sigma_c (x) sigma_c) (v_a (x) v_b)
// and exact recomposition. The interaction exponential is evaluated in the
// magic basis, where it is diagonal. Decomposition diagonalizes the
// complex-symmetric matrix M^T M (M the magic-basis image of U) through its
// commuting real and imaginary parts; degenerate spectra are handled by
// retrying with random real mixtures drawn from a fixed-seed generator.

#pragma once

#include "pauli.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace avgbench {

struct KakForm {
  Matrix2cd w_a = Matrix2cd::Identity();  // post locals (left factor: qubit a)
  Matrix2cd w_b = Matrix2cd::Identity();
  Matrix2cd v_a = Matrix2cd::Identity();  // pre locals
  Matrix2cd v_b = Matrix2cd::Identity();
  std::array<double, 3> theta{0.0, 0.0, 0.0};
  double phase = 0.0;
};

namespace magic {

// columns: |F+>, i|F->, i|P+>, |P-> (Bell-type vectors)
inline const Matrix4cd& basis() {
  static const Matrix4cd b = [] {
    const double s = 1.0 / std::sqrt(2.0);
    Matrix4cd m;
    m << cd(s, 0), cd(0, s), cd(0, 0), cd(0, 0),    //
        cd(0, 0), cd(0, 0), cd(0, s), cd(s, 0),     //
        cd(0, 0), cd(0, 0), cd(0, s), cd(-s, 0),    //
        cd(s, 0), cd(0, -s), cd(0, 0), cd(0, 0);
    return m;
  }();
  return b;
}

// eigenphases of exp(i sum theta_c sigma_c sigma_c) on the basis columns
inline std::array<double, 4> phases_from_theta(const std::array<double, 3>& t) {
  return {t[0] - t[1] + t[2], -t[0] + t[1] + t[2], t[0] + t[1] - t[2],
          -t[0] - t[1] - t[2]};
}

inline std::array<double, 3> theta_from_phases(const std::array<double, 4>& f) {
  return {(f[0] - f[1] + f[2] - f[3]) / 4.0, (-f[0] + f[1] + f[2] - f[3]) / 4.0,
          (f[0] + f[1] - f[2] - f[3]) / 4.0};
}

}  // namespace magic

// exp(i (a sigma_x + b sigma_y + c sigma_z)) via the axis-angle form
inline Matrix2cd su2_exponential(double a, double b, double c) {
  const double t = std::sqrt(a * a + b * b + c * c);
  if (t < 1e-300) return Matrix2cd::Identity();
  const Matrix2cd n = (a * pauli(1) + b * pauli(2) + c * pauli(3)) / t;
  return std::cos(t) * Matrix2cd::Identity() + cd(0, std::sin(t)) * n;
}

// exp(i sum_c theta_c sigma_c (x) sigma_c), computed in its magic eigenbasis
inline Matrix4cd canonical_interaction(const std::array<double, 3>& theta) {
  const auto f = magic::phases_from_theta(theta);
  Vector4cd d;
  for (int j = 0; j < 4; ++j) d(j) = std::exp(cd(0, f[j]));
  return magic::basis() * d.asDiagonal() * magic::basis().adjoint();
}

inline Matrix4cd kak_compose(const KakForm& k) {
  return std::exp(cd(0, k.phase)) * kron2(k.w_a, k.w_b) *
         canonical_interaction(k.theta) * kron2(k.v_a, k.v_b);
}

namespace detail {

// split K = e^{i phase} (a (x) b) with det a = det b = 1
inline std::tuple<Matrix2cd, Matrix2cd, double> kron_split(const Matrix4cd& k) {
  int a0 = 0, b0 = 0;
  double best = -1.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double nb = k.block<2, 2>(2 * a, 2 * b).norm();
      if (nb > best) best = nb, a0 = a, b0 = b;
    }
  Matrix2cd bm = k.block<2, 2>(2 * a0, 2 * b0);
  const cd db = bm.determinant();
  if (std::abs(db) < 1e-12)
    throw std::runtime_error("kron_split: singular block");
  bm /= std::sqrt(db);
  Matrix2cd am;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      am(a, b) = 0.5 * (k.block<2, 2>(2 * a, 2 * b) * bm.adjoint()).trace();
  const double phase = std::arg(am.determinant()) / 2.0;
  am *= std::exp(cd(0, -phase));
  if ((Eigen::kroneckerProduct(am, bm) * std::exp(cd(0, phase)) - k).norm() > 1e-9)
    throw std::runtime_error("kron_split: input is not a tensor product");
  return {am, bm, phase};
}

// m2 = P diag(d) P^T with P in SO(4) real, |d_j| = 1
inline std::pair<Eigen::Matrix4d, Vector4cd> diagonalize_complex_symmetric(
    const Matrix4cd& m2) {
  const Eigen::Matrix4d re = m2.real(), im = m2.imag();
  std::mt19937_64 rng(0x6b616b);  // fixed seed: deterministic fallback order
  std::normal_distribution<double> dist;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double t = attempt == 0 ? 1.0 : dist(rng);
    const double s = attempt == 0 ? 0.618 : dist(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(t * re + s * im);
    Eigen::Matrix4d p = es.eigenvectors();
    if (p.determinant() < 0) p.col(3) *= -1.0;
    const Matrix4cd check = p.transpose() * m2 * p;
    const Vector4cd d = check.diagonal();
    if ((Matrix4cd(d.asDiagonal()) - check).norm() < 1e-11) return {p, d};
  }
  throw std::runtime_error("kak: failed to diagonalize M^T M");
}

inline const Matrix2cd& axis_swap_generator(int fixed_axis) {
  // exp(-i pi sigma/4) about the fixed axis swaps the other two interactions
  static const std::array<Matrix2cd, 3> g = [] {
    std::array<Matrix2cd, 3> out;
    for (int c = 0; c < 3; ++c) {
      const Matrix2cd s = pauli(c + 1);
      out[c] = std::cos(std::numbers::pi / 4) * Matrix2cd::Identity() -
               cd(0, 1) * std::sin(std::numbers::pi / 4) * s;
    }
    return out;
  }();
  return g[fixed_axis];
}

}  // namespace detail

// Reduce theta into the chamber pi/4 >= theta_x >= theta_y >= |theta_z|,
// absorbing the compensating Paulis, swap conjugations and phases into the
// locals. Recomposition-invariant.
inline KakForm canonicalize(const KakForm& in) {
  KakForm k = in;
  constexpr double half_pi = std::numbers::pi / 2;

  // shift each coordinate into (-pi/4, pi/4]
  for (int c = 0; c < 3; ++c) {
    const long n = std::lround(std::ceil((k.theta[c] - half_pi / 2) / half_pi - 1e-15));
    if (n == 0) continue;
    k.theta[c] -= double(n) * half_pi;
    k.phase += double(n) * half_pi;
    if (n % 2 != 0) {
      k.w_a = k.w_a * pauli(c + 1);
      k.w_b = k.w_b * pauli(c + 1);
    }
  }

  // sort by absolute value (descending) via conjugation swaps
  auto swap_axes = [&k](int i, int j) {
    const int fixed = 3 - i - j;
    const Matrix2cd& g = detail::axis_swap_generator(fixed);
    k.w_a = k.w_a * g.adjoint();
    k.w_b = k.w_b * g.adjoint();
    k.v_a = g * k.v_a;
    k.v_b = g * k.v_b;
    std::swap(k.theta[i], k.theta[j]);
  };
  if (std::abs(k.theta[0]) < std::abs(k.theta[1])) swap_axes(0, 1);
  if (std::abs(k.theta[1]) < std::abs(k.theta[2])) swap_axes(1, 2);
  if (std::abs(k.theta[0]) < std::abs(k.theta[1])) swap_axes(0, 1);

  // flip sign pairs with a one-sided Pauli about the remaining axis
  auto flip_pair = [&k](int i, int j) {
    const int fixed = 3 - i - j;
    k.w_b = k.w_b * pauli(fixed + 1);
    k.v_b = pauli(fixed + 1) * k.v_b;
    k.theta[i] = -k.theta[i];
    k.theta[j] = -k.theta[j];
  };
  if (k.theta[0] < 0) flip_pair(0, 1);
  if (k.theta[1] < 0) flip_pair(1, 2);
  return k;
}

inline KakForm kak_decompose(const Matrix4cd& u_in) {
  if (!is_unitary(u_in, 1e-10))
    throw std::invalid_argument("kak_decompose: input is not unitary");

  const cd det = u_in.determinant();
  double phase = std::arg(det) / 4.0;
  const Matrix4cd u = std::exp(cd(0, -phase)) * u_in;  // u in SU(4)

  const Matrix4cd m = magic::basis().adjoint() * u * magic::basis();
  const Matrix4cd m2 = m.transpose() * m;
  auto [p, d] = detail::diagonalize_complex_symmetric(m2);

  std::array<double, 4> f;
  double fsum = 0.0;
  for (int j = 0; j < 4; ++j) fsum += (f[j] = std::arg(d(j)) / 2.0);
  // product of eigenvalues is 1; realign the half-phase sum to 0 (mod 2pi)
  f[3] -= std::numbers::pi * std::lround(fsum / std::numbers::pi);

  Vector4cd dhalf_inv;
  for (int j = 0; j < 4; ++j) dhalf_inv(j) = std::exp(cd(0, -f[j]));
  const Matrix4cd o1 = m * p.cast<cd>() * dhalf_inv.asDiagonal();
  if (o1.imag().norm() > 1e-9)
    throw std::runtime_error("kak_decompose: left orthogonal factor not real");

  const Matrix4cd k1 = magic::basis() * o1 * magic::basis().adjoint();
  const Matrix4cd k2 =
      magic::basis() * p.transpose().cast<cd>() * magic::basis().adjoint();

  KakForm k;
  k.theta = magic::theta_from_phases(f);
  auto [wa, wb, f1] = detail::kron_split(k1);
  auto [va, vb, f2] = detail::kron_split(k2);
  k.w_a = wa;
  k.w_b = wb;
  k.v_a = va;
  k.v_b = vb;
  k.phase = phase + f1 + f2;
  k = canonicalize(k);

  if ((kak_compose(k) - u_in).norm() > 1e-9)
    throw std::runtime_error("kak_decompose: recomposition residual too large");
  return k;
}

}  // namespace avgbench
