// SPDX-License-Identifier: Apache-2.0
//
// Space-time unitality classification of two-qubit channels and the transfer
// objects driving the solvable correlators.
//
// Folded legs of a two-qubit channel, after fold_sites: input (il, ir) and
// output (ol, or), one 4-dimensional folded leg per site. The four Bell-cap
// contraction identities read, with |o> the normalized Bell vector:
//   trace preserving   <oo| W        = <oo|
//   unital              W |oo>       = |oo>
//   left space unital  (<o| (x) 1) W (|o> (x) 1) = |o><o|   (caps on left legs)
//   right space unital (1 (x) <o|) W (1 (x) |o>) = |o><o|   (caps on right legs)
// The transfer matrices cap one leg on each side diagonally:
//   M+ : il -> or  (right mover),   M- : ir -> ol  (left mover).

#pragma once

#include "pauli.hpp"

#include <string>

namespace avgbench {

struct SpaceTimeClass {
  bool tp = false;
  bool unital = false;
  bool left_space_unital = false;
  bool right_space_unital = false;
  double tp_residual = 0.0;
  double unital_residual = 0.0;
  double left_residual = 0.0;
  double right_residual = 0.0;

  bool four_way() const { return tp && unital && left_space_unital && right_space_unital; }
  bool three_way() const {
    return tp && unital && (left_space_unital || right_space_unital);
  }
  bool three_way_right() const { return tp && unital && right_space_unital; }

  std::string label() const {
    if (four_way()) return "4-way";
    if (three_way_right() && !left_space_unital) return "3-way-right";
    if (three_way()) return "3-way-left";
    if (tp && unital) return "tp+unital";
    return "general";
  }
  double max_residual() const {
    return std::max(std::max(tp_residual, unital_residual),
                    std::max(left_residual, right_residual));
  }
};

enum class TransferSide { plus, minus };

namespace detail {
inline const Eigen::Matrix<cd, 16, 4>& cap_right() {  // 1 (x) |o>
  static const Eigen::Matrix<cd, 16, 4> k =
      Eigen::kroneckerProduct(Matrix4cd::Identity(), bell_vec());
  return k;
}
inline const Eigen::Matrix<cd, 16, 4>& cap_left() {  // |o> (x) 1
  static const Eigen::Matrix<cd, 16, 4> k =
      Eigen::kroneckerProduct(bell_vec(), Matrix4cd::Identity());
  return k;
}
}  // namespace detail

inline SpaceTimeClass classify(const Superoperator& e, double tol = structural_tol) {
  if (e.n_qubits != 2)
    throw std::invalid_argument("classify: expected a two-qubit superoperator");
  const MatrixXcd w = fold_sites(e.mat);
  const Eigen::Matrix<cd, 16, 1> bb = Eigen::kroneckerProduct(bell_vec(), bell_vec());
  const Matrix4cd proj = bell_vec() * bell_vec().adjoint();

  SpaceTimeClass c;
  c.tp_residual = (w.adjoint() * bb - bb).norm();
  c.unital_residual = (w * bb - bb).norm();
  c.left_residual = (detail::cap_left().adjoint() * w * detail::cap_left() - proj).norm();
  c.right_residual = (detail::cap_right().adjoint() * w * detail::cap_right() - proj).norm();
  c.tp = c.tp_residual <= tol;
  c.unital = c.unital_residual <= tol;
  c.left_space_unital = c.left_residual <= tol;
  c.right_space_unital = c.right_residual <= tol;
  return c;
}

// Single-qubit transfer matrix of a folded two-qubit channel (Bell caps on
// the two legs away from the light ray).
inline Matrix4cd transfer(const Superoperator& e, TransferSide side) {
  if (e.n_qubits != 2)
    throw std::invalid_argument("transfer: expected a two-qubit superoperator");
  const MatrixXcd w = fold_sites(e.mat);
  if (side == TransferSide::plus)
    return detail::cap_left().adjoint() * w * detail::cap_right();
  return detail::cap_right().adjoint() * w * detail::cap_left();
}

// Two-site transfer map of the three-site scheme: a diagonal cell built from
// the right-positioned channel of one layer (lower) and the left-positioned
// channel of the following layer (upper). Internally the lower channel's
// right input is Bell-capped and the upper channel's left output is traced;
// the lower left output feeds the upper right input.
inline Eigen::Matrix<cd, 16, 16> two_site_transfer(const Superoperator& e_left_upper,
                                                   const Superoperator& e_right_lower) {
  if (e_left_upper.n_qubits != 2 || e_right_lower.n_qubits != 2)
    throw std::invalid_argument("two_site_transfer: expected two-qubit superoperators");
  const MatrixXcd w_hi = fold_sites(e_left_upper.mat);
  const MatrixXcd w_lo = fold_sites(e_right_lower.mat);
  const Eigen::Matrix<cd, 4, 16> a = detail::cap_left().adjoint() * w_hi;
  const Eigen::Matrix<cd, 16, 4> b = w_lo * detail::cap_right();
  return Eigen::kroneckerProduct(a, Matrix4cd::Identity()) *
         Eigen::kroneckerProduct(Matrix4cd::Identity(), b);
}

struct BoundaryMaps {
  Matrix4cd m_r;                 // both left legs Bell-capped: right-in -> right-out
  Eigen::Matrix<cd, 16, 4> e_l;  // Bell plugged into the right input leg
};

inline BoundaryMaps boundary_maps(const Superoperator& e_first,
                                  const Superoperator& e_last) {
  if (e_first.n_qubits != 2 || e_last.n_qubits != 2)
    throw std::invalid_argument("boundary_maps: expected two-qubit superoperators");
  BoundaryMaps b;
  b.m_r = detail::cap_left().adjoint() * fold_sites(e_first.mat) * detail::cap_left();
  b.e_l = fold_sites(e_last.mat) * detail::cap_right();
  return b;
}

// Modulus of the subleading eigenvalue; sets the decay rate of average
// correlators with depth.
inline double second_eigenvalue_modulus(const Matrix4cd& m) {
  Eigen::ComplexEigenSolver<Matrix4cd> es(m, false);
  Eigen::Vector4d mods = es.eigenvalues().cwiseAbs();
  std::sort(mods.data(), mods.data() + 4, std::greater<double>());
  return mods(1);
}

}  // namespace avgbench
