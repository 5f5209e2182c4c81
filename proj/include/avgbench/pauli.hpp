// SPDX-License-Identifier: Apache-2.0
//
// Dense complex linear algebra for 1- and 2-qubit operators: Pauli basis,
// vectorization, channel representations (superoperator / Pauli transfer
// matrix / Choi) and CPTP checks.
//
// Conventions, fixed globally:
//   * vectorization maps |m><n| to |m> (x) |n>, i.e. vec(rho)[m*d+n] = rho(m,n)
//   * a channel with Kraus operators {K} becomes sum_a K_a (x) K_a^*
//   * PTM entries are (1/2^n) Tr[sigma_out E(sigma_in)], so the
//     identity->identity entry of a trace-preserving map is 1
//   * Pauli strings index big-endian: site 0 is the most significant factor

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace avgbench {

using cd = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector4cd;
using Eigen::VectorXcd;

// structural checks (unitarity, CPTP, classification)
inline constexpr double structural_tol = 1e-10;
// algebraic round trips (vec/unvec, ptm<->superop)
inline constexpr double roundtrip_tol = 1e-12;

inline const Matrix2cd& pauli(int a) {
  static const Matrix2cd p[4] = {
      (Matrix2cd() << 1, 0, 0, 1).finished(),
      (Matrix2cd() << 0, 1, 1, 0).finished(),
      (Matrix2cd() << 0, cd(0, -1), cd(0, 1), 0).finished(),
      (Matrix2cd() << 1, 0, 0, -1).finished(),
  };
  if (a < 0 || a > 3) throw std::invalid_argument("pauli index out of range");
  return p[a];
}

inline Matrix4cd kron2(const Matrix2cd& a, const Matrix2cd& b) {
  return Eigen::kroneckerProduct(a, b);
}

// sigma_{a1} (x) sigma_{a2}
inline Matrix4cd pauli_pair(int a1, int a2) {
  return kron2(pauli(a1), pauli(a2));
}

// n-qubit Pauli string from base-4 digits, site 0 most significant
inline MatrixXcd pauli_string(const std::vector<int>& digits) {
  MatrixXcd m = MatrixXcd::Identity(1, 1);
  for (int d : digits) m = Eigen::kroneckerProduct(m, pauli(d)).eval();
  return m;
}

// normalized Bell vector |o> = (|00>+|11>)/sqrt(2) = vec(1/sqrt(2))
inline Vector4cd bell_vec() {
  Vector4cd b;
  b << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
  return b;
}

inline VectorXcd vectorize(const MatrixXcd& rho) {
  if (rho.rows() != rho.cols())
    throw std::invalid_argument("vectorize: matrix must be square");
  const auto d = rho.rows();
  VectorXcd v(d * d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) v(m * d + n) = rho(m, n);
  return v;
}

inline MatrixXcd unvectorize(const VectorXcd& v) {
  const auto d2 = v.size();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(d2))));
  if (d * d != d2) throw std::invalid_argument("unvectorize: not a square length");
  MatrixXcd rho(d, d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) rho(m, n) = v(m * d + n);
  return rho;
}

// A folded channel acting on vectorized operators.
struct Superoperator {
  MatrixXcd mat;
  int n_qubits = 0;

  Superoperator() = default;
  Superoperator(MatrixXcd m, int n) : mat(std::move(m)), n_qubits(n) {
    const Eigen::Index dim = Eigen::Index(1) << (2 * n_qubits);
    if (mat.rows() != dim || mat.cols() != dim)
      throw std::invalid_argument("Superoperator: dimension mismatch");
  }

  static Superoperator identity(int n) {
    const Eigen::Index dim = Eigen::Index(1) << (2 * n);
    return {MatrixXcd::Identity(dim, dim), n};
  }

  VectorXcd apply(const VectorXcd& v) const { return mat * v; }
};

// composition: (E2 * E1)(rho) = E2(E1(rho))
inline Superoperator operator*(const Superoperator& e2, const Superoperator& e1) {
  if (e2.n_qubits != e1.n_qubits)
    throw std::invalid_argument("superoperator composition: size mismatch");
  return {e2.mat * e1.mat, e2.n_qubits};
}

inline Superoperator operator+(const Superoperator& a, const Superoperator& b) {
  if (a.n_qubits != b.n_qubits)
    throw std::invalid_argument("superoperator sum: size mismatch");
  return {a.mat + b.mat, a.n_qubits};
}

inline Superoperator operator*(double p, const Superoperator& e) {
  return {p * e.mat, e.n_qubits};
}

inline double unitarity_residual(const MatrixXcd& u) {
  return (u.adjoint() * u - MatrixXcd::Identity(u.rows(), u.cols())).norm();
}

inline bool is_unitary(const MatrixXcd& u, double tol = 1e-12) {
  return u.rows() == u.cols() && unitarity_residual(u) <= tol * std::sqrt(double(u.rows()));
}

inline int qubits_of_dim(Eigen::Index d) {
  int n = 0;
  while ((Eigen::Index(1) << n) < d) ++n;
  if ((Eigen::Index(1) << n) != d)
    throw std::invalid_argument("dimension is not a power of two");
  return n;
}

// U (x) U^* for a unitary U
inline Superoperator unitary_superop(const MatrixXcd& u) {
  if (!is_unitary(u, 1e-10))
    throw std::invalid_argument("unitary_superop: input is not unitary");
  const int n = qubits_of_dim(u.rows());
  return {Eigen::kroneckerProduct(u, u.conjugate()), n};
}

inline Superoperator kraus_superop(const std::vector<MatrixXcd>& kraus) {
  if (kraus.empty()) throw std::invalid_argument("kraus_superop: empty Kraus list");
  const auto d = kraus.front().rows();
  const int n = qubits_of_dim(d);
  MatrixXcd w = MatrixXcd::Zero(d * d, d * d);
  for (const auto& k : kraus) {
    if (k.rows() != d || k.cols() != d)
      throw std::invalid_argument("kraus_superop: inconsistent Kraus dimensions");
    w += Eigen::kroneckerProduct(k, k.conjugate());
  }
  return {w, n};
}

struct PauliTransferMatrix {
  MatrixXd mat;  // (4^n)x(4^n), indexed (out string, in string), base-4 big-endian
  int n_qubits = 0;
};

struct ChoiMatrix {
  MatrixXcd mat;  // (in x out) ordering, trace = 2^n for trace-preserving maps
  int n_qubits = 0;
};

namespace detail {
inline std::vector<int> base4_digits(int idx, int n) {
  std::vector<int> d(n);
  for (int i = n - 1; i >= 0; --i) {
    d[i] = idx & 3;
    idx >>= 2;
  }
  return d;
}
}  // namespace detail

inline PauliTransferMatrix superop_to_ptm(const Superoperator& e) {
  const int n = e.n_qubits;
  const int dim = 1 << (2 * n);
  const double norm = 1.0 / double(Eigen::Index(1) << n);
  std::vector<VectorXcd> pv(dim);
  for (int a = 0; a < dim; ++a)
    pv[a] = vectorize(pauli_string(detail::base4_digits(a, n)));
  MatrixXd p(dim, dim);
  double imag_max = 0.0;
  for (int b = 0; b < dim; ++b) {
    const VectorXcd row = e.mat.adjoint() * pv[b];
    for (int a = 0; a < dim; ++a) {
      const cd val = norm * row.dot(pv[a]);  // dot conjugates the left argument
      imag_max = std::max(imag_max, std::abs(val.imag()));
      p(b, a) = val.real();
    }
  }
  if (imag_max > 1e-8)
    throw std::invalid_argument("superop_to_ptm: map is not Hermiticity-preserving");
  return {p, n};
}

inline Superoperator ptm_to_superop(const PauliTransferMatrix& p) {
  const int n = p.n_qubits;
  const int dim = 1 << (2 * n);
  const double norm = 1.0 / double(Eigen::Index(1) << n);
  MatrixXcd w = MatrixXcd::Zero(dim, dim);
  for (int b = 0; b < dim; ++b) {
    const VectorXcd vb = vectorize(pauli_string(detail::base4_digits(b, n)));
    for (int a = 0; a < dim; ++a) {
      if (p.mat(b, a) == 0.0) continue;
      const VectorXcd va = vectorize(pauli_string(detail::base4_digits(a, n)));
      w += (norm * p.mat(b, a)) * (vb * va.adjoint());
    }
  }
  return {w, n};
}

// Choi operator with input-major ordering: Lambda = sum_{ij} |i><j| (x) E(|i><j|).
inline ChoiMatrix choi_of(const Superoperator& e) {
  const int n = e.n_qubits;
  const Eigen::Index d = Eigen::Index(1) << n;
  MatrixXcd choi(d * d, d * d);
  // W[(m,n),(i,j)] = <m| E(|i><j|) |n>  ->  Choi[(i,m),(j,n)]
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index m = 0; m < d; ++m)
      for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index nn = 0; nn < d; ++nn)
          choi(i * d + m, j * d + nn) = e.mat(m * d + nn, i * d + j);
  return {choi, n};
}

struct CptpReport {
  bool cp = false;
  bool tp = false;
  bool unital = false;
  double choi_min_eig = 0.0;
  double choi_herm_residual = 0.0;
  double tp_residual = 0.0;
  double unital_residual = 0.0;
};

inline CptpReport check_cptp(const Superoperator& e, double tol = structural_tol) {
  CptpReport r;
  const Eigen::Index d = Eigen::Index(1) << e.n_qubits;
  const auto choi = choi_of(e).mat;
  r.choi_herm_residual = (choi - choi.adjoint()).norm();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (choi + choi.adjoint()));
  r.choi_min_eig = es.eigenvalues().minCoeff();
  r.cp = r.choi_min_eig >= -tol && r.choi_herm_residual <= 1e-8;
  const VectorXcd vec_id = vectorize(MatrixXcd::Identity(d, d));
  r.tp_residual = (e.mat.adjoint() * vec_id - vec_id).norm();
  r.unital_residual = (e.mat * vec_id - vec_id).norm();
  r.tp = r.tp_residual <= tol * std::sqrt(double(d));
  r.unital = r.unital_residual <= tol * std::sqrt(double(d));
  return r;
}

// Regroups the folded legs of a two-qubit superoperator from
// (kets, bras) = (m1 m2 n1 n2) ordering into per-site pairs (m1 n1)(m2 n2).
// The permutation is an involution.
inline MatrixXcd fold_sites(const MatrixXcd& w) {
  if (w.rows() != 16 || w.cols() != 16)
    throw std::invalid_argument("fold_sites: expected a 16x16 superoperator");
  auto regroup = [](int i) {
    const int m1 = (i >> 3) & 1, m2 = (i >> 2) & 1, n1 = (i >> 1) & 1, n2 = i & 1;
    return (m1 << 3) | (n1 << 2) | (m2 << 1) | n2;
  };
  MatrixXcd out(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) out(regroup(i), regroup(j)) = w(i, j);
  return out;
}

// Haar-random unitary via QR of a complex Ginibre matrix.
template <typename Rng>
MatrixXcd haar_unitary(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> g;
  MatrixXcd z(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = cd(g(rng), g(rng));
  Eigen::HouseholderQR<MatrixXcd> qr(z);
  MatrixXcd q = qr.householderQ();
  const MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    cd rjj = r(j, j);
    q.col(j) *= rjj / std::abs(rjj);
  }
  return q;
}

template <typename Rng>
Matrix4cd haar_su4(Rng& rng) {
  Matrix4cd u = haar_unitary(4, rng);
  u *= std::pow(u.determinant(), -0.25);
  return u;
}

template <typename Rng>
Matrix2cd haar_su2(Rng& rng) {
  Matrix2cd u = haar_unitary(2, rng);
  u *= std::pow(u.determinant(), cd(-0.5));
  return u;
}

}  // namespace avgbench
