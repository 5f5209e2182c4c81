// SPDX-License-Identifier: Apache-2.0
//
// Classical evaluation of average-computation expectation values by
// transfer-matrix contraction. Four schemes are covered, all certified
// against the dense averaged-channel oracle:
//
//   single site   plus-state/Bell input, observable at site T: a product of
//                 T plus-movers applied to sigma_x,
//   two body      Bell-pair input, operators at distance 2T+1: paired minus
//                 and plus movers applied to one Bell tile,
//   three site    Bell-pair input, contiguous three-site operators: boundary
//                 maps and two-site staircase transfers,
//   k body        contiguous k-site operators, evaluated by an exact
//                 windowed strip contraction (cost O(T 4^k), independent
//                 of L).
//
// Pauli-diagonal noise after every layer inserts the per-site reduced noise
// channel behind each transfer step; identity propagation keeps all the
// light-cone erasures valid.
//
// Geometry conventions and admissible observable positions follow from the
// brickwork tiling in circuit.hpp; the margins were fixed once against the
// dense oracle at T = 1, 2 and are enforced here as preconditions.

#pragma once

#include "circuit.hpp"
#include "ensembles.hpp"
#include "pauli.hpp"
#include "spacetime.hpp"

#include <map>
#include <set>
#include <string>

namespace avgbench {

namespace correlator_detail {

// folded vector of a k-site operator: per-site (ket, bra) leg pairs,
// site order preserved
inline VectorXcd fold_site_vec(const MatrixXcd& op, int k) {
  const Eigen::Index d = Eigen::Index(1) << k;
  VectorXcd v(d * d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n) {
      size_t idx = 0;
      for (int s = 0; s < k; ++s) {
        const int ms = int(m >> (k - 1 - s)) & 1;
        const int ns = int(n >> (k - 1 - s)) & 1;
        idx = idx * 4 + (2 * ms + ns);
      }
      v(idx) = op(m, n);
    }
  return v;
}

inline Eigen::Matrix<cd, 16, 1> bell_tile_vec() {
  Matrix4cd proj = Matrix4cd::Zero();
  proj(0, 0) = proj(0, 3) = proj(3, 0) = proj(3, 3) = 0.5;
  return fold_site_vec(proj, 2);
}

inline Eigen::Vector4cd folded_single(const Matrix2cd& rho) {
  return fold_site_vec(rho, 1);
}

inline void require_class(const ChannelCircuit& c, bool need_left, bool need_right,
                          const char* scheme, double tol = 1e-9) {
  for (int k = 1; k <= c.T; ++k) {
    const auto tiles = c.tiles_of_layer(k);
    for (size_t t = 0; t < tiles.size(); ++t) {
      const SpaceTimeClass cls = classify(c.layers[k - 1][t], tol);
      const bool ok = cls.tp && cls.unital &&
                      (!need_left || cls.left_space_unital) &&
                      (!need_right || cls.right_space_unital);
      if (!ok)
        throw std::invalid_argument(
            std::string(scheme) + ": channel in layer " + std::to_string(k) +
            " at site " + std::to_string(tiles[t]) + " is not " +
            (need_left && need_right ? "a 4-way space-time channel"
                                     : "right space unital"));
    }
  }
}

inline void require_traceless(const Observable& o, const char* scheme) {
  o.validate();
  if (!o.traceless(1e-12))
    throw std::invalid_argument(std::string(scheme) +
                                ": observable must be traceless on its support");
}

// exact strip contraction on a sliding window of folded site legs
class WindowState {
 public:
  int position(int site) const {
    for (size_t i = 0; i < sites_.size(); ++i)
      if (sites_[i] == site) return int(i);
    return -1;
  }
  int width() const { return int(sites_.size()); }
  const std::vector<int>& sites() const { return sites_; }

  void insert(int site, const VectorXcd& legs, int n_sites = 1) {
    size_t pos = 0;
    while (pos < sites_.size() && sites_[pos] < site) ++pos;
    for (int q = 0; q < n_sites; ++q)
      if (position(site + q) >= 0)
        throw std::logic_error("window: site already present");
    if (int(sites_.size()) + n_sites > 11)
      throw std::runtime_error("window: strip grew beyond the supported width");
    const VectorXcd nv = v_.size() == 0 ? VectorXcd::Ones(1) : v_;
    const size_t hi = size_t(1) << (2 * pos);  // strides left of the insertion
    const size_t lo = nv.size() / hi;
    const size_t mid = legs.size();
    VectorXcd out(nv.size() * mid);
    for (size_t h = 0; h < hi; ++h)
      for (size_t leg_i = 0; leg_i < mid; ++leg_i)
        for (size_t l = 0; l < lo; ++l)
          out((h * mid + leg_i) * lo + l) = nv(h * lo + l) * legs(leg_i);
    v_ = out;
    for (int q = 0; q < n_sites; ++q)
      sites_.insert(sites_.begin() + pos + q, site + q);
  }

  void apply_pair(int site, const Eigen::Matrix<cd, 16, 16>& w) {
    const int p = position(site);
    if (p < 0 || p + 1 >= width() || sites_[p + 1] != site + 1)
      throw std::logic_error("window: pair legs not adjacent");
    transform_legs(p, 2, w);
  }

  void apply_single(int site, const Matrix4cd& w) {
    const int p = position(site);
    if (p < 0) throw std::logic_error("window: site not present");
    transform_legs(p, 1, w);
  }

  void trace_out(int site) {
    const int p = position(site);
    if (p < 0) throw std::logic_error("window: site not present");
    const Eigen::Vector4cd cap = folded_single(Matrix2cd::Identity());
    const size_t hi = size_t(1) << (2 * p);
    const size_t block = v_.size() / hi;
    const size_t lo = block / 4;
    VectorXcd out(v_.size() / 4);
    for (size_t h = 0; h < hi; ++h)
      for (size_t l = 0; l < lo; ++l) {
        cd acc(0, 0);
        for (int leg_i = 0; leg_i < 4; ++leg_i)
          acc += cap(leg_i) * v_(h * block + leg_i * lo + l);
        out(h * lo + l) = acc;
      }
    v_ = out;
    sites_.erase(sites_.begin() + p);
  }

  cd contract(const VectorXcd& covec) const {
    if (covec.size() != v_.size())
      throw std::logic_error("window: contraction size mismatch");
    return covec.dot(v_);  // Tr(O rho_window) = vec(O)^dag vec(rho_window)
  }

 private:
  void transform_legs(int p, int n_legs, const MatrixXcd& w) {
    const int dim = 1 << (2 * n_legs);
    const size_t hi = size_t(1) << (2 * p);
    const size_t block = v_.size() / hi;
    const size_t lo = block / size_t(dim);
    VectorXcd scratch(dim);
    for (size_t h = 0; h < hi; ++h)
      for (size_t l = 0; l < lo; ++l) {
        for (int b = 0; b < dim; ++b) scratch(b) = v_(h * block + size_t(b) * lo + l);
        scratch = (w * scratch).eval();
        for (int b = 0; b < dim; ++b) v_(h * block + size_t(b) * lo + l) = scratch(b);
      }
  }

  std::vector<int> sites_;
  VectorXcd v_;
};

struct StripPlan {
  std::vector<std::set<int>> needed;                   // per slice 0..T
  std::vector<std::vector<std::pair<int, bool>>> gates;  // per layer: (site, executed)
};

// Backward pass: which wires feed the observable, and which gates execute.
// With pruning, a gate needed only through its left output is erased by
// right unitality and replaced by a fresh maximally mixed leg; this is
// exact away from the chain ends, where the erasure grounds in traced tile
// halves. Without pruning every cone gate executes, which needs nothing
// beyond trace preservation and stays exact at the boundaries at the price
// of a cone-wide window.
inline StripPlan plan_strip(const ChannelCircuit& c, const std::vector<int>& support,
                            bool prune) {
  StripPlan plan;
  plan.needed.assign(c.T + 1, {});
  plan.gates.resize(c.T);
  plan.needed[c.T] = {support.begin(), support.end()};
  for (int t = c.T; t >= 1; --t) {
    std::set<int> below;
    std::set<int> covered;
    for (int s : c.tiles_of_layer(t)) {
      const bool ol = plan.needed[t].count(s) > 0;
      const bool orr = plan.needed[t].count(s + 1) > 0;
      if (ol || orr) {
        covered.insert(s);
        covered.insert(s + 1);
        const bool executed = orr || !prune;
        plan.gates[t - 1].push_back({s, executed});
        if (executed) {
          below.insert(s);
          below.insert(s + 1);
        }
      }
    }
    for (int s : plan.needed[t])
      if (!covered.count(s)) below.insert(s);  // idle boundary wire
    plan.needed[t - 1] = below;
  }
  return plan;
}

inline double contract_strip(const ChannelCircuit& c, const Observable& obs,
                             bool prune = true) {
  const StripPlan plan = plan_strip(c, obs.sites, prune);

  // initial window: a full tile vector where both Bell halves are needed,
  // the reduced single-site state (partner traced away) otherwise
  WindowState win;
  const std::set<int>& base = plan.needed[0];
  const int parity0 = c.init.prep_parity();
  for (auto it = base.begin(); it != base.end(); ++it) {
    const int s = *it;
    if (s < 0 || s >= c.L)
      throw std::invalid_argument("strip reaches outside the chain");
    if (c.init.kind == InitKind::explicit_product) {
      win.insert(s, folded_single(c.init.site_states[s]));
      continue;
    }
    if (c.init.kind == InitKind::plus_bell && s == 0) {
      Matrix2cd plus;
      plus << 0.5, 0.5, 0.5, 0.5;
      win.insert(s, folded_single(plus));
      continue;
    }
    const bool starts_tile = (s - parity0) >= 0 && (s - parity0) % 2 == 0;
    if (starts_tile && s + 1 < c.L && base.count(s + 1)) {
      win.insert(s, bell_tile_vec(), 2);
      ++it;  // consumed the partner too
    } else {
      win.insert(s, folded_single(0.5 * Matrix2cd::Identity()));
    }
  }

  for (int t = 1; t <= c.T; ++t) {
    for (const auto& [s, executed] : plan.gates[t - 1]) {
      if (!executed) continue;
      // inputs supplied by pruned gates enter as fresh maximally mixed legs
      if (win.position(s) < 0) win.insert(s, folded_single(0.5 * Matrix2cd::Identity()));
      if (win.position(s + 1) < 0)
        win.insert(s + 1, folded_single(0.5 * Matrix2cd::Identity()));
      win.apply_pair(s, fold_sites(c.channel_at(t, s).mat));
      // gates within a layer are disjoint: outputs leaving the strip can be
      // traced right away, keeping the window narrow
      if (!plan.needed[t].count(s)) win.trace_out(s);
      if (!plan.needed[t].count(s + 1)) win.trace_out(s + 1);
    }
    // idle wires leaving the strip
    const std::vector<int> present(win.sites());
    for (int s : present)
      if (!plan.needed[t].count(s)) win.trace_out(s);
    if (c.noise)
      for (int s : std::vector<int>(win.sites())) win.apply_single(s, c.noise->reduced_superop(s));
  }

  if (win.sites() != obs.sites)
    throw std::logic_error("strip contraction did not close on the observable support");
  const VectorXcd cov = fold_site_vec(obs.op, obs.support());
  return win.contract(cov).real();
}

}  // namespace correlator_detail

// left positions of a contiguous k-site observable compatible with the
// light-cone simplification: the window must align with the last layer's
// tiling (odd k starts on a right gate slot, even k on a left one)
inline std::vector<int> k_body_positions(const ChannelCircuit& c, int k) {
  std::vector<int> xs;
  const int parity_t = layer_tile_parity(c.init, c.T);
  const int want = k % 2 == 1 ? (parity_t + 1) % 2 : parity_t;
  for (int x = 0; x + k - 1 <= c.L - 1; ++x)
    if (x % 2 == want) xs.push_back(x);
  return xs;
}

// inside these margins the one-sided erasures ground in traced tile halves
// and the narrow strip applies; closer to the chain ends the evaluation
// falls back to the exact cone contraction
inline bool k_body_in_strip_margins(const ChannelCircuit& c, int x, int k) {
  const int x_min = k % 2 == 1 ? c.T : std::max(c.T - 1, 0);
  return x >= x_min && x <= c.L - k - c.T;
}

// positions i with nonvanishing two-body correlators at distance 2T+1
inline std::vector<int> two_body_positions(const ChannelCircuit& c) {
  std::vector<int> xs;
  for (int i = 0; i + 2 * c.T + 1 <= c.L - 1; ++i)
    if (i % 2 == c.T % 2) xs.push_back(i);
  return xs;
}

// <O at site T> for the plus-state/Bell input: a product of plus movers
// applied to the sigma_x seeded by the plus state. Other positions vanish.
inline double avg_single_site(const ChannelCircuit& c, const Observable& o) {
  c.validate();
  correlator_detail::require_traceless(o, "single-site scheme");
  if (o.support() != 1)
    throw std::invalid_argument("single-site scheme: one-site observables only");
  if (c.init.kind != InitKind::plus_bell)
    throw std::invalid_argument("single-site scheme: plus-state/Bell input required");
  correlator_detail::require_class(c, false, true, "single-site scheme");
  const int x = o.sites[0];
  if (x != c.T) return 0.0;
  if (c.T > c.L - 2)
    throw std::invalid_argument("single-site scheme: depth exceeds the chain");

  VectorXcd v = vectorize(pauli(1));
  for (int k = 1; k <= c.T; ++k) {
    v = transfer(c.channel_at(k, k - 1), TransferSide::plus) * v;
    if (c.noise) v = c.noise->reduced_superop(k) * v;
  }
  return 0.5 * vectorize(o.op).dot(v).real();
}

// <a_i b_j> on the Bell-pair input; nonzero only at distance j - i = 2T+1
// on parity-compatible positions, where both backward light rays meet one
// initial tile.
inline double avg_two_body(const ChannelCircuit& c, const Observable& a,
                           const Observable& b) {
  c.validate();
  correlator_detail::require_traceless(a, "two-body scheme");
  correlator_detail::require_traceless(b, "two-body scheme");
  if (a.support() != 1 || b.support() != 1)
    throw std::invalid_argument("two-body scheme: single-site operators only");
  if (c.init.kind != InitKind::bell_product)
    throw std::invalid_argument("two-body scheme: Bell-pair input required");
  correlator_detail::require_class(c, true, true, "two-body scheme");
  const int i = a.sites[0], j = b.sites[0];
  if (j <= i) throw std::invalid_argument("two-body scheme: needs i < j");
  if (j - i != 2 * c.T + 1) return 0.0;  // outside or inside the joint cone
  if (i % 2 != c.T % 2) return 0.0;      // rays cannot meet an initial tile
  if (i < 0 || j > c.L - 1)
    throw std::invalid_argument("two-body scheme: sites outside the chain");

  if (i < c.T || j + c.T > c.L - 1) {
    // too close to a chain end for the side erasures to ground in traced
    // tile halves; contract the joint backward cone exactly instead
    Observable pair;
    pair.sites = {i, j};
    pair.op = Eigen::kroneckerProduct(a.op, b.op);
    return correlator_detail::contract_strip(c, pair, /*prune=*/false);
  }

  using correlator_detail::bell_tile_vec;
  Eigen::Matrix<cd, 16, 1> v = bell_tile_vec();
  for (int k = 1; k <= c.T; ++k) {
    const Matrix4cd minus = transfer(c.channel_at(k, i + c.T - k), TransferSide::minus);
    const Matrix4cd plus = transfer(c.channel_at(k, j - c.T + k - 1), TransferSide::plus);
    v = Eigen::kroneckerProduct(minus, plus) * v;
    if (c.noise) {
      const Matrix4cd na = c.noise->reduced_superop(i + c.T - k);
      const Matrix4cd nb = c.noise->reduced_superop(j - c.T + k);
      v = Eigen::kroneckerProduct(na, nb) * v;
    }
  }
  const VectorXcd cov =
      Eigen::kroneckerProduct(vectorize(a.op), vectorize(b.op));
  return cov.dot(v).real();
}

// contiguous k-site correlator on the Bell-pair input via the windowed strip
inline double avg_k_body(const ChannelCircuit& c, const Observable& o) {
  c.validate();
  correlator_detail::require_traceless(o, "k-body scheme");
  const int k = o.support();
  if (k > 6)
    throw std::invalid_argument("k-body scheme: supports up to k = 6 sites");
  if (k == 1 && c.init.kind == InitKind::plus_bell) return avg_single_site(c, o);
  if (c.init.kind != InitKind::bell_product)
    throw std::invalid_argument("k-body scheme: Bell-pair input required");
  correlator_detail::require_class(c, false, true, "k-body scheme");
  for (size_t q = 1; q < o.sites.size(); ++q)
    if (o.sites[q] != o.sites[q - 1] + 1)
      throw std::invalid_argument("k-body scheme: support must be contiguous");
  // degenerate depth: the strip reduces to Tr(O rho_0) on the support
  if (c.T == 0) return correlator_detail::contract_strip(c, o);
  const auto positions = k_body_positions(c, k);
  const int x = o.sites[0];
  if (std::find(positions.begin(), positions.end(), x) == positions.end()) {
    std::string msg = "k-body scheme: position " + std::to_string(x) +
                      " is outside the simplifiable set {";
    for (size_t q = 0; q < positions.size(); ++q)
      msg += (q ? "," : "") + std::to_string(positions[q]);
    throw std::invalid_argument(msg + "}");
  }
  return correlator_detail::contract_strip(c, o, k_body_in_strip_margins(c, x, k));
}

// three-site evaluation through the boundary maps and staircase transfers;
// the 1/sqrt(2) normalization closes the assembled diagram onto the oracle
inline double avg_three_site(const ChannelCircuit& c, const Observable& o) {
  c.validate();
  correlator_detail::require_traceless(o, "three-site scheme");
  if (o.support() != 3)
    throw std::invalid_argument("three-site scheme: three-site observables only");
  if (c.init.kind != InitKind::bell_product)
    throw std::invalid_argument("three-site scheme: Bell-pair input required");
  correlator_detail::require_class(c, false, true, "three-site scheme");
  const auto positions = k_body_positions(c, 3);
  const int x = o.sites[0];
  if (std::find(positions.begin(), positions.end(), x) == positions.end())
    throw std::invalid_argument("three-site scheme: incompatible position");
  // noisy circuits and near-boundary windows go through the strip directly
  if ((c.noise && !c.noise->zero()) || !k_body_in_strip_margins(c, x, 3) || c.T == 0)
    return avg_k_body(c, o);

  const BoundaryMaps maps =
      boundary_maps(c.channel_at(1, x - c.T), c.channel_at(c.T, x + 1));
  Eigen::Matrix<cd, 16, 1> v = correlator_detail::bell_tile_vec();
  v = Eigen::kroneckerProduct(maps.m_r, Matrix4cd::Identity()) * v;
  for (int k = 1; k <= c.T - 1; ++k) {
    const auto stair = two_site_transfer(c.channel_at(k + 1, x - c.T + k),
                                         c.channel_at(k, x - c.T + 1 + k));
    v = stair * v;
  }
  const Eigen::Matrix<cd, 64, 16> top =
      Eigen::kroneckerProduct(Matrix4cd::Identity(), maps.e_l);
  const VectorXcd closed = top * v;
  const VectorXcd cov = correlator_detail::fold_site_vec(o.op, 3);
  return cov.dot(closed).real() / std::sqrt(2.0);
}

// noise-aware dispatch over the four schemes
enum class Scheme { single_site, two_body, three_site, k_body };

inline double noisy_avg(const ChannelCircuit& c, Scheme scheme,
                        const std::vector<Observable>& obs) {
  switch (scheme) {
    case Scheme::single_site: return avg_single_site(c, obs.at(0));
    case Scheme::two_body: return avg_two_body(c, obs.at(0), obs.at(1));
    case Scheme::three_site: return avg_three_site(c, obs.at(0));
    case Scheme::k_body: return avg_k_body(c, obs.at(0));
  }
  throw std::logic_error("unknown scheme");
}

}  // namespace avgbench
