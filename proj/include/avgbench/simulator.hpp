// SPDX-License-Identifier: Apache-2.0
//
// Exact emulation of brickwork circuits: dense density-matrix evolution of
// the averaged channels (the oracle every transfer-matrix result is checked
// against), pure-state evolution of sampled realizations, Monte-Carlo
// estimation over rounds, finite-shot measurement emulation, and builders
// for the coherent-error and sample-complexity experiments.
//
// State layouts: a density matrix is held vectorized, index M * 2^L + N
// with M the ket and N the bra bit string, site 0 the most significant bit
// of each. Gate kernels gather the four affected bits into 16-amplitude
// blocks and apply the channel as a batched 16x16 product.

#pragma once

#include "circuit.hpp"
#include "ensembles.hpp"
#include "kak.hpp"
#include "pauli.hpp"

#include <atomic>
#include <cstdint>
#include <numbers>
#include <thread>
#include <vector>

namespace avgbench {

// counter-based split of a master seed; keeps parallel and serial runs
// bit-identical
inline uint64_t split_seed(uint64_t master, uint64_t counter) {
  uint64_t z = master + 0x9e3779b97f4a7c15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// product structure of the initial states

struct ProductStructure {
  std::vector<int> bell_tiles;                     // left sites of Bell pairs
  std::vector<std::pair<int, Matrix2cd>> singles;  // unpaired sites
};

inline ProductStructure product_structure(const InitialState& init) {
  ProductStructure s;
  const int L = init.L;
  switch (init.kind) {
    case InitKind::bell_product:
      for (int t = 0; t + 1 < L; t += 2) s.bell_tiles.push_back(t);
      break;
    case InitKind::plus_bell: {
      Matrix2cd plus;
      plus << 0.5, 0.5, 0.5, 0.5;
      s.singles.emplace_back(0, plus);
      int t = 1;
      for (; t + 1 < L; t += 2) s.bell_tiles.push_back(t);
      if (t < L) s.singles.emplace_back(t, 0.5 * Matrix2cd::Identity());
      break;
    }
    case InitKind::explicit_product:
      for (int q = 0; q < L; ++q) s.singles.emplace_back(q, init.site_states[q]);
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// dense vectorized density matrix

class DenseState {
 public:
  explicit DenseState(const InitialState& init) : L_(init.L) {
    if (L_ > 12)
      throw std::runtime_error("dense evolution capped at L = 12 qubits");
    const auto s = product_structure(init);
    v_.assign(size_t(1) << (2 * L_), cd(0, 0));
    // fill the nonzero product entries directly
    const int n_tiles = int(s.bell_tiles.size());
    const int n_single = int(s.singles.size());
    const size_t tile_patterns = size_t(1) << (2 * n_tiles);
    const size_t single_patterns = size_t(1) << (2 * n_single);
    for (size_t tp = 0; tp < tile_patterns; ++tp)
      for (size_t sp = 0; sp < single_patterns; ++sp) {
        size_t m = 0, n = 0;
        cd amp(1, 0);
        for (int t = 0; t < n_tiles; ++t) {
          const int mk = int(tp >> (2 * t)) & 1, nb = int(tp >> (2 * t + 1)) & 1;
          // Bell projector entry: ket bits equal, bra bits equal, weight 1/2
          amp *= 0.5;
          const int site = s.bell_tiles[t];
          if (mk) m |= (size_t(1) << (L_ - 1 - site)) | (size_t(1) << (L_ - 2 - site));
          if (nb) n |= (size_t(1) << (L_ - 1 - site)) | (size_t(1) << (L_ - 2 - site));
        }
        for (int q = 0; q < n_single; ++q) {
          const int mk = int(sp >> (2 * q)) & 1, nb = int(sp >> (2 * q + 1)) & 1;
          amp *= s.singles[q].second(mk, nb);
          const int site = s.singles[q].first;
          if (mk) m |= size_t(1) << (L_ - 1 - site);
          if (nb) n |= size_t(1) << (L_ - 1 - site);
        }
        if (amp != cd(0, 0)) v_[(m << L_) | n] += amp;
      }
  }

  int qubits() const { return L_; }
  const std::vector<cd>& data() const { return v_; }

  // folded two-qubit channel on adjacent sites (p, p+1)
  void apply_pair_channel(int p, const Eigen::Matrix<cd, 16, 16>& w) {
    const int b_bra = L_ - 2 - p;        // bra bit of site p+1
    const int b_ket = 2 * L_ - 2 - p;    // ket bit of site p+1
    apply_blocked<16>(w, {b_ket + 1, b_ket, b_bra + 1, b_bra});
  }

  // folded single-qubit channel on one site
  void apply_site_channel(int s, const Matrix4cd& w) {
    apply_blocked<4>(w, {2 * L_ - 1 - s, L_ - 1 - s});
  }

  void apply_noise_layer(const PauliNoiseModel& noise) {
    for (int s = 0; s < L_; ++s) apply_site_channel(s, noise.reduced_superop(s));
  }

  // reduced density matrix on a contiguous ascending site list
  MatrixXcd reduced(const std::vector<int>& sites) const {
    const int k = int(sites.size());
    const Eigen::Index d = Eigen::Index(1) << k;
    MatrixXcd rho = MatrixXcd::Zero(d, d);
    const size_t dim = size_t(1) << L_;
    std::vector<size_t> ket_bit(k);
    for (int i = 0; i < k; ++i) ket_bit[i] = size_t(1) << (L_ - 1 - sites[i]);
    size_t support_mask = 0;
    for (int i = 0; i < k; ++i) support_mask |= ket_bit[i];
    for (size_t mfull = 0; mfull < dim; ++mfull) {
      size_t a = 0;
      for (int i = 0; i < k; ++i)
        if (mfull & ket_bit[i]) a |= size_t(1) << (k - 1 - i);
      const size_t rest = mfull & ~support_mask;
      for (size_t b = 0; b < size_t(d); ++b) {
        size_t nfull = rest;
        for (int i = 0; i < k; ++i)
          if (b & (size_t(1) << (k - 1 - i))) nfull |= ket_bit[i];
        rho(a, b) += v_[(mfull << L_) | nfull];
      }
    }
    return rho;
  }

  double expectation(const Observable& o) const {
    return (o.op * reduced(o.sites)).trace().real();
  }

  double trace() const {
    cd t(0, 0);
    const size_t dim = size_t(1) << L_;
    for (size_t m = 0; m < dim; ++m) t += v_[(m << L_) | m];
    return t.real();
  }

  double purity() const {
    double s = 0;
    for (const cd& a : v_) s += std::norm(a);
    return s;
  }

 private:
  // gather the listed bits (descending positions) into contiguous blocks and
  // apply the B x B matrix on each block
  template <int B>
  void apply_blocked(const Eigen::Matrix<cd, B, B>& w, std::vector<int> bits) {
    constexpr int nb = B == 16 ? 4 : 2;
    std::sort(bits.begin(), bits.end());  // ascending for expansion
    size_t offsets[B];
    for (int pat = 0; pat < B; ++pat) {
      size_t off = 0;
      // block index pat follows the superoperator ordering (m1 m2 n1 n2);
      // its least significant bit (n of the rightmost site) sits at the
      // lowest bit position, so pattern bit j maps onto bits[j]
      for (int j = 0; j < nb; ++j)
        if (pat & (1 << j)) off |= size_t(1) << bits[j];
      offsets[pat] = off;
    }
    const size_t n_blocks = v_.size() >> nb;
    constexpr size_t chunk = 4096;
    Eigen::Matrix<cd, B, Eigen::Dynamic> buf(B, chunk);
    std::vector<size_t> base(chunk);
    size_t produced = 0, counter = 0;
    while (produced < n_blocks) {
      const size_t batch = std::min(chunk, n_blocks - produced);
      for (size_t c = 0; c < batch; ++c, ++counter) {
        // expand the compact counter by inserting zero bits
        size_t idx = counter;
        for (int j = 0; j < nb; ++j) {
          const size_t low = (size_t(1) << bits[j]) - 1;
          idx = ((idx & ~low) << 1) | (idx & low);
        }
        base[c] = idx;
      }
      for (size_t c = 0; c < batch; ++c)
        for (int pat = 0; pat < B; ++pat) buf(pat, c) = v_[base[c] + offsets[pat]];
      buf.leftCols(batch) = (w * buf.leftCols(batch)).eval();
      for (size_t c = 0; c < batch; ++c)
        for (int pat = 0; pat < B; ++pat) v_[base[c] + offsets[pat]] = buf(pat, c);
      produced += batch;
    }
  }

  int L_;
  std::vector<cd> v_;
};

// ---------------------------------------------------------------------------
// pure states for sampled realizations

class Statevector {
 public:
  // branch: chosen pure component per unpaired site (index into the site
  // density matrix's eigenbasis)
  Statevector(const InitialState& init, const std::vector<int>& branch = {}) {
    L_ = init.L;
    if (L_ > 20)
      throw std::runtime_error("statevector evolution capped at L = 20 qubits");
    const auto s = product_structure(init);
    v_.assign(size_t(1) << L_, cd(0, 0));
    std::vector<Eigen::Vector2cd> kets(s.singles.size());
    for (size_t q = 0; q < s.singles.size(); ++q) {
      Eigen::SelfAdjointEigenSolver<Matrix2cd> es(s.singles[q].second);
      const int pick = q < branch.size() ? branch[q] : 1;  // default largest
      kets[q] = es.eigenvectors().col(pick);
    }
    const int n_tiles = int(s.bell_tiles.size());
    const double tile_amp = std::pow(1.0 / std::sqrt(2.0), n_tiles);
    for (size_t tp = 0; tp < (size_t(1) << n_tiles); ++tp)
      for (size_t sp = 0; sp < (size_t(1) << s.singles.size()); ++sp) {
        size_t m = 0;
        cd amp(tile_amp, 0);
        for (int t = 0; t < n_tiles; ++t)
          if (tp >> t & 1) {
            const int site = s.bell_tiles[t];
            m |= (size_t(1) << (L_ - 1 - site)) | (size_t(1) << (L_ - 2 - site));
          }
        for (size_t q = 0; q < s.singles.size(); ++q) {
          const int bit = int(sp >> q) & 1;
          amp *= kets[q](bit);
          if (bit) m |= size_t(1) << (L_ - 1 - s.singles[q].first);
        }
        if (amp != cd(0, 0)) v_[m] += amp;
      }
  }

  int qubits() const { return L_; }
  const std::vector<cd>& data() const { return v_; }

  void apply_site_gate(int s, const Matrix2cd& u) {
    const size_t o = size_t(1) << (L_ - 1 - s);
    const size_t low = o - 1;
    for (size_t c = 0; c < v_.size() >> 1; ++c) {
      const size_t idx = ((c & ~low) << 1) | (c & low);
      const cd t0 = v_[idx], t1 = v_[idx + o];
      v_[idx] = u(0, 0) * t0 + u(0, 1) * t1;
      v_[idx + o] = u(1, 0) * t0 + u(1, 1) * t1;
    }
  }

  void apply_gate(int p, const Matrix4cd& u) {
    const int b2 = L_ - 2 - p;  // bit of site p+1
    const size_t o1 = size_t(1) << (b2 + 1), o2 = size_t(1) << b2;
    const size_t offsets[4] = {0, o2, o1, o1 | o2};
    const size_t n_blocks = v_.size() >> 2;
    const size_t low = o2 - 1;
    const size_t mid = o1 - 1;
    for (size_t c = 0; c < n_blocks; ++c) {
      size_t idx = ((c & ~low) << 1) | (c & low);
      idx = ((idx & ~mid) << 1) | (idx & mid);
      cd t0 = v_[idx], t1 = v_[idx + offsets[1]], t2 = v_[idx + offsets[2]],
         t3 = v_[idx + offsets[3]];
      v_[idx] = u(0, 0) * t0 + u(0, 1) * t1 + u(0, 2) * t2 + u(0, 3) * t3;
      v_[idx + offsets[1]] = u(1, 0) * t0 + u(1, 1) * t1 + u(1, 2) * t2 + u(1, 3) * t3;
      v_[idx + offsets[2]] = u(2, 0) * t0 + u(2, 1) * t1 + u(2, 2) * t2 + u(2, 3) * t3;
      v_[idx + offsets[3]] = u(3, 0) * t0 + u(3, 1) * t1 + u(3, 2) * t2 + u(3, 3) * t3;
    }
  }

  double norm() const {
    double s = 0;
    for (const cd& a : v_) s += std::norm(a);
    return std::sqrt(s);
  }

  MatrixXcd reduced(const std::vector<int>& sites) const {
    const int k = int(sites.size());
    const Eigen::Index d = Eigen::Index(1) << k;
    MatrixXcd rho = MatrixXcd::Zero(d, d);
    std::vector<size_t> bit(k);
    for (int i = 0; i < k; ++i) bit[i] = size_t(1) << (L_ - 1 - sites[i]);
    size_t mask = 0;
    for (int i = 0; i < k; ++i) mask |= bit[i];
    std::vector<cd> gathered(d);
    for (size_t rest = 0; rest < v_.size(); ++rest) {
      if (rest & mask) continue;
      for (size_t a = 0; a < size_t(d); ++a) {
        size_t idx = rest;
        for (int i = 0; i < k; ++i)
          if (a & (size_t(1) << (k - 1 - i))) idx |= bit[i];
        gathered[a] = v_[idx];
      }
      for (size_t a = 0; a < size_t(d); ++a)
        for (size_t b = 0; b < size_t(d); ++b)
          rho(a, b) += gathered[a] * std::conj(gathered[b]);
    }
    return rho;
  }

  double expectation(const Observable& o) const {
    return (o.op * reduced(o.sites)).trace().real();
  }

 private:
  int L_;
  std::vector<cd> v_;
};

// ---------------------------------------------------------------------------
// brickwork circuit specification

struct BrickworkSpec {
  struct Slot {
    enum class Kind { gate, ensemble, channel };
    Kind kind = Kind::gate;
    Matrix4cd gate = Matrix4cd::Identity();
    GateEnsemble ensemble;
    Superoperator channel;

    static Slot from_gate(const Matrix4cd& u) {
      Slot s;
      s.kind = Kind::gate;
      s.gate = u;
      return s;
    }
    static Slot from_ensemble(GateEnsemble e) {
      Slot s;
      s.kind = Kind::ensemble;
      s.ensemble = std::move(e);
      return s;
    }
    static Slot from_channel(Superoperator e) {
      Slot s;
      s.kind = Kind::channel;
      s.channel = std::move(e);
      return s;
    }

    Superoperator average() const {
      switch (kind) {
        case Kind::gate: return unitary_superop(gate);
        case Kind::ensemble: return average_channel(ensemble);
        default: return channel;
      }
    }
    int member_count() const {
      return kind == Kind::ensemble ? int(ensemble.members.size()) : 1;
    }
    Matrix4cd member(int i) const {
      if (kind == Kind::gate) return gate;
      if (kind == Kind::ensemble) return ensemble.members[i].element.realized();
      throw std::logic_error("channel slots have no unitary members");
    }
  };

  int L = 0;
  int T = 0;
  InitialState init;
  std::vector<std::vector<Slot>> layers;  // [layer-1][tile]
  std::optional<PauliNoiseModel> noise;
  std::vector<Observable> observables;

  static BrickworkSpec uniform(int L, int T, InitialState init, const Slot& slot) {
    BrickworkSpec s;
    s.L = L;
    s.T = T;
    s.init = std::move(init);
    s.layers.resize(T);
    for (int k = 1; k <= T; ++k) {
      const auto tiles = layer_tiles(L, layer_tile_parity(s.init, k));
      s.layers[k - 1].assign(tiles.size(), slot);
    }
    return s;
  }

  std::vector<int> tiles_of_layer(int k) const {
    return layer_tiles(L, layer_tile_parity(init, k));
  }

  void validate() const {
    if (L < 2) throw std::invalid_argument("brickwork: L must be >= 2");
    if (int(layers.size()) != T) throw std::invalid_argument("brickwork: layer count");
    for (int k = 1; k <= T; ++k)
      if (layers[k - 1].size() != tiles_of_layer(k).size())
        throw std::invalid_argument("brickwork: slot count mismatch in layer");
    if (noise) noise->validate(L);
    for (const auto& o : observables) o.validate();
  }
};

// averaged channels of a brickwork spec, as evaluated by the correlator
// schemes
inline ChannelCircuit to_channel_circuit(const BrickworkSpec& spec) {
  spec.validate();
  ChannelCircuit c;
  c.L = spec.L;
  c.T = spec.T;
  c.init = spec.init;
  c.noise = spec.noise;
  c.layers.resize(spec.T);
  for (int k = 1; k <= spec.T; ++k)
    for (const auto& slot : spec.layers[k - 1])
      c.layers[k - 1].push_back(slot.average());
  return c;
}

// oracle evolution of a channel circuit: wraps the slots back into a spec
inline BrickworkSpec spec_from_channels(const ChannelCircuit& c,
                                        std::vector<Observable> obs = {}) {
  c.validate();
  BrickworkSpec spec;
  spec.L = c.L;
  spec.T = c.T;
  spec.init = c.init;
  spec.noise = c.noise;
  spec.layers.resize(c.T);
  for (int k = 1; k <= c.T; ++k)
    for (const auto& e : c.layers[k - 1])
      spec.layers[k - 1].push_back(BrickworkSpec::Slot::from_channel(e));
  spec.observables = std::move(obs);
  return spec;
}

// exact density-matrix evolution of the per-slot averaged channels; this is
// the oracle for every transfer-matrix evaluation
inline DenseState evolve_exact_average(const BrickworkSpec& spec) {
  spec.validate();
  DenseState rho(spec.init);
  for (int k = 1; k <= spec.T; ++k) {
    const auto tiles = spec.tiles_of_layer(k);
    for (size_t t = 0; t < tiles.size(); ++t) {
      const Eigen::Matrix<cd, 16, 16> w = spec.layers[k - 1][t].average().mat;
      rho.apply_pair_channel(tiles[t], w);
    }
    if (spec.noise) rho.apply_noise_layer(*spec.noise);
  }
  return rho;
}

inline std::vector<double> exact_average_expectations(const BrickworkSpec& spec) {
  const DenseState rho = evolve_exact_average(spec);
  std::vector<double> out;
  for (const auto& o : spec.observables) out.push_back(rho.expectation(o));
  return out;
}

// ---------------------------------------------------------------------------
// finite-shot measurement emulation

// Projective measurement of one observable on a fixed realization: the
// support is jointly rotated into the observable's eigenbasis and outcomes
// are drawn multinomially. Unbiased, error ~ 1/sqrt(shots).
template <typename Rng>
double shot_sample(const Statevector& psi, const Observable& o, int shots, Rng& rng) {
  o.validate();
  if (o.support() > 6)
    throw std::invalid_argument("shot_sample: support too large for a joint rotation");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(o.op);
  const MatrixXcd rho = psi.reduced(o.sites);
  const Eigen::VectorXd lam = es.eigenvalues();
  Eigen::VectorXd probs =
      (es.eigenvectors().adjoint() * rho * es.eigenvectors()).diagonal().real();
  probs = probs.cwiseMax(0.0);
  probs /= probs.sum();
  std::discrete_distribution<int> draw(probs.data(), probs.data() + probs.size());
  double acc = 0.0;
  for (int s = 0; s < shots; ++s) acc += lam(draw(rng));
  return acc / double(shots);
}

// ---------------------------------------------------------------------------
// sampled rounds

struct RoundResult {
  int round = 0;
  uint64_t seed = 0;
  std::vector<int> choices;  // per-slot member index, then per-branch choices
  std::vector<double> values;
};

struct SampleSummary {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> standard_error;
  int rounds = 0;
};

struct SampleRun {
  std::vector<RoundResult> rounds;
  SampleSummary summary;
};

namespace sim_detail {

// mixed single-site components get sampled alongside the gate choices
struct BranchSpec {
  std::vector<std::vector<double>> weights;  // per unpaired site, eigenvalues
};

inline BranchSpec branch_spec(const InitialState& init) {
  BranchSpec b;
  for (const auto& [site, rho] : product_structure(init).singles) {
    (void)site;
    Eigen::SelfAdjointEigenSolver<Matrix2cd> es(rho);
    b.weights.push_back({std::max(es.eigenvalues()(0), 0.0),
                         std::max(es.eigenvalues()(1), 0.0)});
  }
  return b;
}

inline RoundResult run_round(const BrickworkSpec& spec, const BranchSpec& branches,
                             int round, uint64_t master_seed, bool check_norm,
                             int shots = 0) {
  RoundResult r;
  r.round = round;
  r.seed = split_seed(master_seed, uint64_t(round));
  std::mt19937_64 rng(r.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& layer : spec.layers)
    for (const auto& slot : layer) {
      int pick = 0;
      if (slot.kind == BrickworkSpec::Slot::Kind::ensemble) {
        double x = u(rng), acc = 0.0;
        for (size_t m = 0; m < slot.ensemble.members.size(); ++m) {
          acc += slot.ensemble.members[m].probability;
          if (x <= acc || m + 1 == slot.ensemble.members.size()) {
            pick = int(m);
            break;
          }
        }
      }
      r.choices.push_back(pick);
    }
  std::vector<int> branch;
  for (const auto& w : branches.weights) {
    const double x = u(rng) * (w[0] + w[1]);
    branch.push_back(x <= w[0] ? 0 : 1);
    r.choices.push_back(branch.back());
  }

  Statevector psi(spec.init, branch);
  size_t slot_idx = 0;
  for (int k = 1; k <= spec.T; ++k) {
    const auto tiles = spec.tiles_of_layer(k);
    for (size_t t = 0; t < tiles.size(); ++t, ++slot_idx)
      psi.apply_gate(tiles[t], spec.layers[k - 1][t].member(r.choices[slot_idx]));
    if (spec.noise && !spec.noise->zero()) {
      // stochastic Pauli errors realize the noise channel round by round
      for (int s = 0; s < spec.L; ++s) {
        const auto p = spec.noise->marginals(s);
        const double x = u(rng);
        if (x < p[0])
          psi.apply_site_gate(s, pauli(1));
        else if (x < p[0] + p[1])
          psi.apply_site_gate(s, pauli(2));
        else if (x < p[0] + p[1] + p[2])
          psi.apply_site_gate(s, pauli(3));
      }
    }
  }
  if (check_norm && std::abs(psi.norm() - 1.0) > 1e-12)
    throw std::runtime_error("sampled realization lost normalization");
  for (const auto& o : spec.observables)
    r.values.push_back(shots > 0 ? shot_sample(psi, o, shots, rng)
                                 : psi.expectation(o));
  return r;
}

}  // namespace sim_detail

inline SampleSummary summarize(const std::vector<RoundResult>& rounds, size_t n_obs) {
  SampleSummary s;
  s.rounds = int(rounds.size());
  s.mean.assign(n_obs, 0.0);
  s.stddev.assign(n_obs, 0.0);
  s.standard_error.assign(n_obs, 0.0);
  if (rounds.empty()) return s;
  for (const auto& r : rounds)
    for (size_t i = 0; i < n_obs; ++i) s.mean[i] += r.values[i];
  for (auto& m : s.mean) m /= double(rounds.size());
  if (rounds.size() > 1) {
    for (const auto& r : rounds)
      for (size_t i = 0; i < n_obs; ++i) {
        const double d = r.values[i] - s.mean[i];
        s.stddev[i] += d * d;
      }
    for (size_t i = 0; i < n_obs; ++i) {
      s.stddev[i] = std::sqrt(s.stddev[i] / double(rounds.size() - 1));
      s.standard_error[i] = s.stddev[i] / std::sqrt(double(rounds.size()));
    }
  }
  return s;
}

// binned counts with the Freedman-Diaconis width, alongside the raw samples
struct Histogram {
  double lo = 0.0;
  double bin_width = 0.0;
  std::vector<int> counts;
};

inline Histogram histogram_fd(std::vector<double> values) {
  Histogram h;
  if (values.empty()) return h;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  const double iqr = values[(3 * n) / 4] - values[n / 4];
  const double span = values.back() - values.front();
  h.lo = values.front();
  if (iqr <= 0 || span <= 0) {
    h.bin_width = std::max(span, 1e-12);
    h.counts = {int(n)};
    return h;
  }
  h.bin_width = 2.0 * iqr / std::cbrt(double(n));
  const int bins = std::max(1, int(std::ceil(span / h.bin_width)));
  h.counts.assign(bins, 0);
  for (const double v : values) {
    int b = int((v - h.lo) / h.bin_width);
    b = std::min(std::max(b, 0), bins - 1);
    ++h.counts[b];
  }
  return h;
}

// Each round samples one ensemble member per slot (plus stochastic Pauli
// errors when a noise model is attached) and evolves the pure state exactly;
// with shots > 0 the per-round expectations come from finite-shot
// measurement emulation instead of the exact value.
inline SampleRun sample_rounds(const BrickworkSpec& spec, int n_rounds,
                               uint64_t seed, int n_threads = 1, int shots = 0) {
  spec.validate();
  const auto branches = sim_detail::branch_spec(spec.init);
  SampleRun run;
  run.rounds.resize(n_rounds);
  n_threads = std::max(1, n_threads);
  if (n_threads == 1) {
    for (int r = 0; r < n_rounds; ++r)
      run.rounds[r] = sim_detail::run_round(spec, branches, r, seed, r == 0, shots);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= n_rounds) return;
          run.rounds[r] =
              sim_detail::run_round(spec, branches, r, seed, r == 0, shots);
        }
      });
    for (auto& t : pool) t.join();
  }
  run.summary = summarize(run.rounds, spec.observables.size());
  return run;
}

// exhaustive mean over every member combination (and every pure branch of
// mixed boundary sites); sampling-free counterpart of the averaged channel
inline std::vector<double> enumerate_exhaustive(const BrickworkSpec& spec,
                                                size_t combo_cap = (1u << 22)) {
  spec.validate();
  if (spec.noise && !spec.noise->zero())
    throw std::invalid_argument("enumerate_exhaustive: noise is not enumerable");
  std::vector<const BrickworkSpec::Slot*> slots;
  for (const auto& layer : spec.layers)
    for (const auto& slot : layer) slots.push_back(&slot);
  const auto structure = product_structure(spec.init);
  std::vector<std::pair<Eigen::Vector2d, bool>> branch_weights;
  size_t combos = 1;
  for (const auto* s : slots) combos *= size_t(s->member_count());
  for (const auto& [site, rho] : structure.singles) {
    (void)site;
    Eigen::SelfAdjointEigenSolver<Matrix2cd> es(rho);
    branch_weights.push_back({es.eigenvalues(), es.eigenvalues()(0) > 1e-15});
    combos *= branch_weights.back().second ? 2 : 1;
  }
  if (combos > combo_cap)
    throw std::runtime_error("enumerate_exhaustive: too many member combinations");

  std::vector<double> acc(spec.observables.size(), 0.0);
  std::vector<int> counter(slots.size() + branch_weights.size(), 0);
  for (;;) {
    double weight = 1.0;
    for (size_t i = 0; i < slots.size(); ++i)
      if (slots[i]->kind == BrickworkSpec::Slot::Kind::ensemble)
        weight *= slots[i]->ensemble.members[counter[i]].probability;
    std::vector<int> branch;
    for (size_t q = 0; q < branch_weights.size(); ++q) {
      // pure sites keep their single component; mixed ones enumerate both
      const int pick = branch_weights[q].second ? counter[slots.size() + q] : 1;
      branch.push_back(pick);
      weight *= branch_weights[q].first(pick);
    }
    if (weight != 0.0) {
      Statevector psi(spec.init, branch);
      size_t idx = 0;
      for (int k = 1; k <= spec.T; ++k) {
        const auto tiles = spec.tiles_of_layer(k);
        for (size_t t = 0; t < tiles.size(); ++t, ++idx)
          psi.apply_gate(tiles[t], spec.layers[k - 1][t].member(counter[idx]));
      }
      for (size_t i = 0; i < spec.observables.size(); ++i)
        acc[i] += weight * psi.expectation(spec.observables[i]);
    }
    // bump the mixed-radix counter
    size_t pos = 0;
    for (; pos < counter.size(); ++pos) {
      const int radix = pos < slots.size()
                            ? slots[pos]->member_count()
                            : (branch_weights[pos - slots.size()].second ? 2 : 1);
      if (++counter[pos] < radix) break;
      counter[pos] = 0;
    }
    if (pos == counter.size()) break;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// experiment builders

inline Matrix2cd t_gate(double phi) {
  Matrix2cd t = Matrix2cd::Identity();
  t(1, 1) = std::exp(cd(0, phi));
  return t;
}

inline const Matrix2cd& hadamard() {
  static const Matrix2cd h = [] {
    Matrix2cd m;
    const double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
    return m;
  }();
  return h;
}

inline Matrix4cd cnot_12() {
  Matrix4cd m = Matrix4cd::Zero();
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

inline Matrix4cd cnot_21() {
  Matrix4cd m = Matrix4cd::Zero();
  m(0, 0) = m(2, 2) = m(1, 3) = m(3, 1) = 1.0;
  return m;
}

// the three Clifford+T local words, built from a tunable T(phi)
inline Matrix2cd coherent_error_local(int n, double phi) {
  const Matrix2cd h = hadamard(), t = t_gate(phi), t2 = t * t;
  switch (n) {
    case 1: return h * t2 * h * t * h;
    case 2: return h * t2 * h * t * h * t * h;
    case 3: return h * t2 * h * t * h * t;
    default: throw std::invalid_argument("coherent_error_local: n must be 1, 2 or 3");
  }
}

inline Matrix4cd coherent_error_gate(int n, double phi) {
  const Matrix4cd uu = kron2(coherent_error_local(n, phi), coherent_error_local(n, phi));
  return cnot_12() * uu * cnot_21() * uu * cnot_12() * uu;
}

// uniform brickwork of the coherent-error gate, one-sided twirl averaging,
// plus-state/Bell input, sigma_x probed at site T
inline BrickworkSpec build_coherent_error_spec(int n, double phi, int T = 5, int L = 12) {
  const Matrix4cd u = coherent_error_gate(n, phi);
  BrickworkSpec spec = BrickworkSpec::uniform(
      L, T, InitialState::plus_bell(L),
      BrickworkSpec::Slot::from_ensemble(twirl_3way(u, TwirlLeg::first)));
  spec.observables = {Observable::pauli_at(T, 1)};
  return spec;
}

// interaction and one-qubit parameters of the sample-complexity experiment:
// reflection ensemble near dual-unitarity with fixed generic locals,
// alternating between two local pairs on odd and even layers
inline KakForm sample_complexity_form(int layer) {
  KakForm k;
  k.theta = {std::numbers::pi / 4 + 0.05, std::numbers::pi / 4 + 0.05, 0.6};
  if (layer % 2 == 1) {
    k.w_a = su2_exponential(1.54383, 1.80539, 0.17212);
    k.w_b = su2_exponential(1.64979, 0.48791, 0.20562);
  } else {
    k.w_a = su2_exponential(1.53416, 0.20499, 1.04460);
    k.w_b = su2_exponential(0.45310, 1.11250, 1.60546);
  }
  return k;
}

// normalized mixed-axis probe used by the sample-complexity experiment
inline Observable sample_complexity_observable(int site) {
  MatrixXcd a = 0.57 * pauli(1) + 0.12 * pauli(2) + 0.84 * pauli(3);
  a /= std::sqrt((a.adjoint() * a).trace().real());
  return {{site}, a};
}

inline BrickworkSpec build_sample_complexity_spec(int T) {
  const int L = std::min(2 * T + 2, 20);
  if (T > L - 2)
    throw std::invalid_argument("sample-complexity spec: depth exceeds the size cap");
  BrickworkSpec spec;
  spec.L = L;
  spec.T = T;
  spec.init = InitialState::plus_bell(L);
  spec.layers.resize(T);
  for (int k = 1; k <= T; ++k) {
    const auto slot = BrickworkSpec::Slot::from_ensemble(
        reflection_ensemble(sample_complexity_form(k)));
    spec.layers[k - 1].assign(spec.tiles_of_layer(k).size(), slot);
  }
  spec.observables = {sample_complexity_observable(T),
                      sample_complexity_observable(T - 1)};
  return spec;
}

}  // namespace avgbench
