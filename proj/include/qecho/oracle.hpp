#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <bit>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "correlation.hpp"
#include "entanglement.hpp"

namespace qecho {

constexpr int kMaxOracleModes = 16;

// Occupation-number basis of the fixed-N sector: C(2L, N) bitmasks in
// ascending integer order; basis states are ascending-mode products
// c^dag_{m1} c^dag_{m2} ... |0> with m1 < m2 < ...
struct SectorBasis {
  int modes = 0, particles = 0;
  std::vector<uint32_t> masks;
  std::map<uint32_t, int32_t> index;

  static const SectorBasis& get(int modes, int particles) {
    if (modes > kMaxOracleModes)
      fail(Errc::sector_too_large, std::to_string(modes) + " modes exceeds the exact-sector limit");
    if (particles < 0 || particles > modes)
      fail(Errc::dimension_mismatch, "particle number outside [0, modes]");
    static std::map<std::pair<int, int>, SectorBasis> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto [it, inserted] = cache.try_emplace({modes, particles});
    SectorBasis& basis = it->second;
    if (inserted) {
      basis.modes = modes;
      basis.particles = particles;
      for (uint32_t mask = 0; mask < (1u << modes); ++mask)
        if (std::popcount(mask) == particles) {
          basis.index[mask] = static_cast<int32_t>(basis.masks.size());
          basis.masks.push_back(mask);
        }
    }
    return basis;
  }
};

struct FockState {
  int modes = 0, particles = 0;
  Eigen::VectorXcd amplitudes;  // over SectorBasis::get(modes, particles).masks

  const SectorBasis& basis() const { return SectorBasis::get(modes, particles); }
  double norm() const { return amplitudes.norm(); }
};

inline complexd state_overlap(const FockState& a, const FockState& b) {
  if (a.modes != b.modes || a.particles != b.particles)
    fail(Errc::dimension_mismatch, "states live in different sectors");
  return a.amplitudes.dot(b.amplitudes);
}

// Slater determinant of the given orbitals (modes x N), expanded over the
// sector basis through minor determinants.
inline FockState slater_state(const Eigen::MatrixXcd& orbitals) {
  FockState state;
  state.modes = static_cast<int>(orbitals.rows());
  state.particles = static_cast<int>(orbitals.cols());
  const SectorBasis& basis = SectorBasis::get(state.modes, state.particles);
  state.amplitudes.resize(basis.masks.size());
  const int n = state.particles;
  Eigen::MatrixXcd minor(n, n);
  for (size_t a = 0; a < basis.masks.size(); ++a) {
    int r = 0;
    for (int mode = 0; mode < state.modes; ++mode)
      if (basis.masks[a] >> mode & 1) minor.row(r++) = orbitals.row(mode);
    state.amplitudes[a] = n == 0 ? complexd(1.0) : minor.partialPivLu().determinant();
  }
  return state;
}

inline FockState build_ground_state(const ModelSpec& spec, int particles) {
  spec.validate();
  if (spec.mode_count() > kMaxOracleModes)
    fail(Errc::sector_too_large, "lattice too large for the exact sector");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(build_real_space_hamiltonian(spec));
  if (particles < 1 || particles > spec.mode_count())
    fail(Errc::dimension_mismatch, "particle number outside the mode range");
  if (particles < spec.mode_count() &&
      solver.eigenvalues()[particles] - solver.eigenvalues()[particles - 1] < kFermiTol)
    fail(Errc::degenerate_fermi_level, "filling boundary is degenerate");
  return slater_state(solver.eigenvectors().leftCols(particles));
}

// Exact free-fermion evolution on the sector: the post-quench eigenbasis is
// decomposed into adjacent two-mode Givens rotations, so e^{-iHt} becomes
// (rotate to orbitals) -> (phase each mask by its summed energies) ->
// (rotate back). Adjacent rotations avoid fermionic reordering signs, and
// the residual diagonal phases of the decomposition cancel between the two
// directions.
class FreeEvolver {
 public:
  FreeEvolver(const ModelSpec& post, int particles)
      : modes_(post.mode_count()), particles_(particles) {
    if (modes_ > kMaxOracleModes)
      fail(Errc::sector_too_large, "lattice too large for the exact sector");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(build_real_space_hamiltonian(post));
    Eigen::MatrixXcd a = solver.eigenvectors();
    for (int c = 0; c < modes_; ++c)
      for (int r = modes_ - 1; r > c; --r) {
        const complexd va = a(r - 1, c), vb = a(r, c);
        const double nn = std::hypot(std::abs(va), std::abs(vb));
        if (nn < 1e-300 || std::abs(vb) == 0.0) continue;
        Eigen::Matrix2cd g;
        g << std::conj(va) / nn, std::conj(vb) / nn, -vb / nn, va / nn;
        a.middleRows(r - 1, 2) = g * a.middleRows(r - 1, 2);
        rotations_.push_back({r - 1, g});
      }

    const SectorBasis& basis = SectorBasis::get(modes_, particles_);
    const size_t dim = basis.masks.size();
    energy_sum_.resize(dim);
    for (size_t i = 0; i < dim; ++i) {
      double e = 0.0;
      for (int mode = 0; mode < modes_; ++mode)
        if (basis.masks[i] >> mode & 1) e += solver.eigenvalues()[mode];
      energy_sum_[i] = e;
    }
    plans_.reserve(rotations_.size());
    for (const auto& [row, g] : rotations_) {
      Plan plan;
      for (size_t idx = 0; idx < dim; ++idx) {
        const uint32_t bits = basis.masks[idx] >> row & 3u;
        if (bits == 1u)
          plan.pairs.emplace_back(static_cast<int32_t>(idx),
                                  basis.index.at(basis.masks[idx] ^ (3u << row)));
        else if (bits == 3u)
          plan.both.push_back(static_cast<int32_t>(idx));
      }
      plans_.push_back(std::move(plan));
    }
  }

  FockState evolve(const FockState& state, double t) const {
    if (state.modes != modes_ || state.particles != particles_)
      fail(Errc::dimension_mismatch, "state sector does not match the evolver");
    FockState out = state;
    for (size_t r = 0; r < plans_.size(); ++r)
      apply(out.amplitudes, plans_[r], rotations_[r].second);
    for (Eigen::Index i = 0; i < out.amplitudes.size(); ++i)
      out.amplitudes[i] *= std::polar(1.0, -energy_sum_[i] * t);
    for (size_t r = plans_.size(); r-- > 0;)
      apply(out.amplitudes, plans_[r], rotations_[r].second.adjoint());
    return out;
  }

 private:
  struct Plan {
    std::vector<std::pair<int32_t, int32_t>> pairs;  // (mode-i-only, mode-i+1-only) indices
    std::vector<int32_t> both;
  };

  static void apply(Eigen::VectorXcd& amps, const Plan& plan, const Eigen::Matrix2cd& w) {
    const complexd det = w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);
    for (const auto& [a, b] : plan.pairs) {
      const complexd va = amps[a], vb = amps[b];
      amps[a] = w(0, 0) * va + w(0, 1) * vb;
      amps[b] = w(1, 0) * va + w(1, 1) * vb;
    }
    for (int32_t idx : plan.both) amps[idx] *= det;
  }

  int modes_, particles_;
  std::vector<std::pair<int, Eigen::Matrix2cd>> rotations_;
  std::vector<double> energy_sum_;
  std::vector<Plan> plans_;
};

inline FockState evolve(const FockState& state, const ModelSpec& post, double t) {
  return FreeEvolver(post, state.particles).evolve(state, t);
}

struct SchmidtVector {
  int particles_a = 0;      // the B side holds (total - particles_a)
  Eigen::VectorXcd amplitudes;  // over the A-(or B-)sector basis masks, ascending
};

struct SchmidtDecomposition {
  std::vector<double> values;  // singular values (lambda_i^{1/2}), descending
  std::vector<SchmidtVector> left, right;
};

namespace detail {

// Reordering sign between the canonical ascending-mode product and the
// A-modes-first grouping: each occupied A mode commutes past the occupied B
// modes below it. A spans the lowest modes here, so the sign is always +1;
// kept in general form to make the convention explicit.
inline double cut_reorder_sign(uint32_t a_mask, uint32_t b_mask_above) {
  (void)a_mask;
  (void)b_mask_above;
  return 1.0;
}

}  // namespace detail

inline SchmidtDecomposition schmidt_modes(const FockState& state, int modes_a) {
  if (modes_a < 1 || modes_a >= state.modes)
    fail(Errc::dimension_mismatch, "cut must leave modes on both sides");
  const SectorBasis& basis = state.basis();
  const int modes_b = state.modes - modes_a;
  const uint32_t a_filter = (1u << modes_a) - 1u;

  struct Triple {
    double value;
    int particles_a;
    Eigen::VectorXcd left, right;
  };
  std::vector<Triple> triples;
  const int na_min = std::max(0, state.particles - modes_b);
  const int na_max = std::min(modes_a, state.particles);
  for (int na = na_min; na <= na_max; ++na) {
    const SectorBasis& ab = SectorBasis::get(modes_a, na);
    const SectorBasis& bb = SectorBasis::get(modes_b, state.particles - na);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(ab.masks.size(), bb.masks.size());
    for (size_t i = 0; i < basis.masks.size(); ++i) {
      const uint32_t a_mask = basis.masks[i] & a_filter;
      if (std::popcount(a_mask) != na) continue;
      const uint32_t b_mask = basis.masks[i] >> modes_a;
      m(ab.index.at(a_mask), bb.index.at(b_mask)) =
          detail::cut_reorder_sign(a_mask, b_mask) * state.amplitudes[i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (int r = 0; r < svd.singularValues().size(); ++r) {
      if (svd.singularValues()[r] < 1e-14) continue;
      triples.push_back({svd.singularValues()[r], na, svd.matrixU().col(r),
                         svd.matrixV().col(r).conjugate()});
    }
  }
  std::sort(triples.begin(), triples.end(),
            [](const Triple& x, const Triple& y) { return x.value > y.value; });
  SchmidtDecomposition out;
  for (Triple& t : triples) {
    out.values.push_back(t.value);
    out.left.push_back({t.particles_a, std::move(t.left)});
    out.right.push_back({t.particles_a, std::move(t.right)});
  }
  return out;
}

inline SchmidtDecomposition schmidt(const FockState& state, int cut_site) {
  if (cut_site < 1 || 2 * cut_site >= state.modes)
    fail(Errc::dimension_mismatch, "cut site outside the chain");
  return schmidt_modes(state, 2 * cut_site);
}

// |<lambda_0(0)|lambda_0(t)>|. A degenerate top Schmidt value makes the
// ground state a manifold: when both ends are degenerate, the overlap is
// taken between the minimal-particle-number members of the two manifolds
// (well defined because the dynamics conserve particle number); when only one
// end is degenerate it is the norm of the projection onto the degenerate
// subspace, the largest singular value of the member overlap matrix.
inline double oracle_echo(const SchmidtDecomposition& initial, const SchmidtDecomposition& current,
                          double eps_deg = kDefaultEpsDeg) {
  if (initial.values.empty() || current.values.empty())
    fail(Errc::dimension_mismatch, "empty Schmidt decomposition");
  std::vector<int> deg_i, deg_c;
  for (size_t i = 0; i < initial.values.size() && initial.values[0] - initial.values[i] < eps_deg;
       ++i)
    deg_i.push_back(static_cast<int>(i));
  for (size_t j = 0; j < current.values.size() && current.values[0] - current.values[j] < eps_deg;
       ++j)
    deg_c.push_back(static_cast<int>(j));
  if (deg_i.size() > 1 && deg_c.size() > 1) {
    const auto min_sector = [](const std::vector<int>& deg,
                               const std::vector<SchmidtVector>& left) {
      int n_min = left[deg.front()].particles_a;
      for (int d : deg) n_min = std::min(n_min, left[d].particles_a);
      std::vector<int> out;
      for (int d : deg)
        if (left[d].particles_a == n_min) out.push_back(d);
      return out;
    };
    deg_i = min_sector(deg_i, initial.left);
    deg_c = min_sector(deg_c, current.left);
  }
  Eigen::MatrixXcd overlaps(deg_i.size(), deg_c.size());
  for (size_t a = 0; a < deg_i.size(); ++a)
    for (size_t b = 0; b < deg_c.size(); ++b) {
      const SchmidtVector& u = initial.left[deg_i[a]];
      const SchmidtVector& v = current.left[deg_c[b]];
      overlaps(a, b) =
          u.particles_a == v.particles_a ? u.amplitudes.dot(v.amplitudes) : complexd(0.0);
    }
  if (overlaps.size() == 1) return std::abs(overlaps(0, 0));
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(overlaps).singularValues()[0];
}

inline Eigen::MatrixXcd one_particle_density(const FockState& state) {
  const SectorBasis& basis = state.basis();
  Eigen::MatrixXcd density = Eigen::MatrixXcd::Zero(state.modes, state.modes);
  for (size_t a = 0; a < basis.masks.size(); ++a) {
    const uint32_t mask = basis.masks[a];
    const complexd amp = state.amplitudes[a];
    if (amp == complexd(0.0)) continue;
    for (int j = 0; j < state.modes; ++j) {
      if (!(mask >> j & 1)) continue;
      density(j, j) += std::norm(amp);
      const uint32_t without_j = mask & ~(1u << j);
      const int sign_j = std::popcount(mask & ((1u << j) - 1u)) & 1 ? -1 : 1;
      for (int i = 0; i < state.modes; ++i) {
        if (i == j || (without_j >> i & 1)) continue;
        const int sign_i = std::popcount(without_j & ((1u << i) - 1u)) & 1 ? -1 : 1;
        const int32_t b = basis.index.at(without_j | (1u << i));
        density(i, j) += std::conj(state.amplitudes[b]) * complexd(sign_i * sign_j) * amp;
      }
    }
  }
  return density;
}

inline double subsystem_number_variance(const FockState& state, int modes_a) {
  const SectorBasis& basis = state.basis();
  const uint32_t a_filter = (1u << modes_a) - 1u;
  double mean = 0.0, second = 0.0;
  for (size_t i = 0; i < basis.masks.size(); ++i) {
    const double w = std::norm(state.amplitudes[i]);
    const int na = std::popcount(basis.masks[i] & a_filter);
    mean += w * na;
    second += w * na * na;
  }
  return second - mean * mean;
}

inline double energy_expectation(const FockState& state, const Eigen::MatrixXcd& h) {
  return (h.cwiseProduct(one_particle_density(state))).sum().real();
}

inline double schmidt_entropy(const SchmidtDecomposition& decomposition) {
  double s = 0.0;
  for (double v : decomposition.values) {
    const double lambda = v * v;
    if (lambda > 0.0) s -= lambda * std::log(lambda);
  }
  return s;
}

}  // namespace qecho
