#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <optional>
#include <vector>

#include "correlation.hpp"

namespace qecho {

constexpr double kDefaultEpsDeg = 1e-9;
constexpr double kDefaultGammaCap = 50.0;
constexpr double kHermitianTol = 1e-8;
constexpr double kXiClampTol = 1e-7;

// Eigenpairs of a subsystem correlation matrix: xi are entanglement-level
// occupations, xi = 1/2 is the entanglement Fermi level.
struct EntanglementSnapshot {
  double time = 0.0;
  Eigen::VectorXd xs;        // descending
  Eigen::MatrixXcd vectors;  // column i pairs with xs[i]
  int occupied_count = 0;    // #{xi >= 1/2}
  bool degenerate = false;   // any |xi - 1/2| < eps_deg
  double eps_deg = kDefaultEpsDeg;
  std::optional<double> ky;
};

struct EchoPoint {
  double time = 0.0;
  complexd echo;
  double magnitude = 0.0;
  double rate = 0.0;
  bool degenerate_flag = false;
};

enum class TransitionKind { jump, cusp, unclassifiable };

struct TransitionEvent {
  double t_c = 0.0;
  TransitionKind kind = TransitionKind::unclassifiable;
  std::optional<double> ky;
  double gamma_left = 0.0, gamma_right = 0.0;
  double slope_left = 0.0, slope_right = 0.0;
  bool occupied_change = false;          // occupied set changed across t_c
  std::vector<int> crossing_indices;     // xi indices at the Fermi level at t_c
};

inline EntanglementSnapshot entanglement_spectrum(const CorrelationSnapshot& snapshot,
                                                  double eps_deg = kDefaultEpsDeg) {
  const Eigen::MatrixXcd& c = snapshot.matrix;
  if (c.rows() != c.cols() || c.rows() == 0)
    fail(Errc::dimension_mismatch, "correlation matrix must be square and non-empty");
  const double herm_dev = (c - c.adjoint()).cwiseAbs().maxCoeff();
  if (herm_dev > kHermitianTol)
    fail(Errc::not_hermitian, "correlation matrix deviates from Hermitian by " + std::to_string(herm_dev));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(c);
  const int n = static_cast<int>(c.rows());

  EntanglementSnapshot out;
  out.time = snapshot.time;
  out.ky = snapshot.ky;
  out.eps_deg = eps_deg;
  out.xs.resize(n);
  out.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    double xi = solver.eigenvalues()[n - 1 - i];  // descending
    if (xi < -kXiClampTol || xi > 1.0 + kXiClampTol)
      fail(Errc::eigenvalue_out_of_range, "occupation eigenvalue " + std::to_string(xi));
    xi = std::min(1.0, std::max(0.0, xi));
    out.xs[i] = xi;
    Eigen::VectorXcd v = solver.eigenvectors().col(n - 1 - i);
    // fixed phase: largest-magnitude component real positive
    int imax = 0;
    double amax = 0.0;
    for (int r = 0; r < n; ++r)
      if (std::abs(v[r]) > amax) {
        amax = std::abs(v[r]);
        imax = r;
      }
    v *= std::conj(v[imax]) / amax;
    out.vectors.col(i) = v;
    // levels inside the eps street sit at the Fermi level and count as
    // occupied regardless of which side roundoff lands them on
    if (xi >= 0.5 - eps_deg) out.occupied_count = i + 1;
    if (std::abs(xi - 0.5) < eps_deg) out.degenerate = true;
  }
  return out;
}

inline double echo_rate(double magnitude, int omega_a, double cap = kDefaultGammaCap) {
  if (magnitude <= 0.0) return cap;
  return std::min(cap, -2.0 * std::log(magnitude) / omega_a);
}

inline double echo_rate(const EchoPoint& point, int omega_a, double cap = kDefaultGammaCap) {
  return echo_rate(point.magnitude, omega_a, cap);
}

namespace detail {

// Occupied eigenvector columns split at the Fermi level: solidly occupied
// levels versus levels pinned within eps of xi = 1/2.
struct FermiSplit {
  std::vector<int> solid, border;
};

inline FermiSplit fermi_split(const EntanglementSnapshot& snap) {
  FermiSplit out;
  for (int i = 0; i < snap.xs.size(); ++i) {
    if (std::abs(snap.xs[i] - 0.5) < snap.eps_deg)
      out.border.push_back(i);
    else if (snap.xs[i] >= 0.5)
      out.solid.push_back(i);
  }
  return out;
}

// Slater choices for a (near-)degenerate entanglement ground state: levels
// within eps of the Fermi level can be filled or emptied at equal weight, so
// the degenerate subspace is spanned by the choices over the border set.
struct OccupiedChoices {
  std::vector<std::vector<int>> column_sets;  // each: eigenvector columns of one choice
  int canonical = 0;                          // the xi >= 1/2 filling
};

inline OccupiedChoices occupied_choices(const EntanglementSnapshot& snap, int max_choices = 64) {
  const FermiSplit split = fermi_split(snap);
  const std::vector<int>& solid = split.solid;
  const std::vector<int>& border = split.border;
  OccupiedChoices out;
  const int nb = static_cast<int>(border.size());
  if (nb == 0 || (1 << std::min(nb, 20)) > max_choices) {
    // no ambiguity, or too wide to enumerate: keep the canonical filling
    std::vector<int> cols = solid;
    for (int i : border)
      if (snap.xs[i] >= 0.5) cols.push_back(i);
    out.column_sets.push_back(std::move(cols));
    out.canonical = 0;
    return out;
  }
  int canonical_mask = 0;
  for (int b = 0; b < nb; ++b)
    if (snap.xs[border[b]] >= 0.5) canonical_mask |= 1 << b;
  for (int mask = 0; mask < (1 << nb); ++mask) {
    std::vector<int> cols = solid;
    for (int b = 0; b < nb; ++b)
      if (mask >> b & 1) cols.push_back(border[b]);
    if (mask == canonical_mask) out.canonical = static_cast<int>(out.column_sets.size());
    out.column_sets.push_back(std::move(cols));
  }
  return out;
}

inline complexd slater_overlap(const EntanglementSnapshot& a, const std::vector<int>& cols_a,
                               const EntanglementSnapshot& b, const std::vector<int>& cols_b) {
  if (cols_a.size() != cols_b.size()) return 0.0;  // orthogonal number sectors
  const int n = static_cast<int>(cols_a.size());
  if (n == 0) return 1.0;
  Eigen::MatrixXcd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram(i, j) = a.vectors.col(cols_a[i]).dot(b.vectors.col(cols_b[j]));
  return gram.partialPivLu().determinant();
}

}  // namespace detail

// Overlap between the initial and instantaneous entanglement ground states,
// det <xi_i(0)|xi_j(t)> over occupied levels. With a degenerate Fermi level
// the ground state is a subspace spanned by the filling choices over the
// pinned levels. When both ends carry pinned levels, the overlap is taken
// between the minimal-particle-number members of the two manifolds — the
// determinant restricted to the solidly occupied cores, which is well defined
// because the dynamics conserve particle number. When only one end is
// degenerate, the magnitude is the norm of the projection onto the degenerate
// subspace, the largest singular value of the overlap matrix across the
// Slater choices; the reported phase comes from the canonical xi >= 1/2
// filling.
inline EchoPoint entanglement_echo(const EntanglementSnapshot& initial,
                                   const EntanglementSnapshot& current) {
  if (initial.xs.size() != current.xs.size())
    fail(Errc::dimension_mismatch, "snapshots come from different subsystem dimensions");
  EchoPoint out;
  out.time = current.time;
  out.degenerate_flag = initial.degenerate || current.degenerate;

  if (!out.degenerate_flag) {
    if (initial.occupied_count != current.occupied_count) {
      out.echo = 0.0;
      out.magnitude = 0.0;
    } else {
      std::vector<int> cols(initial.occupied_count);
      for (int i = 0; i < initial.occupied_count; ++i) cols[i] = i;
      out.echo = detail::slater_overlap(initial, cols, current, cols);
      out.magnitude = std::abs(out.echo);
    }
  } else if (initial.degenerate && current.degenerate) {
    const detail::FermiSplit fi = detail::fermi_split(initial);
    const detail::FermiSplit fc = detail::fermi_split(current);
    out.echo = detail::slater_overlap(initial, fi.solid, current, fc.solid);
    out.magnitude = std::abs(out.echo);
  } else {
    const detail::OccupiedChoices ci = detail::occupied_choices(initial);
    const detail::OccupiedChoices cc = detail::occupied_choices(current);
    Eigen::MatrixXcd overlaps(ci.column_sets.size(), cc.column_sets.size());
    for (int a = 0; a < overlaps.rows(); ++a)
      for (int b = 0; b < overlaps.cols(); ++b)
        overlaps(a, b) = detail::slater_overlap(initial, ci.column_sets[a], current,
                                                cc.column_sets[b]);
    const double sigma_max =
        overlaps.size() == 1
            ? std::abs(overlaps(0, 0))
            : Eigen::JacobiSVD<Eigen::MatrixXcd>(overlaps).singularValues()[0];
    const complexd canonical = overlaps(ci.canonical, cc.canonical);
    out.echo = std::abs(canonical) > 0.0 ? std::polar(sigma_max, std::arg(canonical))
                                         : complexd(sigma_max, 0.0);
    out.magnitude = sigma_max;
  }
  out.rate = echo_rate(out.magnitude, static_cast<int>(initial.xs.size()) / 2);
  return out;
}

inline double entanglement_entropy(const EntanglementSnapshot& snapshot) {
  double s = 0.0;
  for (int i = 0; i < snapshot.xs.size(); ++i) {
    const double xi = snapshot.xs[i];
    if (xi > 0.0) s -= xi * std::log(xi);
    if (xi < 1.0) s -= (1.0 - xi) * std::log(1.0 - xi);
  }
  return s;
}

inline double particle_number_variance(const EntanglementSnapshot& snapshot) {
  double var = 0.0;
  for (int i = 0; i < snapshot.xs.size(); ++i) var += snapshot.xs[i] * (1.0 - snapshot.xs[i]);
  return var;
}

struct MomentumResolvedEcho {
  std::vector<std::pair<double, EchoPoint>> blocks;  // (ky, echo of that block)
  EchoPoint total;
};

// Per-k_y echoes of a 2d quench plus their product. The product is
// accumulated as log magnitude + phase so wide lattices cannot underflow.
class MomentumEchoContext {
 public:
  explicit MomentumEchoContext(const QuenchProtocol& protocol, double eps_deg = kDefaultEpsDeg,
                               double cap = kDefaultGammaCap)
      : eps_deg_(eps_deg), cap_(cap) {
    protocol.validate();
    if (!protocol.pre.two_dimensional())
      fail(Errc::bad_profile, "momentum-resolved echo requires a 2d model");
    omega_a_ = protocol.subsystem.length * protocol.pre.length_y;
    for (double ky : momentum_grid(protocol.pre.length_y)) {
      pathways_.emplace_back(protocol, ky);
      initial_.push_back(entanglement_spectrum(pathways_.back().at(0.0), eps_deg));
    }
  }

  EntanglementSnapshot block_snapshot(int block, double t) const {
    return entanglement_spectrum(pathways_[block].at(t), eps_deg_);
  }

  const EntanglementSnapshot& block_initial(int block) const { return initial_[block]; }
  int block_count() const { return static_cast<int>(pathways_.size()); }
  double block_ky(int block) const { return *initial_[block].ky; }
  int omega_a() const { return omega_a_; }

  MomentumResolvedEcho at(double t) const {
    MomentumResolvedEcho out;
    double log_mag = 0.0, phase = 0.0;
    bool zero = false, degenerate = false;
    for (int b = 0; b < block_count(); ++b) {
      const EchoPoint point = entanglement_echo(initial_[b], block_snapshot(b, t));
      out.blocks.emplace_back(block_ky(b), point);
      degenerate = degenerate || point.degenerate_flag;
      if (point.magnitude == 0.0)
        zero = true;
      else {
        log_mag += std::log(point.magnitude);
        phase += std::arg(point.echo);
      }
    }
    out.total.time = t;
    out.total.degenerate_flag = degenerate;
    out.total.magnitude = zero ? 0.0 : std::exp(log_mag);
    out.total.echo = std::polar(out.total.magnitude, zero ? 0.0 : phase);
    out.total.rate = zero ? cap_ : std::min(cap_, -2.0 * log_mag / omega_a_);
    return out;
  }

 private:
  double eps_deg_, cap_;
  int omega_a_ = 0;
  std::vector<MomentumResolvedPathway> pathways_;
  std::vector<EntanglementSnapshot> initial_;
};

inline MomentumResolvedEcho momentum_resolved_echo(const QuenchProtocol& protocol, double t,
                                                   double eps_deg = kDefaultEpsDeg) {
  return MomentumEchoContext(protocol, eps_deg).at(t);
}

}  // namespace qecho
