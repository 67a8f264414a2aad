#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qecho {

using complexd = std::complex<double>;

constexpr double kGapTol = 1e-12;        // below this |d| the bands touch
constexpr double kGaugeDenomTol = 1e-14; // minimum squared gauge denominator 2d(d +- d3)
constexpr double kPoleTol = 1e-13;       // |d1|,|d2| below this counts as a polar d-vector

// Bloch vector d = (d0, d1, d2, d3); H(k) = d0*s0 + d1*sx + d2*sy + d3*sz.
struct DVector {
  double d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double magnitude() const { return std::sqrt(d1 * d1 + d2 * d2 + d3 * d3); }
};

inline DVector d_vector_1d(double k, double m) {
  return {0.0, std::sin(k), 0.0, m - std::cos(k)};
}

inline DVector d_vector_2d(double kx, double ky, double m) {
  return {0.0, std::sin(kx), std::sin(ky), m - std::cos(kx) - std::cos(ky)};
}

enum class ModelKind { chain1d, chern2d, profile1d };

struct ModelSpec {
  ModelKind kind = ModelKind::chain1d;
  int length = 0;    // L in 1d, L_x in 2d
  int length_y = 0;  // 2d only
  double mass = 0.0;
  std::vector<double> mass_profile;  // profile1d only, one entry per site

  static ModelSpec chain(int length, double mass) {
    ModelSpec s;
    s.kind = ModelKind::chain1d;
    s.length = length;
    s.mass = mass;
    s.validate();
    return s;
  }

  static ModelSpec chern(int length_x, int length_y, double mass) {
    ModelSpec s;
    s.kind = ModelKind::chern2d;
    s.length = length_x;
    s.length_y = length_y;
    s.mass = mass;
    s.validate();
    return s;
  }

  static ModelSpec profile(std::vector<double> masses) {
    ModelSpec s;
    s.kind = ModelKind::profile1d;
    s.length = static_cast<int>(masses.size());
    s.mass_profile = std::move(masses);
    s.validate();
    return s;
  }

  bool uniform() const { return kind != ModelKind::profile1d; }
  bool two_dimensional() const { return kind == ModelKind::chern2d; }
  int site_count() const { return two_dimensional() ? length * length_y : length; }
  int mode_count() const { return 2 * site_count(); }

  double mass_at(int site) const {
    return kind == ModelKind::profile1d ? mass_profile[site] : mass;
  }

  void validate() const {
    if (length < 2) fail(Errc::bad_profile, "length must be at least 2");
    if (two_dimensional() && length_y < 2) fail(Errc::bad_profile, "length_y must be at least 2");
    if (kind == ModelKind::profile1d &&
        static_cast<int>(mass_profile.size()) != length)
      fail(Errc::bad_profile, "mass profile has " + std::to_string(mass_profile.size()) +
                                  " entries for length " + std::to_string(length));
  }
};

enum class Gauge { A, B };

struct BlochEigensystem {
  double omega_minus = 0.0, omega_plus = 0.0;
  Eigen::Vector2cd u_minus, u_plus;
};

// Band eigenvectors in one of the two fixed gauges. Each gauge has one polar
// d-vector (d1 = d2 = 0 with d3 of one sign) where its denominator vanishes:
// GaugeA at d3 = -d, GaugeB at d3 = +d. At the opposite pole the components
// degenerate benignly and the pinned limit vectors are returned exactly.
inline BlochEigensystem bloch_eigensystem(const DVector& v, Gauge gauge) {
  const double d = v.magnitude();
  if (d < kGapTol) fail(Errc::gap_closed, "|d| vanishes; band eigenvectors undefined");
  BlochEigensystem out;
  out.omega_minus = v.d0 - d;
  out.omega_plus = v.d0 + d;
  const bool polar = std::abs(v.d1) < kPoleTol * d && std::abs(v.d2) < kPoleTol * d;
  if (polar && gauge == Gauge::A && v.d3 > 0) {
    out.u_plus << 1.0, 0.0;
    out.u_minus << 0.0, -1.0;
    return out;
  }
  if (polar && gauge == Gauge::B && v.d3 < 0) {
    out.u_plus << 0.0, 1.0;
    out.u_minus << -1.0, 0.0;
    return out;
  }
  if (gauge == Gauge::A) {
    const double denom = 2.0 * d * (d + v.d3);
    if (denom < kGaugeDenomTol)
      fail(Errc::gauge_singular, "GaugeA denominator vanishes (d3 near -|d|)");
    const double n = std::sqrt(denom);
    out.u_plus << complexd(v.d3 + d, 0.0) / n, complexd(v.d1, v.d2) / n;
    out.u_minus << complexd(v.d1, -v.d2) / n, complexd(-(v.d3 + d), 0.0) / n;
  } else {
    const double denom = 2.0 * d * (d - v.d3);
    if (denom < kGaugeDenomTol)
      fail(Errc::gauge_singular, "GaugeB denominator vanishes (d3 near +|d|)");
    const double n = std::sqrt(denom);
    out.u_plus << complexd(v.d1, -v.d2) / n, complexd(d - v.d3, 0.0) / n;
    out.u_minus << complexd(v.d3 - d, 0.0) / n, complexd(v.d1, v.d2) / n;
  }
  return out;
}

// Preferred gauge where regular; at its singular pole the other gauge applies.
// Everything assembled from these eigenvectors is invariant under the per-k
// phase freedom, so mixing gauges across k points is exact.
inline BlochEigensystem bloch_eigensystem_any(const DVector& v, Gauge preferred) {
  const double d = v.magnitude();
  if (d < kGapTol) fail(Errc::gap_closed, "|d| vanishes; band eigenvectors undefined");
  const bool polar = std::abs(v.d1) < kPoleTol * d && std::abs(v.d2) < kPoleTol * d;
  if (polar) {
    if (preferred == Gauge::A && v.d3 < 0) return bloch_eigensystem(v, Gauge::B);
    if (preferred == Gauge::B && v.d3 > 0) return bloch_eigensystem(v, Gauge::A);
  }
  return bloch_eigensystem(v, preferred);
}

inline Eigen::Matrix2cd bloch_hamiltonian(const DVector& v) {
  Eigen::Matrix2cd h;
  h << complexd(v.d0 + v.d3, 0.0), complexd(v.d1, -v.d2),
       complexd(v.d1, v.d2), complexd(v.d0 - v.d3, 0.0);
  return h;
}

// k_j = 2*pi*j/n for j = 0..n-1
inline std::vector<double> momentum_grid(int n) {
  std::vector<double> ks(n);
  for (int j = 0; j < n; ++j) ks[j] = 2.0 * M_PI * j / n;
  return ks;
}

inline std::vector<DVector> d_vectors_on_grid(const ModelSpec& spec) {
  std::vector<DVector> out;
  if (spec.two_dimensional()) {
    for (double kx : momentum_grid(spec.length))
      for (double ky : momentum_grid(spec.length_y)) out.push_back(d_vector_2d(kx, ky, spec.mass));
  } else {
    for (double k : momentum_grid(spec.length)) out.push_back(d_vector_1d(k, spec.mass));
  }
  return out;
}

// Keeps the gauge denominator as far from zero as the grid allows.
inline Gauge select_gauge(const ModelSpec& spec) {
  if (!spec.uniform()) return Gauge::A;  // unused for real-space profiles
  double min_a = std::numeric_limits<double>::max();
  double min_b = std::numeric_limits<double>::max();
  for (const DVector& v : d_vectors_on_grid(spec)) {
    const double d = v.magnitude();
    min_a = std::min(min_a, d + v.d3);
    min_b = std::min(min_b, d - v.d3);
  }
  return min_a > min_b ? Gauge::A : Gauge::B;
}

inline Gauge select_gauge(const ModelSpec& pre, const ModelSpec& post) {
  if (!pre.uniform()) return select_gauge(post);
  if (!post.uniform()) return select_gauge(pre);
  double min_a = std::numeric_limits<double>::max();
  double min_b = std::numeric_limits<double>::max();
  for (const ModelSpec* s : {&pre, &post}) {
    for (const DVector& v : d_vectors_on_grid(*s)) {
      const double d = v.magnitude();
      min_a = std::min(min_a, d + v.d3);
      min_b = std::min(min_b, d - v.d3);
    }
  }
  return min_a > min_b ? Gauge::A : Gauge::B;
}

namespace detail {

inline Eigen::Matrix2cd hop_block_x() {
  Eigen::Matrix2cd h;
  h << complexd(-0.5, 0.0), complexd(0.0, -0.5),
       complexd(0.0, -0.5), complexd(0.5, 0.0);
  return h;  // -(sz + i*sx)/2, bond l -> l+1
}

inline Eigen::Matrix2cd hop_block_y() {
  Eigen::Matrix2cd h;
  h << complexd(-0.5, 0.0), complexd(-0.5, 0.0),
       complexd(0.5, 0.0), complexd(0.5, 0.0);
  return h;  // -(sz + i*sy)/2, bond y -> y+1
}

}  // namespace detail

// Periodic real-space Hamiltonian over modes (site, spin), site-major:
// mode index = 2*site + sigma, and in 2d site = x*L_y + y so that a cut along
// x keeps subsystem modes contiguous. Fourier transforming with
// c_{l,sigma} = (1/sqrt(L)) sum_k e^{ikl} c_{k,sigma} recovers the Bloch form.
inline Eigen::MatrixXcd build_real_space_hamiltonian(const ModelSpec& spec) {
  spec.validate();
  const int n = spec.mode_count();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::Matrix2cd sz = (Eigen::Matrix2cd() << 1.0, 0.0, 0.0, -1.0).finished();
  if (spec.two_dimensional()) {
    const int lx = spec.length, ly = spec.length_y;
    const Eigen::Matrix2cd hx = detail::hop_block_x();
    const Eigen::Matrix2cd hy = detail::hop_block_y();
    for (int x = 0; x < lx; ++x) {
      for (int y = 0; y < ly; ++y) {
        const int s = x * ly + y;
        h.block<2, 2>(2 * s, 2 * s) = spec.mass * sz;
        const int sx = ((x + 1) % lx) * ly + y;
        h.block<2, 2>(2 * s, 2 * sx) += hx;
        h.block<2, 2>(2 * sx, 2 * s) += hx.adjoint();
        const int sy = x * ly + (y + 1) % ly;
        h.block<2, 2>(2 * s, 2 * sy) += hy;
        h.block<2, 2>(2 * sy, 2 * s) += hy.adjoint();
      }
    }
  } else {
    const int l = spec.length;
    const Eigen::Matrix2cd hx = detail::hop_block_x();
    for (int i = 0; i < l; ++i) {
      h.block<2, 2>(2 * i, 2 * i) = spec.mass_at(i) * sz;
      const int j = (i + 1) % l;
      h.block<2, 2>(2 * i, 2 * j) += hx;
      h.block<2, 2>(2 * j, 2 * i) += hx.adjoint();
    }
  }
  return h;
}

}  // namespace qecho
