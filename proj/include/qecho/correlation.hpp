#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "model.hpp"

namespace qecho {

constexpr double kFermiTol = 1e-12;  // |E| below this at T=0 is an ambiguous filling

// Subsystem of contiguous sites [start, start + length) along the chain
// (along x in 2d, where the cut keeps every y column).
struct SubsystemRange {
  int start = 0;
  int length = 0;
};

struct QuenchProtocol {
  ModelSpec pre, post;
  double temperature = 0.0;
  SubsystemRange subsystem;
  std::optional<Gauge> gauge;  // fixed gauge override for the Bloch pathways

  int subsystem_site_count() const {
    return pre.two_dimensional() ? subsystem.length * pre.length_y : subsystem.length;
  }
  int subsystem_mode_count() const { return 2 * subsystem_site_count(); }

  void validate() const {
    pre.validate();
    post.validate();
    if (pre.two_dimensional() != post.two_dimensional() || pre.length != post.length ||
        (pre.two_dimensional() && pre.length_y != post.length_y))
      fail(Errc::dimension_mismatch, "pre and post models must share the lattice");
    if (temperature < 0.0) fail(Errc::bad_profile, "temperature must be non-negative");
    if (subsystem.length < 1 || subsystem.start < 0 || subsystem.start >= pre.length ||
        subsystem.start + subsystem.length > pre.length || subsystem.length >= pre.length)
      fail(Errc::dimension_mismatch, "subsystem [start, start+length) must fit strictly inside the chain");
  }
};

// C_{lm}^{ss'}(t) = <c^dag_{l,s}(t) c_{m,s'}(t)> over subsystem modes,
// ordered site-major to match build_real_space_hamiltonian.
struct CorrelationSnapshot {
  double time = 0.0;
  Eigen::MatrixXcd matrix;
  std::optional<double> ky;  // set for per-k_y blocks of a 2d run
};

inline double fermi_occupation(double energy, double temperature) {
  if (temperature == 0.0) {
    if (std::abs(energy) < kFermiTol)
      fail(Errc::degenerate_fermi_level, "single-particle level at the Fermi energy at T=0");
    return energy < 0.0 ? 1.0 : 0.0;
  }
  return 1.0 / (std::exp(energy / temperature) + 1.0);
}

// Exact real-space pathway: diagonalize both Hamiltonians once, then each
// snapshot is a product of small dense factors. With Phi, Psi the pre/post
// eigenbases, V(t) = Psi exp(-iEt) Psi^dag Phi sqrt(n_F) gives
// C(t) = conj(V_A V_A^dag) on the subsystem rows.
class GeneralPathway {
 public:
  explicit GeneralPathway(const QuenchProtocol& protocol) : protocol_(protocol) {
    protocol_.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> pre_solver(
        build_real_space_hamiltonian(protocol_.pre));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> post_solver(
        build_real_space_hamiltonian(protocol_.post));
    energies_ = post_solver.eigenvalues();
    const Eigen::VectorXd& eps = pre_solver.eigenvalues();
    Eigen::MatrixXcd weighted;
    if (protocol_.temperature == 0.0) {
      int occ = 0;
      for (int i = 0; i < eps.size(); ++i) {
        fermi_occupation(eps[i], 0.0);
        if (eps[i] < 0.0) ++occ;
      }
      weighted.resize(eps.size(), occ);
      int c = 0;
      for (int i = 0; i < eps.size(); ++i)
        if (eps[i] < 0.0) weighted.col(c++) = pre_solver.eigenvectors().col(i);
    } else {
      weighted = pre_solver.eigenvectors();
      for (int i = 0; i < eps.size(); ++i)
        weighted.col(i) *= std::sqrt(fermi_occupation(eps[i], protocol_.temperature));
    }
    r_ = post_solver.eigenvectors().adjoint() * weighted;
    const int row0 = subsystem_row_offset();
    psi_a_ = post_solver.eigenvectors().middleRows(row0, protocol_.subsystem_mode_count());
    psi_full_ = post_solver.eigenvectors();
  }

  CorrelationSnapshot at(double t) const { return snapshot(psi_a_, t); }

  // full-system correlation matrix, used by cross checks against the oracle
  CorrelationSnapshot at_full(double t) const { return snapshot(psi_full_, t); }

  const QuenchProtocol& protocol() const { return protocol_; }

 private:
  int subsystem_row_offset() const {
    const int per_site = protocol_.pre.two_dimensional() ? 2 * protocol_.pre.length_y : 2;
    return protocol_.subsystem.start * per_site;
  }

  CorrelationSnapshot snapshot(const Eigen::MatrixXcd& rows, double t) const {
    Eigen::VectorXcd phases(energies_.size());
    for (int i = 0; i < energies_.size(); ++i)
      phases[i] = std::polar(1.0, -energies_[i] * t);
    Eigen::MatrixXcd v = rows * (phases.asDiagonal() * r_);
    CorrelationSnapshot snap;
    snap.time = t;
    snap.matrix = (v * v.adjoint()).conjugate();
    return snap;
  }

  QuenchProtocol protocol_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd r_, psi_a_, psi_full_;
};

namespace detail {

// Shared core of the translation-invariant pathways: a list of momentum
// modes, each carrying the pre-quench band occupations/eigenvectors and the
// post-quench eigensystem. Evaluating a snapshot costs O(#k * L_A) for the
// block-Toeplitz strip plus the Toeplitz fill.
struct TiMode {
  double k = 0.0;           // momentum conjugate to the cut direction
  double n_minus = 1.0, n_plus = 0.0;
  double omega_minus = 0.0, omega_plus = 0.0;
  Eigen::Vector2cd u_minus, u_plus;  // post-quench
  complexd up_vm, um_vm, up_vp, um_vp;  // <u_eta | v_band> overlaps
};

inline TiMode make_ti_mode(double k, const DVector& pre_d, const DVector& post_d, Gauge gauge,
                           double temperature) {
  TiMode mode;
  mode.k = k;
  const BlochEigensystem pre = bloch_eigensystem_any(pre_d, gauge);
  const BlochEigensystem post = bloch_eigensystem_any(post_d, gauge);
  mode.n_minus = fermi_occupation(pre.omega_minus, temperature);
  mode.n_plus = fermi_occupation(pre.omega_plus, temperature);
  mode.omega_minus = post.omega_minus;
  mode.omega_plus = post.omega_plus;
  mode.u_minus = post.u_minus;
  mode.u_plus = post.u_plus;
  mode.up_vm = post.u_plus.dot(pre.u_minus);
  mode.um_vm = post.u_minus.dot(pre.u_minus);
  mode.up_vp = post.u_plus.dot(pre.u_plus);
  mode.um_vp = post.u_minus.dot(pre.u_plus);
  return mode;
}

// 2x2 momentum-space weight: conj(n_- x x^dag + n_+ y y^dag) enters the
// block-Toeplitz sum B(delta) = (1/L) sum_k e^{-i delta k} T_k.
inline Eigen::Matrix2cd ti_weight(const TiMode& m, double t) {
  const complexd pp = std::polar(1.0, -m.omega_plus * t);
  const complexd pm = std::polar(1.0, -m.omega_minus * t);
  Eigen::Matrix2cd w = Eigen::Matrix2cd::Zero();
  if (m.n_minus != 0.0) {
    const Eigen::Vector2cd x = pp * m.up_vm * m.u_plus + pm * m.um_vm * m.u_minus;
    w += m.n_minus * (x.conjugate() * x.transpose());
  }
  if (m.n_plus != 0.0) {
    const Eigen::Vector2cd y = pp * m.up_vp * m.u_plus + pm * m.um_vp * m.u_minus;
    w += m.n_plus * (y.conjugate() * y.transpose());
  }
  return w;
}

inline Eigen::MatrixXcd toeplitz_blocks_to_matrix(const std::vector<Eigen::Matrix2cd>& strip,
                                                  int la) {
  // strip holds B(delta) for delta = -(la-1) .. la-1
  Eigen::MatrixXcd c(2 * la, 2 * la);
  for (int l = 0; l < la; ++l)
    for (int m = 0; m < la; ++m)
      c.block<2, 2>(2 * l, 2 * m) = strip[l - m + la - 1];
  return c;
}

struct TiCore {
  std::vector<TiMode> modes;
  int la = 0;

  Eigen::MatrixXcd correlation(double t) const {
    const int nk = static_cast<int>(modes.size());
    std::vector<Eigen::Matrix2cd> strip(2 * la - 1, Eigen::Matrix2cd::Zero());
    for (const TiMode& m : modes) {
      const Eigen::Matrix2cd w = ti_weight(m, t) / double(nk);
      for (int delta = -(la - 1); delta <= la - 1; ++delta)
        strip[delta + la - 1] += std::polar(1.0, -delta * m.k) * w;
    }
    return toeplitz_blocks_to_matrix(strip, la);
  }
};

inline TiCore make_ti_core_1d(const QuenchProtocol& protocol) {
  TiCore core;
  core.la = protocol.subsystem.length;
  const Gauge gauge =
      protocol.gauge ? *protocol.gauge : select_gauge(protocol.pre, protocol.post);
  for (double k : momentum_grid(protocol.pre.length))
    core.modes.push_back(make_ti_mode(k, d_vector_1d(k, protocol.pre.mass),
                                      d_vector_1d(k, protocol.post.mass), gauge,
                                      protocol.temperature));
  return core;
}

inline TiCore make_ti_core_ky(const QuenchProtocol& protocol, double ky) {
  TiCore core;
  core.la = protocol.subsystem.length;
  const Gauge gauge =
      protocol.gauge ? *protocol.gauge : select_gauge(protocol.pre, protocol.post);
  for (double kx : momentum_grid(protocol.pre.length))
    core.modes.push_back(make_ti_mode(kx, d_vector_2d(kx, ky, protocol.pre.mass),
                                      d_vector_2d(kx, ky, protocol.post.mass), gauge,
                                      protocol.temperature));
  return core;
}

}  // namespace detail

// Uniform pre and post quench: C(t) is block Toeplitz and assembled from the
// Bloch eigensystems. In 2d this builds the full (2 L_A L_y)^2 matrix; the
// per-k_y pathway below is the cheap route for large lattices.
class TranslationInvariantPathway {
 public:
  explicit TranslationInvariantPathway(const QuenchProtocol& protocol) : protocol_(protocol) {
    protocol_.validate();
    if (!protocol_.pre.uniform() || !protocol_.post.uniform())
      fail(Errc::bad_profile, "translation-invariant pathway requires uniform pre and post models");
    if (protocol_.pre.two_dimensional()) {
      for (double ky : momentum_grid(protocol_.pre.length_y))
        ky_cores_.push_back(detail::make_ti_core_ky(protocol_, ky));
    } else {
      core_ = detail::make_ti_core_1d(protocol_);
    }
  }

  CorrelationSnapshot at(double t) const {
    CorrelationSnapshot snap;
    snap.time = t;
    if (!protocol_.pre.two_dimensional()) {
      snap.matrix = core_.correlation(t);
      return snap;
    }
    // rotate the per-k_y blocks back to real-space y columns
    const int ly = protocol_.pre.length_y;
    const int la = protocol_.subsystem.length;
    const std::vector<double> kys = momentum_grid(ly);
    std::vector<Eigen::MatrixXcd> blocks;
    blocks.reserve(ly);
    for (const auto& core : ky_cores_) blocks.push_back(core.correlation(t));
    const int n = 2 * la * ly;
    snap.matrix.resize(n, n);
    for (int l = 0; l < la; ++l)
      for (int m = 0; m < la; ++m)
        for (int y1 = 0; y1 < ly; ++y1)
          for (int y2 = 0; y2 < ly; ++y2) {
            Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
            for (int ik = 0; ik < ly; ++ik)
              acc += std::polar(1.0, kys[ik] * (y2 - y1)) / double(ly) *
                     blocks[ik].block<2, 2>(2 * l, 2 * m);
            snap.matrix.block<2, 2>(2 * (l * ly + y1), 2 * (m * ly + y2)) = acc;
          }
    return snap;
  }

 private:
  QuenchProtocol protocol_;
  detail::TiCore core_;
  std::vector<detail::TiCore> ky_cores_;
};

// One k_y block of a 2d quench: an effective 1d chain with
// d(kx; ky) = (0, sin kx, sin ky, m - cos kx - cos ky).
class MomentumResolvedPathway {
 public:
  MomentumResolvedPathway(const QuenchProtocol& protocol, double ky)
      : protocol_(protocol), ky_(ky) {
    protocol_.validate();
    if (!protocol_.pre.two_dimensional())
      fail(Errc::bad_profile, "momentum-resolved pathway requires a 2d model");
    if (!protocol_.pre.uniform() || !protocol_.post.uniform())
      fail(Errc::bad_profile, "momentum-resolved pathway requires uniform models");
    core_ = detail::make_ti_core_ky(protocol_, ky);
  }

  CorrelationSnapshot at(double t) const {
    CorrelationSnapshot snap;
    snap.time = t;
    snap.ky = ky_;
    snap.matrix = core_.correlation(t);
    return snap;
  }

 private:
  QuenchProtocol protocol_;
  double ky_;
  detail::TiCore core_;
};

namespace detail {

// Fourier transform of a real-space eigenbasis, phi~_{(k,s),e} =
// (1/sqrt(L)) sum_l e^{-ikl} phi_{(l,s),e}; rows stay (mode = 2*ik + s).
inline Eigen::MatrixXcd fourier_rows(const Eigen::MatrixXcd& real_basis, int length) {
  const std::vector<double> ks = momentum_grid(length);
  Eigen::MatrixXcd out(real_basis.rows(), real_basis.cols());
  const double norm = 1.0 / std::sqrt(double(length));
  for (int ik = 0; ik < length; ++ik) {
    Eigen::RowVectorXcd phase(length);
    for (int l = 0; l < length; ++l) phase[l] = std::polar(norm, -ks[ik] * l);
    for (int s = 0; s < 2; ++s) {
      Eigen::MatrixXcd rows(length, real_basis.cols());
      for (int l = 0; l < length; ++l) rows.row(l) = real_basis.row(2 * l + s);
      out.row(2 * ik + s) = phase * rows;
    }
  }
  return out;
}

}  // namespace detail

enum class BrokenSide { pre, post };

// Mixed pathway for quenches where exactly one side is uniform. The
// non-uniform side is solved in real space and Fourier transformed; the
// uniform side keeps its closed-form Bloch evolution.
class PartialTiPathway {
 public:
  PartialTiPathway(const QuenchProtocol& protocol, BrokenSide broken)
      : protocol_(protocol), broken_(broken) {
    protocol_.validate();
    if (protocol_.pre.two_dimensional())
      fail(Errc::bad_profile, "partial pathway covers 1d chains only");
    const ModelSpec& broken_spec = broken == BrokenSide::pre ? protocol_.pre : protocol_.post;
    const ModelSpec& uniform_spec = broken == BrokenSide::pre ? protocol_.post : protocol_.pre;
    if (broken_spec.uniform() || !uniform_spec.uniform())
      fail(Errc::bad_profile, "partial pathway requires exactly the broken side to be non-uniform");
    const Gauge gauge = protocol_.gauge ? *protocol_.gauge : select_gauge(uniform_spec);
    const int length = protocol_.pre.length;
    const std::vector<double> ks = momentum_grid(length);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        build_real_space_hamiltonian(broken_spec));
    const Eigen::VectorXd& levels = solver.eigenvalues();

    if (broken == BrokenSide::pre) {
      // occupied pre orbitals in k space, columns weighted by sqrt(n_F)
      Eigen::MatrixXcd weighted;
      if (protocol_.temperature == 0.0) {
        int occ = 0;
        for (int i = 0; i < levels.size(); ++i) {
          fermi_occupation(levels[i], 0.0);
          if (levels[i] < 0.0) ++occ;
        }
        weighted.resize(levels.size(), occ);
        int c = 0;
        for (int i = 0; i < levels.size(); ++i)
          if (levels[i] < 0.0) weighted.col(c++) = solver.eigenvectors().col(i);
      } else {
        weighted = solver.eigenvectors();
        for (int i = 0; i < levels.size(); ++i)
          weighted.col(i) *= std::sqrt(fermi_occupation(levels[i], protocol_.temperature));
      }
      basis_k_ = detail::fourier_rows(weighted, length);
      post_sys_.reserve(length);
      for (double k : ks)
        post_sys_.push_back(bloch_eigensystem_any(d_vector_1d(k, uniform_spec.mass), gauge));
    } else {
      // post spectrum in real space plus its k-space rows; pre bands give the
      // occupation weights per k
      energies_ = levels;
      psi_a_ = solver.eigenvectors().middleRows(2 * protocol_.subsystem.start,
                                                protocol_.subsystem_mode_count());
      const Eigen::MatrixXcd psi_k = detail::fourier_rows(solver.eigenvectors(), length);
      g_.resize(2 * length, levels.size());
      for (int ik = 0; ik < length; ++ik) {
        const BlochEigensystem pre =
            bloch_eigensystem_any(d_vector_1d(ks[ik], uniform_spec.mass), gauge);
        Eigen::Matrix2cd m;
        m.col(0) = std::sqrt(fermi_occupation(pre.omega_minus, protocol_.temperature)) * pre.u_minus;
        m.col(1) = std::sqrt(fermi_occupation(pre.omega_plus, protocol_.temperature)) * pre.u_plus;
        g_.middleRows(2 * ik, 2) = m.adjoint() * psi_k.middleRows(2 * ik, 2);
      }
    }
  }

  CorrelationSnapshot at(double t) const {
    CorrelationSnapshot snap;
    snap.time = t;
    const int length = protocol_.pre.length;
    const int la = protocol_.subsystem.length;
    const std::vector<double> ks = momentum_grid(length);
    if (broken_ == BrokenSide::pre) {
      // Y_{(l,s),e} = (1/sqrt L) sum_k e^{ikl} [e^{-i H_k t} phi~_k]_{s,e}
      Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(2 * la, basis_k_.cols());
      const double norm = 1.0 / std::sqrt(double(length));
      for (int ik = 0; ik < length; ++ik) {
        const BlochEigensystem& post = post_sys_[ik];
        const Eigen::MatrixXcd block = basis_k_.middleRows(2 * ik, 2);
        const Eigen::MatrixXcd evolved =
            std::polar(1.0, -post.omega_plus * t) * (post.u_plus * (post.u_plus.adjoint() * block)) +
            std::polar(1.0, -post.omega_minus * t) * (post.u_minus * (post.u_minus.adjoint() * block));
        for (int l = 0; l < la; ++l)
          y.middleRows(2 * l, 2) +=
              std::polar(norm, ks[ik] * (protocol_.subsystem.start + l)) * evolved;
      }
      snap.matrix = (y * y.adjoint()).conjugate();
    } else {
      Eigen::VectorXcd phases(energies_.size());
      for (int i = 0; i < energies_.size(); ++i)
        phases[i] = std::polar(1.0, energies_[i] * t);
      const Eigen::MatrixXcd z = g_ * (phases.asDiagonal() * psi_a_.adjoint());
      snap.matrix = (z.adjoint() * z).conjugate();
    }
    return snap;
  }

 private:
  QuenchProtocol protocol_;
  BrokenSide broken_;
  // broken pre
  Eigen::MatrixXcd basis_k_;
  std::vector<BlochEigensystem> post_sys_;
  // broken post
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd psi_a_, g_;
};

inline CorrelationSnapshot correlation_general(const QuenchProtocol& protocol, double t) {
  return GeneralPathway(protocol).at(t);
}

inline CorrelationSnapshot correlation_translation_invariant(const QuenchProtocol& protocol,
                                                             double t) {
  return TranslationInvariantPathway(protocol).at(t);
}

inline CorrelationSnapshot correlation_partial_ti(const QuenchProtocol& protocol, double t,
                                                  BrokenSide broken) {
  return PartialTiPathway(protocol, broken).at(t);
}

inline CorrelationSnapshot correlation_momentum_resolved(const QuenchProtocol& protocol, double ky,
                                                         double t) {
  return MomentumResolvedPathway(protocol, ky).at(t);
}

}  // namespace qecho
