#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "correlation.hpp"
#include "entanglement.hpp"

namespace qecho {

struct LoschmidtPoint {
  double time = 0.0;
  complexd amplitude = 1.0;
  double rate = 0.0;  // -ln|amplitude|^2 / (total site count)
};

// det A with A_ij = sum_E <eps_i|E> e^{-iEt} <E|eps_j> over the occupied
// pre-quench orbitals. The determinant is taken through an LU factorization
// and the rate from its log so deep echo minima do not underflow.
class LoschmidtGeneral {
 public:
  explicit LoschmidtGeneral(const QuenchProtocol& protocol) : protocol_(protocol) {
    protocol_.validate();
    if (protocol_.temperature != 0.0)
      fail(Errc::config_invalid, "the Loschmidt echo is defined for temperature = 0 only");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> pre_solver(
        build_real_space_hamiltonian(protocol_.pre));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> post_solver(
        build_real_space_hamiltonian(protocol_.post));
    energies_ = post_solver.eigenvalues();
    const Eigen::VectorXd& eps = pre_solver.eigenvalues();
    int occ = 0;
    for (int i = 0; i < eps.size(); ++i) {
      fermi_occupation(eps[i], 0.0);
      if (eps[i] < 0.0) ++occ;
    }
    Eigen::MatrixXcd occupied(eps.size(), occ);
    int c = 0;
    for (int i = 0; i < eps.size(); ++i)
      if (eps[i] < 0.0) occupied.col(c++) = pre_solver.eigenvectors().col(i);
    p_ = post_solver.eigenvectors().adjoint() * occupied;
    omega_ = protocol_.pre.site_count();
  }

  LoschmidtPoint at(double t, double cap = kDefaultGammaCap) const {
    Eigen::VectorXcd phases(energies_.size());
    for (int i = 0; i < energies_.size(); ++i)
      phases[i] = std::polar(1.0, -energies_[i] * t);
    const Eigen::MatrixXcd a = p_.adjoint() * (phases.asDiagonal() * p_);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    double log_mag = 0.0;
    double phase = lu.permutationP().determinant() > 0 ? 0.0 : M_PI;
    bool zero = false;
    for (int i = 0; i < a.rows(); ++i) {
      const complexd u = lu.matrixLU()(i, i);
      if (std::abs(u) == 0.0) {
        zero = true;
        break;
      }
      log_mag += std::log(std::abs(u));
      phase += std::arg(u);
    }
    LoschmidtPoint out;
    out.time = t;
    out.amplitude = zero ? 0.0 : std::polar(std::exp(log_mag), phase);
    out.rate = zero ? cap : std::min(cap, -2.0 * log_mag / omega_);
    return out;
  }

 private:
  QuenchProtocol protocol_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd p_;
  int omega_ = 0;
};

// Product form for uniform quenches: L(t) = prod_k [cos(d^f_k t) +
// i sin(d^f_k t) cos(theta_k)], accumulated as log magnitude + phase.
class LoschmidtProduct {
 public:
  explicit LoschmidtProduct(const QuenchProtocol& protocol) {
    protocol.validate();
    if (protocol.temperature != 0.0)
      fail(Errc::config_invalid, "the Loschmidt echo is defined for temperature = 0 only");
    if (!protocol.pre.uniform() || !protocol.post.uniform())
      fail(Errc::bad_profile, "product form requires uniform pre and post models");
    std::vector<std::pair<DVector, DVector>> pairs;
    if (protocol.pre.two_dimensional()) {
      for (double kx : momentum_grid(protocol.pre.length))
        for (double ky : momentum_grid(protocol.pre.length_y))
          pairs.emplace_back(d_vector_2d(kx, ky, protocol.pre.mass),
                             d_vector_2d(kx, ky, protocol.post.mass));
    } else {
      for (double k : momentum_grid(protocol.pre.length))
        pairs.emplace_back(d_vector_1d(k, protocol.pre.mass),
                           d_vector_1d(k, protocol.post.mass));
    }
    for (const auto& [di, df] : pairs) {
      const double mi = di.magnitude(), mf = df.magnitude();
      if (mi < kGapTol || mf < kGapTol) fail(Errc::gap_closed, "gapless momentum on the grid");
      post_gap_.push_back(mf);
      cos_theta_.push_back((di.d1 * df.d1 + di.d2 * df.d2 + di.d3 * df.d3) / (mi * mf));
    }
    omega_ = protocol.pre.site_count();
  }

  LoschmidtPoint at(double t, double cap = kDefaultGammaCap) const {
    double log_mag = 0.0, phase = 0.0;
    bool zero = false;
    for (size_t i = 0; i < post_gap_.size(); ++i) {
      const complexd z(std::cos(post_gap_[i] * t),
                       std::sin(post_gap_[i] * t) * cos_theta_[i]);
      const double az = std::abs(z);
      if (az == 0.0) {
        zero = true;
        break;
      }
      log_mag += std::log(az);
      phase += std::arg(z);
    }
    LoschmidtPoint out;
    out.time = t;
    out.amplitude = zero ? 0.0 : std::polar(std::exp(log_mag), phase);
    out.rate = zero ? cap : std::min(cap, -2.0 * log_mag / omega_);
    return out;
  }

 private:
  std::vector<double> post_gap_, cos_theta_;
  int omega_ = 0;
};

inline LoschmidtPoint loschmidt_general(const QuenchProtocol& protocol, double t) {
  return LoschmidtGeneral(protocol).at(t);
}

inline LoschmidtPoint loschmidt_product(const QuenchProtocol& protocol, double t) {
  return LoschmidtProduct(protocol).at(t);
}

}  // namespace qecho
