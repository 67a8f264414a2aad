#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "correlation.hpp"
#include "entanglement.hpp"
#include "oracle.hpp"

namespace qecho {

struct OracleCheckOptions {
  int time_count = 50;
  double time_max = 8.0;
  double echo_tol = 1e-6;
  double entropy_tol = 1e-6;
  double variance_tol = 1e-6;
  double correlation_tol = 1e-9;
  double eps_deg = kDefaultEpsDeg;
};

struct OracleCheckReport {
  double max_echo_dev = 0.0;
  double max_echo_dev_degenerate = 0.0;  // magnitudes via the subspace projection
  double max_entropy_dev = 0.0;
  double max_variance_dev = 0.0;
  double max_correlation_dev = 0.0;
  int points = 0;
  int echo_points = 0;             // points entering max_echo_dev
  int degenerate_echo_points = 0;  // points entering max_echo_dev_degenerate
  bool passed = false;
};

// Compares the correlation-matrix machinery against a brute-force many-body
// computation in the full Fock sector. Requires a small lattice and a
// subsystem anchored at site 0 so that the Schmidt cut is a mode prefix.
inline OracleCheckReport run_oracle_check(const QuenchProtocol& protocol,
                                          const OracleCheckOptions& options = {}) {
  protocol.validate();
  if (protocol.temperature != 0.0)
    fail(Errc::config_invalid, "the exact check runs at temperature = 0 only");
  if (protocol.pre.mode_count() > kMaxOracleModes)
    fail(Errc::sector_too_large, "the exact check needs at most " +
                                     std::to_string(kMaxOracleModes / 2) + " sites");
  if (protocol.subsystem.start != 0)
    fail(Errc::config_invalid, "the exact check needs subsystem_start = 0");
  if (options.time_count < 2) fail(Errc::config_invalid, "need at least two sample times");

  const int particles = protocol.pre.site_count();  // half filling
  const int modes_a = protocol.subsystem_mode_count();
  const FockState initial = build_ground_state(protocol.pre, particles);
  const FreeEvolver evolver(protocol.post, particles);
  const SchmidtDecomposition initial_schmidt = schmidt_modes(initial, modes_a);

  GeneralPathway pathway(protocol);
  const EntanglementSnapshot initial_snap =
      entanglement_spectrum(pathway.at(0.0), options.eps_deg);

  OracleCheckReport report;
  for (int i = 0; i < options.time_count; ++i) {
    const double t = options.time_max * i / (options.time_count - 1);
    const FockState state = evolver.evolve(initial, t);

    const CorrelationSnapshot corr = pathway.at(t);
    const Eigen::MatrixXcd density =
        one_particle_density(state).topLeftCorner(modes_a, modes_a);
    report.max_correlation_dev = std::max(report.max_correlation_dev,
                                          (corr.matrix - density).cwiseAbs().maxCoeff());

    const EntanglementSnapshot snap = entanglement_spectrum(corr, options.eps_deg);
    const SchmidtDecomposition decomposition = schmidt_modes(state, modes_a);
    report.max_entropy_dev =
        std::max(report.max_entropy_dev,
                 std::abs(entanglement_entropy(snap) - schmidt_entropy(decomposition)));
    report.max_variance_dev =
        std::max(report.max_variance_dev, std::abs(particle_number_variance(snap) -
                                                   subsystem_number_variance(state, modes_a)));

    const EchoPoint echo = entanglement_echo(initial_snap, snap);
    const double exact = oracle_echo(initial_schmidt, decomposition, options.eps_deg);
    const double dev = std::abs(echo.magnitude - exact);
    if (snap.degenerate || initial_snap.degenerate) {
      report.max_echo_dev_degenerate = std::max(report.max_echo_dev_degenerate, dev);
      ++report.degenerate_echo_points;
    } else {
      report.max_echo_dev = std::max(report.max_echo_dev, dev);
      ++report.echo_points;
    }
    ++report.points;
  }
  report.passed = report.max_echo_dev < options.echo_tol &&
                  report.max_entropy_dev < options.entropy_tol &&
                  report.max_variance_dev < options.variance_tol &&
                  report.max_correlation_dev < options.correlation_tol &&
                  report.echo_points + report.degenerate_echo_points > 0;
  return report;
}

inline QuenchProtocol default_oracle_protocol() {
  QuenchProtocol protocol;
  protocol.pre = ModelSpec::chain(8, 1.5);
  protocol.post = ModelSpec::chain(8, 0.3);
  protocol.subsystem = SubsystemRange{0, 4};
  return protocol;
}

}  // namespace qecho
