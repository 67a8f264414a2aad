#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qecho/entanglement.hpp"
#include "qecho/series.hpp"
#include "testutil.hpp"

namespace testutil {

// Randomized structural checks shared between the unit suite and the
// acceptance battery. Every protocol exercises:
//   - Hermiticity of the subsystem correlation matrix,
//   - occupation eigenvalues confined to [0, 1],
//   - particle-number conservation over time,
//   - echo magnitude bounded by one,
//   - gauge independence of the echo magnitude (uniform protocols),
//   - agreement between the specialized pathway and the real-space one,
//   - factorization of 2d snapshots into momentum blocks.
struct InvariantReport {
  int protocols = 0;
  int checks = 0;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
};

inline void check_protocol_invariants(const qecho::QuenchProtocol& protocol, Rng& rng,
                                      InvariantReport& report) {
  using namespace qecho;
  const std::string tag = " [protocol " + std::to_string(report.protocols) + "]";
  GeneralPathway general(protocol);
  SeriesEngine engine(protocol, PathwayChoice::automatic, kDefaultEpsDeg);

  const double n0 = general.at_full(0.0).matrix.trace().real();
  for (int i = 0; i < 3; ++i) {
    const double t = rng.uniform(0.0, 6.0);
    const CorrelationSnapshot snap = general.at(t);
    report.expect((snap.matrix - snap.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-9,
                  "correlation matrix not Hermitian" + tag);
    const EntanglementSnapshot spectrum = entanglement_spectrum(snap);
    report.expect(spectrum.xs.minCoeff() >= 0.0 && spectrum.xs.maxCoeff() <= 1.0,
                  "occupation eigenvalue escapes [0, 1]" + tag);
    report.expect(std::abs(general.at_full(t).matrix.trace().real() - n0) < 1e-8,
                  "total particle number drifts" + tag);
    report.expect(entanglement_entropy(spectrum) >= -1e-12, "negative entropy" + tag);
    const double var = particle_number_variance(spectrum);
    report.expect(var >= -1e-12 && var <= 0.25 * spectrum.xs.size() + 1e-12,
                  "variance outside the quantized band" + tag);

    // the auto-selected pathway must agree with the real-space computation
    double engine_max = 0.0;
    Eigen::VectorXd xs_union;
    if (engine.block_count() == 1) {
      xs_union = engine.snapshot(0, t).xs;
    } else {
      std::vector<double> pool;
      for (int b = 0; b < engine.block_count(); ++b) {
        const Eigen::VectorXd xs = engine.snapshot(b, t).xs;
        pool.insert(pool.end(), xs.data(), xs.data() + xs.size());
      }
      std::sort(pool.begin(), pool.end(), std::greater<double>());
      xs_union = Eigen::Map<Eigen::VectorXd>(pool.data(), pool.size());
    }
    for (int i = 0; i < spectrum.xs.size(); ++i)
      engine_max = std::max(engine_max, std::abs(spectrum.xs[i] - xs_union[i]));
    report.expect(engine_max < 1e-8, "pathway spectra disagree" + tag);

    // echo magnitude from the full matrix vs the block product
    const EchoPoint echo = entanglement_echo(entanglement_spectrum(general.at(0.0)), spectrum);
    report.expect(echo.magnitude <= 1.0 + 1e-9, "echo magnitude exceeds one" + tag);
    if (engine.block_count() > 1 && !echo.degenerate_flag) {
      double block_product = 1.0;
      bool block_degenerate = false;
      for (int b = 0; b < engine.block_count(); ++b) {
        const EchoPoint point =
            entanglement_echo(engine.initial(b), engine.snapshot(b, t));
        block_degenerate = block_degenerate || point.degenerate_flag;
        block_product *= point.magnitude;
      }
      if (!block_degenerate)
        report.expect(std::abs(block_product - echo.magnitude) < 1e-7,
                      "momentum blocks do not factorize the echo" + tag);
    }
  }

  if (protocol.pre.uniform() && protocol.post.uniform() && !protocol.pre.two_dimensional()) {
    const double t = rng.uniform(0.5, 4.0);
    double mags[2];
    for (Gauge g : {Gauge::A, Gauge::B}) {
      QuenchProtocol fixed = protocol;
      fixed.gauge = g;
      TranslationInvariantPathway pathway(fixed);
      const EchoPoint point = entanglement_echo(entanglement_spectrum(pathway.at(0.0)),
                                                entanglement_spectrum(pathway.at(t)));
      mags[g == Gauge::A ? 0 : 1] = point.magnitude;
    }
    report.expect(std::abs(mags[0] - mags[1]) < 1e-9,
                  "echo magnitude depends on the gauge" + tag);
  }
}

inline InvariantReport run_invariant_battery(int protocols, std::uint64_t seed) {
  InvariantReport report;
  Rng rng(seed);
  for (int i = 0; i < protocols; ++i) {
    const qecho::QuenchProtocol protocol = random_protocol(rng);
    check_protocol_invariants(protocol, rng, report);
    ++report.protocols;
  }
  return report;
}

}  // namespace testutil
