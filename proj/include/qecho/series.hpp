#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "correlation.hpp"
#include "entanglement.hpp"
#include "loschmidt.hpp"
#include "parallel.hpp"
#include "transitions.hpp"

namespace qecho {

enum class PathwayChoice { automatic, general, translation_invariant, partial, momentum_resolved };
enum class Toggle { automatic, on, off };

struct RunOptions {
  double time_max = 30.0;
  int time_steps = 600;
  PathwayChoice pathway = PathwayChoice::automatic;
  Toggle loschmidt = Toggle::automatic;
  bool detect = true;
  int threads = 1;
  DetectorOptions detector;
};

struct SeriesRecord {
  double t = 0.0;
  double echo_mag = 0.0;
  double echo_phase = 0.0;
  double gamma = 0.0;
  bool echo_zero = false;
  double lambda_rate = std::numeric_limits<double>::quiet_NaN();
  double entropy = 0.0;
  double variance = 0.0;
  int occupied_count = 0;
  bool degenerate = false;
};

struct SpectrumRow {
  double t = 0.0;
  int index = 0;
  double xi = 0.0;
  std::optional<double> ky;
};

struct SeriesBundle {
  QuenchProtocol protocol;
  std::vector<double> grid;
  std::vector<SeriesRecord> records;
  std::vector<SpectrumRow> spectrum;
  std::vector<TransitionEvent> transitions;
};

inline PathwayChoice resolve_pathway(const QuenchProtocol& protocol, PathwayChoice requested) {
  protocol.validate();
  const bool pre_uniform = protocol.pre.uniform();
  const bool post_uniform = protocol.post.uniform();
  if (requested == PathwayChoice::automatic) {
    if (protocol.pre.two_dimensional()) return PathwayChoice::momentum_resolved;
    if (pre_uniform && post_uniform) return PathwayChoice::translation_invariant;
    if (pre_uniform != post_uniform) return PathwayChoice::partial;
    return PathwayChoice::general;
  }
  if (requested == PathwayChoice::translation_invariant && !(pre_uniform && post_uniform))
    fail(Errc::config_invalid, "translation-invariant pathway needs uniform pre and post models");
  if (requested == PathwayChoice::partial && pre_uniform == post_uniform)
    fail(Errc::config_invalid, "partial pathway needs exactly one non-uniform side");
  if (requested == PathwayChoice::momentum_resolved && !protocol.pre.two_dimensional())
    fail(Errc::config_invalid, "momentum-resolved pathway needs a 2d model");
  return requested;
}

// One correlation source per independent block: a single block in 1d, one
// block per k_y in 2d.
class SeriesEngine {
 public:
  SeriesEngine(const QuenchProtocol& protocol, PathwayChoice requested, double eps_deg)
      : protocol_(protocol), eps_deg_(eps_deg) {
    choice_ = resolve_pathway(protocol_, requested);
    switch (choice_) {
      case PathwayChoice::general:
        general_ = std::make_unique<GeneralPathway>(protocol_);
        break;
      case PathwayChoice::translation_invariant:
        ti_ = std::make_unique<TranslationInvariantPathway>(protocol_);
        break;
      case PathwayChoice::partial:
        partial_ = std::make_unique<PartialTiPathway>(
            protocol_, protocol_.pre.uniform() ? BrokenSide::post : BrokenSide::pre);
        break;
      case PathwayChoice::momentum_resolved:
        for (double ky : momentum_grid(protocol_.pre.length_y))
          blocks_.emplace_back(protocol_, ky);
        break;
      case PathwayChoice::automatic:
        break;
    }
    for (int b = 0; b < block_count(); ++b)
      initial_.push_back(snapshot(b, 0.0));
  }

  PathwayChoice choice() const { return choice_; }
  int block_count() const { return blocks_.empty() ? 1 : static_cast<int>(blocks_.size()); }
  int block_omega() const { return protocol_.subsystem.length; }
  int total_omega() const { return protocol_.subsystem_site_count(); }

  std::optional<double> block_ky(int b) const {
    if (blocks_.empty()) return std::nullopt;
    return momentum_grid(protocol_.pre.length_y)[b];
  }

  EntanglementSnapshot snapshot(int b, double t) const {
    CorrelationSnapshot c;
    if (general_)
      c = general_->at(t);
    else if (ti_)
      c = ti_->at(t);
    else if (partial_)
      c = partial_->at(t);
    else
      c = blocks_[b].at(t);
    return entanglement_spectrum(c, eps_deg_);
  }

  const EntanglementSnapshot& initial(int b) const { return initial_[b]; }
  const QuenchProtocol& protocol() const { return protocol_; }

 private:
  QuenchProtocol protocol_;
  double eps_deg_;
  PathwayChoice choice_ = PathwayChoice::automatic;
  std::unique_ptr<GeneralPathway> general_;
  std::unique_ptr<TranslationInvariantPathway> ti_;
  std::unique_ptr<PartialTiPathway> partial_;
  std::vector<MomentumResolvedPathway> blocks_;
  std::vector<EntanglementSnapshot> initial_;
};

namespace detail {

struct BlockPoint {
  EchoPoint echo;
  double entropy = 0.0, variance = 0.0;
  RateSample sample;
  std::vector<double> xs;
};

inline BlockPoint evaluate_block(const SeriesEngine& engine, int b, double t,
                                 const DetectorOptions& detector) {
  BlockPoint out;
  const EntanglementSnapshot snap = engine.snapshot(b, t);
  out.echo = entanglement_echo(engine.initial(b), snap);
  out.echo.rate = echo_rate(out.echo.magnitude, engine.block_omega(), detector.gamma_cap);
  out.entropy = entanglement_entropy(snap);
  out.variance = particle_number_variance(snap);
  out.sample = rate_sample_from_snapshot(snap, out.echo.rate, detector.crossing_tol);
  out.xs.assign(snap.xs.data(), snap.xs.data() + snap.xs.size());
  return out;
}

}  // namespace detail

inline SeriesBundle run_series(const QuenchProtocol& protocol, const RunOptions& options) {
  if (options.time_steps < 2) fail(Errc::config_invalid, "time_steps must be at least 2");
  if (options.time_max <= 0.0) fail(Errc::config_invalid, "time_max must be positive");
  SeriesEngine engine(protocol, options.pathway, options.detector.eps_deg);

  SeriesBundle bundle;
  bundle.protocol = protocol;
  const int npoints = options.time_steps + 1;
  const double dt = options.time_max / options.time_steps;
  bundle.grid.resize(npoints);
  for (int i = 0; i < npoints; ++i) bundle.grid[i] = i * dt;

  const bool want_loschmidt =
      options.loschmidt == Toggle::on ||
      (options.loschmidt == Toggle::automatic && protocol.temperature == 0.0);
  if (want_loschmidt && protocol.temperature != 0.0)
    fail(Errc::config_invalid, "the Loschmidt echo is defined for temperature = 0 only");
  std::unique_ptr<LoschmidtProduct> loschmidt_prod;
  std::unique_ptr<LoschmidtGeneral> loschmidt_gen;
  if (want_loschmidt) {
    if (protocol.pre.uniform() && protocol.post.uniform())
      loschmidt_prod = std::make_unique<LoschmidtProduct>(protocol);
    else
      loschmidt_gen = std::make_unique<LoschmidtGeneral>(protocol);
  }

  const int nblocks = engine.block_count();
  bundle.records.resize(npoints);
  std::vector<std::vector<RateSample>> block_samples(nblocks,
                                                     std::vector<RateSample>(npoints));
  bundle.spectrum.resize(static_cast<size_t>(npoints) * nblocks * 2 *
                         protocol.subsystem.length);

  parallel_for(npoints, options.threads, [&](int i) {
    const double t = bundle.grid[i];
    SeriesRecord rec;
    rec.t = t;
    double log_mag = 0.0, phase = 0.0;
    bool zero = false;
    const size_t block_rows = 2 * protocol.subsystem.length;
    for (int b = 0; b < nblocks; ++b) {
      const detail::BlockPoint point = detail::evaluate_block(engine, b, t, options.detector);
      block_samples[b][i] = point.sample;
      rec.entropy += point.entropy;
      rec.variance += point.variance;
      rec.occupied_count += point.sample.occupied_count;
      rec.degenerate = rec.degenerate || point.sample.degenerate;
      if (point.echo.magnitude == 0.0)
        zero = true;
      else {
        log_mag += std::log(point.echo.magnitude);
        phase += std::arg(point.echo.echo);
      }
      for (size_t r = 0; r < block_rows; ++r) {
        SpectrumRow& row = bundle.spectrum[(static_cast<size_t>(i) * nblocks + b) * block_rows + r];
        row.t = t;
        row.index = static_cast<int>(r);
        row.xi = point.xs[r];
        row.ky = engine.block_ky(b);
      }
    }
    rec.echo_zero = zero;
    rec.echo_mag = zero ? 0.0 : std::exp(log_mag);
    rec.echo_phase = zero ? 0.0 : std::remainder(phase, 2.0 * M_PI);
    rec.gamma = zero ? options.detector.gamma_cap
                     : std::min(options.detector.gamma_cap, -2.0 * log_mag / engine.total_omega());
    if (loschmidt_prod) rec.lambda_rate = loschmidt_prod->at(t, options.detector.gamma_cap).rate;
    if (loschmidt_gen) rec.lambda_rate = loschmidt_gen->at(t, options.detector.gamma_cap).rate;
    bundle.records[i] = rec;
  });

  if (options.detect) {
    for (int b = 0; b < nblocks; ++b) {
      const RateProbe probe = [&engine, b, &options](double t) {
        return detail::evaluate_block(engine, b, t, options.detector).sample;
      };
      std::vector<TransitionEvent> events =
          detect_transitions(block_samples[b], probe, options.detector);
      for (TransitionEvent& ev : events) {
        ev.ky = engine.block_ky(b);
        bundle.transitions.push_back(std::move(ev));
      }
    }
  }
  return bundle;
}

}  // namespace qecho
