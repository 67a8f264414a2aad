#include <catch2/catch_amalgamated.hpp>

#include "qecho/series.hpp"
#include "qecho/transitions.hpp"

using namespace qecho;

namespace {

std::vector<RateSample> sample_grid(const RateProbe& probe, double t_max, int steps) {
  std::vector<RateSample> series(steps + 1);
  for (int i = 0; i <= steps; ++i) series[i] = probe(t_max * i / steps);
  return series;
}

RateSample make_sample(double t, double gamma, int count, double min_gap) {
  RateSample s;
  s.time = t;
  s.gamma = gamma;
  s.occupied_count = count;
  s.min_half_gap = min_gap;
  if (min_gap < 1e-3) s.near_half_indices = {2, 3};
  return s;
}

}  // namespace

TEST_CASE("step_with_count_change_is_a_jump") {
  const double t_c = 1.987;
  const RateProbe probe = [&](double t) {
    return make_sample(t, t < t_c ? 0.2 : 0.5, t < t_c ? 3 : 4, std::min(std::abs(t - t_c), 1.0));
  };
  const std::vector<TransitionEvent> events =
      detect_transitions(sample_grid(probe, 4.0, 80), probe);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == TransitionKind::jump);
  CHECK(std::abs(events[0].t_c - t_c) < 1e-4);
  CHECK(events[0].occupied_change);
  CHECK(std::abs(std::abs(events[0].gamma_right - events[0].gamma_left) - 0.3) < 1e-6);
}

TEST_CASE("step_with_fermi_level_crossing_is_a_jump") {
  // the occupied count stays fixed (levels cross in pairs) but a level sits
  // at the Fermi level at t_c
  const double t_c = 2.3141;
  const RateProbe probe = [&](double t) {
    return make_sample(t, t < t_c ? 0.1 : 0.45, 4, std::min(std::abs(t - t_c), 1.0));
  };
  const std::vector<TransitionEvent> events =
      detect_transitions(sample_grid(probe, 4.0, 80), probe);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == TransitionKind::jump);
  CHECK(std::abs(events[0].t_c - t_c) < 1e-4);
  CHECK(events[0].occupied_change);
  CHECK(!events[0].crossing_indices.empty());
}

TEST_CASE("kink_without_discontinuity_is_a_cusp") {
  const double t_c = 1.6283;
  const RateProbe probe = [&](double t) { return make_sample(t, 0.3 + std::abs(t - t_c), 4, 1.0); };
  const std::vector<TransitionEvent> events =
      detect_transitions(sample_grid(probe, 4.0, 80), probe);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == TransitionKind::cusp);
  CHECK(std::abs(events[0].t_c - t_c) < 2e-3);
  CHECK(std::abs(events[0].slope_left + 1.0) < 0.05);
  CHECK(std::abs(events[0].slope_right - 1.0) < 0.05);
}

TEST_CASE("step_without_occupied_evidence_is_unclassifiable") {
  const double t_c = 2.0;
  const RateProbe probe = [&](double t) { return make_sample(t, t < t_c ? 0.2 : 0.5, 4, 0.4); };
  const std::vector<TransitionEvent> events =
      detect_transitions(sample_grid(probe, 4.0, 80), probe);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == TransitionKind::unclassifiable);
  CHECK(!events[0].occupied_change);
}

TEST_CASE("smooth_series_produce_no_events") {
  const RateProbe probe = [&](double t) {
    return make_sample(t, 0.3 + 0.002 * std::sin(t), 4, 1.0);
  };
  CHECK(detect_transitions(sample_grid(probe, 4.0, 80), probe).empty());
}

TEST_CASE("shallow_steps_below_the_threshold_are_ignored") {
  const double t_c = 2.0;
  const RateProbe probe = [&](double t) { return make_sample(t, t < t_c ? 0.3 : 0.305, 4, 1.0); };
  CHECK(detect_transitions(sample_grid(probe, 4.0, 80), probe).empty());
}

TEST_CASE("quench_across_the_critical_point_yields_jumps") {
  // L = 12 is too small here: the level crossings are avoided and the jumps
  // round off into cusp-like features. L = 24 shows true crossings.
  QuenchProtocol p;
  p.pre = ModelSpec::chain(24, 1.5);
  p.post = ModelSpec::chain(24, 0.3);
  p.subsystem = {0, 8};
  RunOptions options;
  options.time_max = 12.0;
  options.time_steps = 240;
  const SeriesBundle bundle = run_series(p, options);
  REQUIRE(!bundle.transitions.empty());
  int jumps = 0;
  for (const TransitionEvent& ev : bundle.transitions)
    if (ev.kind == TransitionKind::jump) {
      ++jumps;
      CHECK(ev.occupied_change);
    }
  CHECK(jumps >= 1);
}

TEST_CASE("unquenched_series_has_no_transitions") {
  QuenchProtocol p;
  p.pre = ModelSpec::chain(12, 1.5);
  p.post = ModelSpec::chain(12, 1.5);
  p.subsystem = {0, 4};
  RunOptions options;
  options.time_max = 8.0;
  options.time_steps = 160;
  const SeriesBundle bundle = run_series(p, options);
  CHECK(bundle.transitions.empty());
  for (const SeriesRecord& rec : bundle.records) {
    CHECK(std::abs(rec.echo_mag - 1.0) < 1e-9);
    CHECK(std::abs(rec.gamma) < 1e-9);
  }
}
