#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "entanglement.hpp"

namespace qecho {

struct DetectorOptions {
  double delta_jump = 0.01;   // minimum persistent rate discontinuity
  double delta_slope = 0.5;   // minimum one-sided slope difference for a cusp
  int refine_depth = 12;      // interval halvings when locating t_c
  double eps_deg = kDefaultEpsDeg;
  double gamma_cap = kDefaultGammaCap;
  double crossing_tol = 1e-3; // |xi - 1/2| counted as a Fermi-level crossing at t_c
};

// What the detector needs to know about the rate series at one time.
struct RateSample {
  double time = 0.0;
  double gamma = 0.0;
  int occupied_count = 0;
  bool degenerate = false;
  double min_half_gap = 1.0;           // min_i |xi_i - 1/2|
  std::vector<int> near_half_indices;  // indices within crossing_tol of 1/2
};

using RateProbe = std::function<RateSample(double)>;

inline RateSample rate_sample_from_snapshot(const EntanglementSnapshot& snap, double gamma,
                                            double crossing_tol) {
  RateSample s;
  s.time = snap.time;
  s.gamma = gamma;
  s.occupied_count = snap.occupied_count;
  s.degenerate = snap.degenerate;
  for (int i = 0; i < snap.xs.size(); ++i) {
    const double gap = std::abs(snap.xs[i] - 0.5);
    s.min_half_gap = std::min(s.min_half_gap, gap);
    if (gap < crossing_tol) s.near_half_indices.push_back(i);
  }
  return s;
}

namespace detail {

// Degenerate samples are excluded as refinement endpoints. A transient
// degeneracy (a level passing through the Fermi level) occupies a street
// whose width scales as sqrt(eps / curvature), so the escape step grows
// geometrically; a persistent degeneracy (a pinned boundary pair) cannot be
// escaped, and the original sample is returned so the probed curve stays on
// one branch.
inline RateSample probe_clean(const RateProbe& probe, double t) {
  RateSample s = probe(t);
  if (!s.degenerate) return s;
  double step = 1e-7 * (1.0 + std::abs(t));
  for (int tries = 0; tries < 5; ++tries, step *= 8.0) {
    for (double dir : {1.0, -1.0}) {
      RateSample shifted = probe(t + dir * step);
      if (!shifted.degenerate) return shifted;
    }
  }
  return s;
}

struct Window {
  int lo = 0, hi = 0;  // grid indices, feature inside (times[lo], times[hi])
  bool count_change = false;
};

inline std::vector<Window> candidate_windows(const std::vector<RateSample>& series,
                                             const DetectorOptions& opt, double dt) {
  const int n = static_cast<int>(series.size());
  std::vector<bool> mark(n, false);
  std::vector<bool> counts(n, false);
  for (int i = 0; i + 1 < n; ++i) {
    if (series[i].occupied_count != series[i + 1].occupied_count) {
      mark[i] = true;
      counts[i] = true;
    }
    if (std::abs(series[i + 1].gamma - series[i].gamma) > opt.delta_jump) mark[i] = true;
    if (series[i].degenerate != series[i + 1].degenerate) mark[i] = true;
  }
  for (int i = 1; i + 1 < n; ++i) {
    const double kink = std::abs(series[i + 1].gamma - 2.0 * series[i].gamma + series[i - 1].gamma);
    if (kink > 0.25 * opt.delta_slope * dt) {
      mark[i - 1] = true;
      mark[i] = true;
    }
  }
  std::vector<Window> out;
  int i = 0;
  while (i + 1 < n) {
    if (!mark[i]) {
      ++i;
      continue;
    }
    Window w;
    w.lo = i;
    while (i + 1 < n && mark[i]) {
      w.count_change = w.count_change || counts[i];
      ++i;
    }
    w.hi = i;
    out.push_back(w);
  }
  return out;
}

// Ternary-minimize f over [a, b] down to width `tol`.
template <typename F>
inline double minimize(F&& f, double a, double b, double tol) {
  while (b - a > tol) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (f(m1) <= f(m2))
      b = m2;
    else
      a = m1;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Scans a uniformly gridded rate series for non-smooth points, refines each
// candidate to ~dt/2^refine_depth, then classifies:
//   Jump -- the left/right rate difference survives two grid halvings above
//           delta_jump and the occupied set changes across t_c (a level sits
//           at the Fermi level at t_c, or the occupied count differs);
//   Cusp -- the difference shrinks away (rate continuous) but the one-sided
//           slopes differ by more than delta_slope.
// Candidates matching neither signature but still discontinuity-like are
// reported as unclassifiable rather than guessed.
inline std::vector<TransitionEvent> detect_transitions(const std::vector<RateSample>& series,
                                                       const RateProbe& probe,
                                                       const DetectorOptions& opt = {}) {
  std::vector<TransitionEvent> events;
  if (series.size() < 3) return events;
  const double dt = series[1].time - series[0].time;
  const double t_first = series.front().time;
  const double t_last = series.back().time;

  for (const detail::Window& w : detail::candidate_windows(series, opt, dt)) {
    const double width_tol = dt / std::pow(2.0, opt.refine_depth);

    // locate the candidate t_c values for this window
    std::vector<double> candidates;
    double gap_lo = 1.0;
    for (int i = w.lo; i <= w.hi; ++i) gap_lo = std::min(gap_lo, series[i].min_half_gap);
    // levels pinned at the Fermi level over the whole window floor the gap
    // without localizing anything; the dip must undercut the endpoints
    const double gap_end = std::min(series[w.lo].min_half_gap, series[w.hi].min_half_gap);
    if (w.count_change) {
      // per-block 2d jumps: the count itself flips at t_c
      double lo = series[w.lo].time;
      double hi = series[w.hi].time;
      int left_count = series[w.lo].occupied_count;
      while (hi - lo > width_tol) {
        const double mid = 0.5 * (lo + hi);
        if (detail::probe_clean(probe, mid).occupied_count == left_count)
          lo = mid;
        else
          hi = mid;
      }
      candidates.push_back(0.5 * (lo + hi));
    } else if (gap_lo < 0.2 && gap_lo < 0.5 * gap_end && gap_end > opt.crossing_tol) {
      // a level approaches the Fermi level: its closest approach is t_c
      candidates.push_back(detail::minimize([&](double t) { return probe(t).min_half_gap; },
                                            series[w.lo].time, series[w.hi].time, width_tol));
    } else {
      // one seed per interior curvature peak: a wide window can hold several
      // kinks next to smoothly curved stretches, and at window scale the
      // smooth curvature (~h^2) outweighs a kink (~h), so each peak is
      // refined within one grid cell of its seed where the kink dominates
      std::vector<int> seeds;
      for (int i = std::max(w.lo, 1); i <= std::min(w.hi, static_cast<int>(series.size()) - 2);
           ++i) {
        const auto d2 = [&](int j) {
          return std::abs(series[j + 1].gamma - 2.0 * series[j].gamma + series[j - 1].gamma);
        };
        if (d2(i) <= 0.25 * opt.delta_slope * dt) continue;
        if (i > std::max(w.lo, 1) && d2(i - 1) > d2(i)) continue;
        if (i < std::min(w.hi, static_cast<int>(series.size()) - 2) && d2(i + 1) >= d2(i))
          continue;
        seeds.push_back(i);
      }
      if (seeds.empty()) seeds.push_back((w.lo + w.hi) / 2);
      for (int seed : seeds) {
        // subdivide toward the stronger curvature
        double lo = std::max(t_first, series[seed].time - dt);
        double hi = std::min(t_last, series[seed].time + dt);
        while (hi - lo > width_tol) {
          const double m = 0.5 * (lo + hi);
          const double q1 = 0.5 * (lo + m);
          const double q3 = 0.5 * (m + hi);
          const double g_lo = detail::probe_clean(probe, lo).gamma;
          const double g_m = detail::probe_clean(probe, m).gamma;
          const double g_hi = detail::probe_clean(probe, hi).gamma;
          const double g_q1 = detail::probe_clean(probe, q1).gamma;
          const double g_q3 = detail::probe_clean(probe, q3).gamma;
          if (std::abs(g_lo - 2.0 * g_q1 + g_m) >= std::abs(g_m - 2.0 * g_q3 + g_hi))
            hi = m;
          else
            lo = m;
        }
        candidates.push_back(0.5 * (lo + hi));
      }
    }

    for (const double t_seed : candidates) {
      double t_c = t_seed;
      // classify with symmetric stencils at h, h/2, h/4
      const double h0 = dt;
      if (t_c - h0 < t_first || t_c + h0 > t_last) continue;
      double delta[3], sl[3], sr[3], g_c;
      RateSample left_near, right_near;
      const auto stencil = [&](double tc) {
        g_c = detail::probe_clean(probe, tc).gamma;
        for (int level = 0; level < 3; ++level) {
          const double h = h0 / std::pow(2.0, level);
          const RateSample l = detail::probe_clean(probe, tc - h);
          const RateSample r = detail::probe_clean(probe, tc + h);
          delta[level] = std::abs(r.gamma - l.gamma);
          sl[level] = l.gamma;
          sr[level] = r.gamma;
          if (level == 2) {
            left_near = l;
            right_near = r;
          }
        }
      };
      stencil(t_c);
      // re-center a kink on the intersection of its one-sided flank tangents;
      // the subdivision above can land off-apex, which skews both the slopes
      // and the jump-persistence test
      if (!w.count_change) {
        for (int pass = 0; pass < 3; ++pass) {
          const double tan_left = (sl[2] - sl[0]) / (h0 - h0 / 4.0);
          const double tan_right = (sr[0] - sr[2]) / (h0 - h0 / 4.0);
          if (std::abs(tan_right - tan_left) < 0.5 * opt.delta_slope) break;
          const double g_l = sl[2] + tan_left * (h0 / 4.0);
          const double g_r = sr[2] - tan_right * (h0 / 4.0);
          const double shift = (g_l - g_r) / (tan_right - tan_left);
          if (std::abs(shift) < width_tol) break;
          if (std::abs(shift) >= h0 || t_c + shift - h0 < t_first || t_c + shift + h0 > t_last)
            break;
          t_c += shift;
          stencil(t_c);
        }
      }
      const bool persistent = delta[0] > opt.delta_jump && delta[1] > opt.delta_jump &&
                              delta[2] > opt.delta_jump && delta[2] > 0.45 * delta[0];
      // one-sided secants through the centre at the finest stencil level: a
      // smoothly curved stretch leaves them nearly equal, while a slope break
      // keeps their difference at the full kink angle
      const double slope_left = (g_c - sl[2]) / (h0 / 4.0);
      const double slope_right = (sr[2] - g_c) / (h0 / 4.0);

      const RateSample at_tc = probe(t_c);
      const bool count_change = left_near.occupied_count != right_near.occupied_count;
      const bool crossing = at_tc.min_half_gap < opt.crossing_tol;

      TransitionEvent ev;
      ev.t_c = t_c;
      ev.gamma_left = sl[2];
      ev.gamma_right = sr[2];
      ev.slope_left = slope_left;
      ev.slope_right = slope_right;
      ev.occupied_change = count_change || crossing;
      ev.crossing_indices = at_tc.near_half_indices;
      if (persistent && ev.occupied_change)
        ev.kind = TransitionKind::jump;
      else if (!persistent && std::abs(slope_right - slope_left) > opt.delta_slope)
        ev.kind = TransitionKind::cusp;
      else if (persistent)
        ev.kind = TransitionKind::unclassifiable;
      else
        continue;  // smooth after refinement: not a transition
      events.push_back(std::move(ev));
    }
  }
  // neighbouring seeds can converge onto the same kink
  std::sort(events.begin(), events.end(),
            [](const TransitionEvent& a, const TransitionEvent& b) { return a.t_c < b.t_c; });
  std::vector<TransitionEvent> unique;
  for (TransitionEvent& ev : events) {
    if (!unique.empty() && ev.t_c - unique.back().t_c < 0.5 * dt) {
      if (std::abs(ev.slope_right - ev.slope_left) >
          std::abs(unique.back().slope_right - unique.back().slope_left))
        unique.back() = std::move(ev);
      continue;
    }
    unique.push_back(std::move(ev));
  }
  return unique;
}

}  // namespace qecho
