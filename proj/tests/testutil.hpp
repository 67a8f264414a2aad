#pragma once

#include <cstdint>
#include <random>

#include "qecho/correlation.hpp"

namespace testutil {

// Deterministic uniform numbers with a pinned bit mapping, so the randomized
// batteries reproduce exactly across standard libraries.
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }
};

// A 1d chain mass away from the gap closings at |m| = 1.
inline double safe_chain_mass(Rng& rng) {
  for (;;) {
    const double m = rng.uniform(-2.2, 2.2);
    if (std::abs(std::abs(m) - 1.0) > 0.05 && std::abs(m) > 0.03) return m;
  }
}

// A 2d mass away from the closings at m = 0, +-2.
inline double safe_chern_mass(Rng& rng) {
  for (;;) {
    const double m = rng.uniform(-2.4, 2.4);
    if (std::abs(m) > 0.08 && std::abs(std::abs(m) - 2.0) > 0.08) return m;
  }
}

inline qecho::QuenchProtocol random_protocol(Rng& rng, bool allow_2d = true,
                                             bool allow_thermal = true,
                                             bool allow_profile = true) {
  qecho::QuenchProtocol protocol;
  const int shape = rng.integer(0, allow_2d ? 3 : 2);
  if (shape == 3) {
    const int lx = rng.integer(4, 6);
    const int ly = rng.integer(4, 6);
    protocol.pre = qecho::ModelSpec::chern(lx, ly, safe_chern_mass(rng));
    protocol.post = qecho::ModelSpec::chern(lx, ly, safe_chern_mass(rng));
  } else {
    const int l = rng.integer(6, 12);
    auto side = [&](bool broken) {
      if (!broken || !allow_profile) return qecho::ModelSpec::chain(l, safe_chain_mass(rng));
      std::vector<double> masses(l);
      for (double& m : masses) m = rng.uniform(0.2, 2.0);
      return qecho::ModelSpec::profile(masses);
    };
    // shape: 0 = uniform/uniform, 1 = one side broken, 2 = both broken
    bool pre_broken = shape == 2, post_broken = shape == 2;
    if (shape == 1) {
      pre_broken = rng.integer(0, 1) == 0;
      post_broken = !pre_broken;
    }
    protocol.pre = side(pre_broken);
    protocol.post = side(post_broken);
  }
  const int l = protocol.pre.length;
  const int la = rng.integer(2, l - 2);
  const int start = rng.integer(0, l - la - 1);
  protocol.subsystem = {start, la};
  protocol.temperature = (allow_thermal && rng.integer(0, 2) == 0) ? rng.uniform(0.1, 0.8) : 0.0;
  return protocol;
}

}  // namespace testutil
