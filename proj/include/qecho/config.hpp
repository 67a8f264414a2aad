#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "series.hpp"

namespace qecho {

namespace detail {

inline std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] inline void config_fail(const std::string& where, const std::string& message) {
  fail(Errc::config_invalid, where + ": " + message);
}

inline double parse_double(const std::string& where, const std::string& text) {
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    config_fail(where, "expected a number, got '" + text + "'");
  }
  if (used != text.size()) config_fail(where, "expected a number, got '" + text + "'");
  return value;
}

inline long long parse_int(const std::string& where, const std::string& text) {
  size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    config_fail(where, "expected an integer, got '" + text + "'");
  }
  if (used != text.size()) config_fail(where, "expected an integer, got '" + text + "'");
  return value;
}

inline bool parse_bool(const std::string& where, const std::string& text) {
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  config_fail(where, "expected a boolean, got '" + text + "'");
}

inline std::vector<double> parse_double_list(const std::string& where, const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) config_fail(where, "empty entry in list");
    values.push_back(parse_double(where, item));
  }
  if (values.empty()) config_fail(where, "expected a comma-separated list of numbers");
  return values;
}

// Uniform doubles in [0,1) with an explicitly pinned mapping so that seeded
// profiles are identical across standard libraries.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double next(double lo, double hi) { return lo + (hi - lo) * next(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

// One band structure side of the quench: exactly one way of fixing the mass.
struct BandConfig {
  std::optional<double> mass;
  std::optional<std::vector<double>> profile;
  std::optional<double> random_min;
  std::optional<double> random_max;

  void check(const std::string& section) const {
    const int ways = (mass ? 1 : 0) + (profile ? 1 : 0) + (random_min || random_max ? 1 : 0);
    if (ways != 1)
      detail::config_fail(section, "set exactly one of mass, profile, or random_min/random_max");
    if ((random_min.has_value()) != (random_max.has_value()))
      detail::config_fail(section, "random_min and random_max must be given together");
    if (random_min && *random_min >= *random_max)
      detail::config_fail(section, "random_min must be below random_max");
  }
  bool random() const { return random_min.has_value(); }
};

struct Config {
  std::string model_kind = "chain";
  int length = 0;
  int length_y = 0;
  BandConfig pre, post;
  double temperature = 0.0;
  int subsystem_start = 0;
  int subsystem_length = 0;
  RunOptions options;
  std::optional<Gauge> gauge;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

namespace detail {

inline void apply_key(Config& config, const std::string& section, const std::string& key,
                      const std::string& value) {
  const std::string where = section + "." + key;
  auto band = [&]() -> BandConfig& { return section == "pre" ? config.pre : config.post; };
  if (section == "model") {
    if (key == "kind") {
      if (value != "chain" && value != "chern")
        config_fail(where, "expected 'chain' or 'chern'");
      config.model_kind = value;
    } else if (key == "length") {
      config.length = static_cast<int>(parse_int(where, value));
    } else if (key == "length_y") {
      config.length_y = static_cast<int>(parse_int(where, value));
    } else {
      config_fail(where, "unknown key");
    }
  } else if (section == "pre" || section == "post") {
    if (key == "mass")
      band().mass = parse_double(where, value);
    else if (key == "profile")
      band().profile = parse_double_list(where, value);
    else if (key == "random_min")
      band().random_min = parse_double(where, value);
    else if (key == "random_max")
      band().random_max = parse_double(where, value);
    else
      config_fail(where, "unknown key");
  } else if (section == "quench") {
    if (key == "temperature")
      config.temperature = parse_double(where, value);
    else if (key == "subsystem_start")
      config.subsystem_start = static_cast<int>(parse_int(where, value));
    else if (key == "subsystem_length")
      config.subsystem_length = static_cast<int>(parse_int(where, value));
    else
      config_fail(where, "unknown key");
  } else if (section == "grid") {
    if (key == "time_max")
      config.options.time_max = parse_double(where, value);
    else if (key == "time_steps")
      config.options.time_steps = static_cast<int>(parse_int(where, value));
    else
      config_fail(where, "unknown key");
  } else if (section == "detector") {
    DetectorOptions& det = config.options.detector;
    if (key == "delta_jump")
      det.delta_jump = parse_double(where, value);
    else if (key == "delta_slope")
      det.delta_slope = parse_double(where, value);
    else if (key == "refine_depth")
      det.refine_depth = static_cast<int>(parse_int(where, value));
    else if (key == "eps_deg")
      det.eps_deg = parse_double(where, value);
    else if (key == "crossing_tol")
      det.crossing_tol = parse_double(where, value);
    else if (key == "gamma_cap")
      det.gamma_cap = parse_double(where, value);
    else
      config_fail(where, "unknown key");
  } else if (section == "run") {
    if (key == "pathway") {
      if (value == "auto")
        config.options.pathway = PathwayChoice::automatic;
      else if (value == "general")
        config.options.pathway = PathwayChoice::general;
      else if (value == "ti")
        config.options.pathway = PathwayChoice::translation_invariant;
      else if (value == "partial")
        config.options.pathway = PathwayChoice::partial;
      else if (value == "momentum")
        config.options.pathway = PathwayChoice::momentum_resolved;
      else
        config_fail(where, "expected auto, general, ti, partial, or momentum");
    } else if (key == "gauge") {
      if (value == "auto")
        config.gauge = std::nullopt;
      else if (value == "A")
        config.gauge = Gauge::A;
      else if (value == "B")
        config.gauge = Gauge::B;
      else
        config_fail(where, "expected auto, A, or B");
    } else if (key == "loschmidt") {
      if (value == "auto")
        config.options.loschmidt = Toggle::automatic;
      else
        config.options.loschmidt = parse_bool(where, value) ? Toggle::on : Toggle::off;
    } else if (key == "detect") {
      config.options.detect = parse_bool(where, value);
    } else if (key == "threads") {
      config.options.threads = static_cast<int>(parse_int(where, value));
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_int(where, value));
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else {
      config_fail(where, "unknown key");
    }
  } else {
    config_fail(section, "unknown section");
  }
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  Config config;
  std::stringstream stream(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        detail::config_fail("line " + std::to_string(lineno), "malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      detail::config_fail("line " + std::to_string(lineno), "expected key = value");
    if (section.empty())
      detail::config_fail("line " + std::to_string(lineno), "key outside of any section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      detail::config_fail("line " + std::to_string(lineno), "expected key = value");
    detail::apply_key(config, section, key, value);
  }
  config.pre.check("pre");
  config.post.check("post");
  return config;
}

inline Config load_config(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) fail(Errc::config_invalid, "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << stream.rdbuf();
  return parse_config(buffer.str());
}

// Random profiles draw all pre-quench masses first, then all post-quench
// masses, from one generator seeded by [run] seed (or --seed).
inline QuenchProtocol build_protocol(const Config& config) {
  if (config.length <= 1) detail::config_fail("model.length", "length must exceed 1");
  const bool chern = config.model_kind == "chern";
  detail::SeededUniform rng(config.seed);
  auto build_side = [&](const BandConfig& band, const std::string& section) -> ModelSpec {
    if (chern && !band.mass)
      detail::config_fail(section, "the 2d model supports a uniform mass only");
    if (chern) {
      const int ly = config.length_y > 0 ? config.length_y : config.length;
      return ModelSpec::chern(config.length, ly, *band.mass);
    }
    if (band.mass) return ModelSpec::chain(config.length, *band.mass);
    std::vector<double> profile;
    if (band.profile) {
      profile = *band.profile;
      if (static_cast<int>(profile.size()) != config.length)
        detail::config_fail(section + ".profile", "profile length must match model.length");
    } else {
      profile.resize(config.length);
      for (double& m : profile) m = rng.next(*band.random_min, *band.random_max);
    }
    return ModelSpec::profile(profile);
  };
  QuenchProtocol protocol;
  protocol.pre = build_side(config.pre, "pre");
  protocol.post = build_side(config.post, "post");
  protocol.temperature = config.temperature;
  protocol.subsystem = SubsystemRange{config.subsystem_start, config.subsystem_length};
  protocol.gauge = config.gauge;
  protocol.validate();
  return protocol;
}

}  // namespace qecho
