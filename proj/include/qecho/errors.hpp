#pragma once

#include <stdexcept>
#include <string>

namespace qecho {

enum class Errc {
  gap_closed,
  gauge_singular,
  degenerate_fermi_level,
  bad_profile,
  dimension_mismatch,
  not_hermitian,
  eigenvalue_out_of_range,
  sector_too_large,
  config_invalid,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::gap_closed: return "gap_closed";
    case Errc::gauge_singular: return "gauge_singular";
    case Errc::degenerate_fermi_level: return "degenerate_fermi_level";
    case Errc::bad_profile: return "bad_profile";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::not_hermitian: return "not_hermitian";
    case Errc::eigenvalue_out_of_range: return "eigenvalue_out_of_range";
    case Errc::sector_too_large: return "sector_too_large";
    case Errc::config_invalid: return "config_invalid";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace qecho
