#pragma once

#include "genestim/core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace genestim {

// upper-only: {theta : s_bar >= -z}, bounded above.
// lower-only: {theta : s_bar <= z}, bounded below.
// two-sided: the intersection.
enum class IntervalSide { LowerOnly, UpperOnly, TwoSided };

inline const char* to_string(IntervalSide side) {
  switch (side) {
    case IntervalSide::LowerOnly: return "lower-only";
    case IntervalSide::UpperOnly: return "upper-only";
    case IntervalSide::TwoSided: return "two-sided";
  }
  return "unknown";
}

inline IntervalSide parse_side(const std::string& s) {
  if (s == "lower-only" || s == "lower") return IntervalSide::LowerOnly;
  if (s == "upper-only" || s == "upper") return IntervalSide::UpperOnly;
  if (s == "two-sided" || s == "two") return IntervalSide::TwoSided;
  fail(ErrorKind::InvalidArgument, "unknown interval side '" + s + "'");
}

struct IntervalResult {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool closed_lower = false;
  bool closed_upper = false;
  double z = 0.0;
  IntervalSide side = IntervalSide::TwoSided;
  // Endpoint sits on the parameter-domain boundary (0, 1, +-inf, ...) because
  // the defining inequality never binds on that side.
  bool lower_at_boundary = false;
  bool upper_at_boundary = false;
  bool whole_domain = false;  // no sign change found; returned the whole domain
  bool empty = false;
  std::string boundary_note;

  bool contains(double x) const {
    if (empty) return false;
    bool lo_ok = closed_lower ? x >= lower : x > lower;
    bool hi_ok = closed_upper ? x <= upper : x < upper;
    return lo_ok && hi_ok;
  }

  void add_note(const std::string& note) {
    if (!boundary_note.empty()) boundary_note += "; ";
    boundary_note += note;
  }
};

}  // namespace genestim
