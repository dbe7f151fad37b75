#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "probhar/error.hpp"

namespace probhar {

/// Absolute slack on every "sum of probabilities <= 1" check.
inline constexpr double kMassTolerance = 1e-9;

/// Instances are fixed 1/3 s slices; three per second.
inline constexpr double kInstancesPerSecond = 3.0;

inline bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

inline void require_probability(double p, std::string_view what) {
  if (!is_probability(p)) {
    throw Error(ErrorKind::constraint_violation,
                std::string(what) + " probability " + std::to_string(p) + " outside [0,1]");
  }
}

struct InstanceId {
  std::int64_t value = 0;
  friend auto operator<=>(const InstanceId&, const InstanceId&) = default;
};

/// Subject digit plus run digit. Runs 1-3 and 9 (drill) are training runs,
/// 4 and 5 are the runs whose activities are recognized.
class SerialCode {
 public:
  SerialCode() = default;
  SerialCode(int subject, int run) : subject_(subject), run_(run) {
    if (subject < 1 || subject > 9) {
      throw Error(ErrorKind::malformed_code, "serial subject " + std::to_string(subject));
    }
    if (!(run >= 1 && run <= 5) && run != 9) {
      throw Error(ErrorKind::malformed_code, "serial run " + std::to_string(run));
    }
  }

  static SerialCode from_int(std::int64_t code) {
    if (code < 10 || code > 99) {
      throw Error(ErrorKind::malformed_code, "serial " + std::to_string(code));
    }
    return SerialCode(static_cast<int>(code / 10), static_cast<int>(code % 10));
  }

  int subject() const { return subject_; }
  int run() const { return run_; }
  int value() const { return subject_ * 10 + run_; }
  bool is_training() const { return run_ <= 3 || run_ == 9; }
  bool is_test() const { return run_ == 4 || run_ == 5; }
  std::string render() const { return std::to_string(value()); }

  friend auto operator<=>(const SerialCode&, const SerialCode&) = default;

 private:
  int subject_ = 1;
  int run_ = 1;
};

enum class Posture : std::uint8_t { null = 0, stand = 1, walk = 2, sit = 3, lie = 4 };

enum class Property : std::uint8_t { lap, bho };

inline std::string_view to_string(Property p) { return p == Property::lap ? "LAP" : "BHO"; }

inline Property parse_property(std::string_view s) {
  if (s == "LAP" || s == "lap") return Property::lap;
  if (s == "BHO" || s == "bho") return Property::bho;
  throw Error(ErrorKind::unknown_property, std::string(s));
}

/// Location (8x8 grid, 0 = unknown), facing sextant, posture.
///
/// Rendered as four digits: x, y, sextant (0-5, or 6 when unknown), posture.
/// The code with unknown location, unknown angle and null posture is the
/// null code and renders "0000"; an angle is not observable without a
/// location or posture, so that combination always normalizes to unknown.
class LapCode {
 public:
  static constexpr int kUnknownAngleDigit = 6;

  LapCode() = default;
  LapCode(int x, int y, std::optional<int> sextant, Posture posture)
      : x_(static_cast<std::uint8_t>(x)), y_(static_cast<std::uint8_t>(y)), posture_(posture) {
    if (x < 0 || x > 8 || y < 0 || y > 8) {
      throw Error(ErrorKind::malformed_code, "LAP location out of range");
    }
    if (sextant && (*sextant < 0 || *sextant > 5)) {
      throw Error(ErrorKind::malformed_code, "LAP sextant out of range");
    }
    if (static_cast<int>(posture) > 4) {
      throw Error(ErrorKind::malformed_code, "LAP posture out of range");
    }
    if (sextant && !(x == 0 && y == 0 && posture == Posture::null)) {
      sextant_ = static_cast<std::uint8_t>(*sextant);
    }
  }

  static LapCode null() { return {}; }

  int x() const { return x_; }
  int y() const { return y_; }
  std::optional<int> sextant() const {
    if (sextant_ == kUnknownAngleDigit) return std::nullopt;
    return sextant_;
  }
  Posture posture() const { return posture_; }
  bool is_null() const { return x_ == 0 && y_ == 0 && posture_ == Posture::null; }

  friend bool operator==(const LapCode&, const LapCode&) = default;

 private:
  std::uint8_t x_ = 0;
  std::uint8_t y_ = 0;
  std::uint8_t sextant_ = kUnknownAngleDigit;
  Posture posture_ = Posture::null;

  friend std::string encode_lap(const LapCode&);
};

inline std::string encode_lap(const LapCode& code) {
  if (code.is_null()) return "0000";
  std::string out(4, '0');
  out[0] = static_cast<char>('0' + code.x_);
  out[1] = static_cast<char>('0' + code.y_);
  out[2] = static_cast<char>('0' + code.sextant_);
  out[3] = static_cast<char>('0' + static_cast<int>(code.posture_));
  return out;
}

namespace detail {

inline int digit_at(std::string_view s, std::size_t i) {
  const char c = s[i];
  if (c < '0' || c > '9') {
    throw Error(ErrorKind::malformed_code, "non-digit in code '" + std::string(s) + "'");
  }
  return c - '0';
}

inline void require_four_digits(std::string_view s) {
  if (s.size() != 4) {
    throw Error(ErrorKind::malformed_code, "code '" + std::string(s) + "' is not four digits");
  }
}

}  // namespace detail

inline LapCode decode_lap(std::string_view s) {
  detail::require_four_digits(s);
  const int x = detail::digit_at(s, 0);
  const int y = detail::digit_at(s, 1);
  const int angle = detail::digit_at(s, 2);
  const int posture = detail::digit_at(s, 3);
  if (x > 8 || y > 8 || angle > LapCode::kUnknownAngleDigit || posture > 4) {
    throw Error(ErrorKind::malformed_code, "LAP digit out of range in '" + std::string(s) + "'");
  }
  if (s == "0000") return LapCode::null();
  const bool null_frame = x == 0 && y == 0 && posture == 0;
  if (null_frame && angle != LapCode::kUnknownAngleDigit) {
    // "00s0" with a known sextant is not a canonical render.
    throw Error(ErrorKind::malformed_code, "angle without location or posture in '" + std::string(s) + "'");
  }
  std::optional<int> sextant;
  if (angle != LapCode::kUnknownAngleDigit) sextant = angle;
  if (null_frame) return LapCode::null();
  return LapCode(x, y, sextant, static_cast<Posture>(posture));
}

inline constexpr int kObjectCount = 24;  // 23 objects plus idle (0)

struct BhoCode {
  int right = 0;
  int left = 0;

  BhoCode() = default;
  BhoCode(int right_object, int left_object) : right(right_object), left(left_object) {
    if (right < 0 || right >= kObjectCount || left < 0 || left >= kObjectCount) {
      throw Error(ErrorKind::malformed_code, "BHO object id out of range");
    }
  }

  bool is_idle() const { return right == 0 && left == 0; }
  friend bool operator==(const BhoCode&, const BhoCode&) = default;
};

inline std::string encode_bho(const BhoCode& code) {
  const int v = code.right * 100 + code.left;
  std::string out(4, '0');
  out[0] = static_cast<char>('0' + v / 1000);
  out[1] = static_cast<char>('0' + (v / 100) % 10);
  out[2] = static_cast<char>('0' + (v / 10) % 10);
  out[3] = static_cast<char>('0' + v % 10);
  return out;
}

inline BhoCode decode_bho(std::string_view s) {
  detail::require_four_digits(s);
  const int right = detail::digit_at(s, 0) * 10 + detail::digit_at(s, 1);
  const int left = detail::digit_at(s, 2) * 10 + detail::digit_at(s, 3);
  if (right >= kObjectCount || left >= kObjectCount) {
    throw Error(ErrorKind::malformed_code, "BHO object id out of range in '" + std::string(s) + "'");
  }
  return BhoCode(right, left);
}

/// Checks that `code` is a canonical render for `property`.
inline void validate_code(Property property, std::string_view code) {
  if (property == Property::lap) {
    if (encode_lap(decode_lap(code)) != code) {
      throw Error(ErrorKind::malformed_code, "non-canonical LAP code '" + std::string(code) + "'");
    }
  } else {
    decode_bho(code);
  }
}

enum class Activity : std::uint16_t {
  null = 0,
  relax = 101,
  coffee_time = 102,
  early_morning = 103,
  cleanup = 104,
  sandwich_time = 105,
};

inline constexpr std::size_t kActivityCount = 5;

inline constexpr std::array<Activity, kActivityCount> kActivities = {
    Activity::relax, Activity::coffee_time, Activity::early_morning, Activity::cleanup,
    Activity::sandwich_time};

inline int code_of(Activity a) { return static_cast<int>(a); }

/// Position of a non-null activity in the 101..105 vectors.
inline std::size_t index_of(Activity a) {
  const int c = code_of(a);
  if (c < 101 || c > 105) throw Error(ErrorKind::malformed_code, "activity " + std::to_string(c));
  return static_cast<std::size_t>(c - 101);
}

inline Activity activity_from_code(std::int64_t code) {
  if (code == 0) return Activity::null;
  if (code >= 101 && code <= 105) return static_cast<Activity>(code);
  throw Error(ErrorKind::malformed_code, "activity code " + std::to_string(code));
}

inline std::string_view activity_name(Activity a) {
  switch (a) {
    case Activity::null: return "null";
    case Activity::relax: return "relax";
    case Activity::coffee_time: return "coffee time";
    case Activity::early_morning: return "early morning";
    case Activity::cleanup: return "cleanup";
    case Activity::sandwich_time: return "sandwich time";
  }
  return "unknown";
}

/// Both hands act independently, so the joint interaction probability is
/// the product of the per-hand probabilities.
inline double joint_bho_probability(double p_right, double p_left) {
  require_probability(p_right, "right hand");
  require_probability(p_left, "left hand");
  return p_right * p_left;
}

/// A domain value with its probability.
template <typename V>
struct Weighted {
  V value{};
  double p = 0.0;
  friend bool operator==(const Weighted&, const Weighted&) = default;
};

/// A candidate code render (LAP or BHO) with its probability.
using Candidate = Weighted<std::string>;

struct PruneOptions {
  double floor = 0.01;  // entries with p <= floor are dropped
  std::size_t cap = 3;
};

/// Candidates of one property for one instance, most probable first.
struct CandidateSet {
  InstanceId instance;
  Property property = Property::lap;
  std::vector<Candidate> candidates;

  double mass() const {
    double m = 0.0;
    for (const auto& c : candidates) m += c.p;
    return m;
  }
  double open_world() const { return std::max(0.0, 1.0 - mass()); }
  bool empty() const { return candidates.empty(); }
  const Candidate* top() const { return candidates.empty() ? nullptr : &candidates.front(); }
};

/// Descending probability, ascending code render on ties.
inline bool candidate_order(const Candidate& a, const Candidate& b) {
  if (a.p != b.p) return a.p > b.p;
  return a.value < b.value;
}

inline std::vector<Candidate> prune_candidates(std::vector<Candidate> raw,
                                               const PruneOptions& opts = {}) {
  double mass = 0.0;
  std::unordered_set<std::string> seen;
  for (const auto& c : raw) {
    require_probability(c.p, "candidate '" + c.value + "'");
    if (!seen.insert(c.value).second) {
      throw Error(ErrorKind::constraint_violation, "duplicate candidate code '" + c.value + "'");
    }
    mass += c.p;
  }
  if (mass > 1.0 + kMassTolerance) {
    throw Error(ErrorKind::constraint_violation,
                "candidate mass " + std::to_string(mass) + " exceeds 1");
  }
  std::erase_if(raw, [&](const Candidate& c) { return c.p <= opts.floor; });
  std::sort(raw.begin(), raw.end(), candidate_order);
  if (raw.size() > opts.cap) raw.resize(opts.cap);
  return raw;
}

inline CandidateSet prune_candidates(InstanceId instance, Property property,
                                     std::vector<Candidate> raw, const PruneOptions& opts = {}) {
  return CandidateSet{instance, property, prune_candidates(std::move(raw), opts)};
}

}  // namespace probhar
