#pragma once
// Core value types shared by every module: token ids, sequences, base-2 log
// probabilities and the error taxonomy used by the CLI exit codes.

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace domcert {

using TokenId = std::uint32_t;

// A response or prompt. BOS is never stored; for responses the length is N_y.
using Sequence = std::vector<TokenId>;

// Caller supplied something malformed (unknown token, bad hyperparameter).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested enumeration or search exceeds the configured guard.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Log probability in bits. -inf is a legal value and propagates through sums.
struct LogProb {
  double bits = 0.0;

  static constexpr LogProb certain() { return {0.0}; }
  static constexpr LogProb impossible() {
    return {-std::numeric_limits<double>::infinity()};
  }
  static LogProb from_prob(double p) { return {std::log2(p)}; }

  double prob() const { return std::exp2(bits); }
  bool is_impossible() const { return std::isinf(bits) && bits < 0; }

  LogProb& operator+=(LogProb other) {
    bits += other.bits;
    return *this;
  }
  friend LogProb operator+(LogProb a, LogProb b) { return {a.bits + b.bits}; }
  friend double operator-(LogProb a, LogProb b) { return a.bits - b.bits; }
  friend auto operator<=>(LogProb, LogProb) = default;
};

inline constexpr double kLog10Of2 = 0.30102999566398119521;

inline double bits_to_log10(double bits) { return bits * kLog10Of2; }

}  // namespace domcert
