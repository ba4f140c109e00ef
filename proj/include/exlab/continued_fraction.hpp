// Regular continued fractions with exact integer arithmetic (GMP).
//
// A CFStream holds the partial quotients a_1, a_2, ... of a real number
// a_0 + [0; a_1, a_2, ...]. Streams are either finite (an exact rational or
// an explicit list) or lazily extended from a random source:
//
//  * kDyadic: a uniform random real given by a stream of fair bits. Digits
//    are extracted exactly by tracking the Mobius map from the unread bits to
//    the current complete quotient; a digit is emitted only once every real
//    consistent with the bits read so far agrees on it.
//  * kConditionalLaw: the digits of a uniform random real drawn one at a time
//    from their exact conditional law given the past, which depends on the
//    past only through q_{n-1}/q_n. Much faster for very long streams; the
//    real itself is never pinned down.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace exlab {

class CFError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A random source ran out of bits; `produced` digits were emitted before.
class BudgetExhausted : public CFError {
 public:
  BudgetExhausted(std::size_t produced, std::uint64_t budget);
  std::size_t produced() const { return produced_; }
  std::uint64_t budget() const { return budget_; }

 private:
  std::size_t produced_;
  std::uint64_t budget_;
};

class InsufficientCoefficients : public CFError {
 public:
  InsufficientCoefficients(std::size_t available, std::size_t requested);
  std::size_t available() const { return available_; }
  std::size_t requested() const { return requested_; }

 private:
  std::size_t available_;
  std::size_t requested_;
};

/// Bits per digit needed for a uniform random real is 2 log2(e) times the
/// Levy constant, about 3.42; the default budget leaves ~5% headroom.
std::uint64_t default_bit_budget(std::size_t digits);

/// Fair bits from a seeded generator, optionally preceded by fixed bits.
class BitSource {
 public:
  BitSource(std::uint64_t seed, std::uint64_t budget, std::vector<std::uint8_t> prefix = {});

  /// Next bit, or nullopt once the budget is spent.
  std::optional<int> next();

  std::uint64_t consumed() const { return history_.size(); }
  std::uint64_t budget() const { return budget_; }
  /// Every bit handed out so far, most significant first.
  const std::vector<std::uint8_t>& history() const { return history_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t budget_;
  std::vector<std::uint8_t> prefix_;
  std::vector<std::uint8_t> history_;
  std::uint64_t word_ = 0;
  int word_bits_ = 0;
};

enum class CFSource { kRational, kExplicit, kDyadic, kConditionalLaw };

class CFStream {
 public:
  CFStream(CFStream&&) noexcept;
  CFStream& operator=(CFStream&&) noexcept;
  ~CFStream();

  /// Finite canonical expansion of p/q (last digit >= 2 when length > 1).
  static CFStream from_rational(const mpz_class& p, const mpz_class& q);
  /// Finite stream with the given digits (>= 1), no canonical-form check.
  static CFStream from_digits(const std::vector<std::uint64_t>& digits, long long integer_part = 0);
  static CFStream from_bits(BitSource bits, long long integer_part = 0);
  static CFStream from_conditional_law(std::uint64_t seed);

  CFSource source() const { return source_; }
  bool finite() const { return source_ == CFSource::kRational || source_ == CFSource::kExplicit; }
  long long integer_part() const { return integer_part_; }

  /// Number of digits materialized so far.
  std::size_t size() const { return small_.size(); }

  /// Materialize at least n digits. Throws BudgetExhausted for dyadic
  /// streams that run out of bits and InsufficientCoefficients for finite
  /// streams shorter than n.
  void ensure(std::size_t n);

  /// Same as ensure but returns false instead of throwing for finite streams.
  bool try_ensure(std::size_t n);

  /// Digit a_i, 1-based; must already be materialized.
  mpz_class digit(std::size_t i) const;
  double digit_double(std::size_t i) const;
  /// True when a_i fits in 64 bits; then digit_u64 is exact.
  bool digit_is_small(std::size_t i) const;
  std::uint64_t digit_u64(std::size_t i) const;

  /// Underlying bit source for dyadic streams, else nullptr.
  const BitSource* bits() const;

 private:
  CFStream() = default;
  void push(const mpz_class& digit);
  void push(std::uint64_t digit);
  bool extend_one();

  struct DyadicState;
  struct ChainState;

  CFSource source_ = CFSource::kExplicit;
  long long integer_part_ = 0;
  std::vector<std::uint64_t> small_;                 // kBigMarker means "see big_"
  std::unordered_map<std::size_t, mpz_class> big_;   // 0-based index -> digit
  std::unique_ptr<DyadicState> dyadic_;
  std::unique_ptr<ChainState> chain_;
};

/// First n digits of a uniform dyadic random real in (0, 1).
CFStream cf_from_bits(std::uint64_t seed, std::size_t n, std::uint64_t budget);
CFStream cf_from_rational(const mpz_class& p, const mpz_class& q);

struct Convergent {
  mpz_class p;
  mpz_class q;
  std::size_t n = 0;
};

/// Incremental p_n/q_n with p_{-1}/q_{-1} = 1/0 and p_0/q_0 = a_0/1.
class ConvergentIterator {
 public:
  explicit ConvergentIterator(long long integer_part = 0);
  /// Advance to index n+1 using digit a_{n+1}.
  void advance(const mpz_class& digit);
  void advance(std::uint64_t digit);

  std::size_t index() const { return n_; }
  const mpz_class& p() const { return p_; }
  const mpz_class& q() const { return q_; }
  const mpz_class& p_prev() const { return p_prev_; }
  const mpz_class& q_prev() const { return q_prev_; }

 private:
  std::size_t n_ = 0;
  mpz_class p_, q_, p_prev_, q_prev_;
};

/// Convergents 1..n of the stream (materializing as needed).
std::vector<Convergent> convergents(CFStream& cf, std::size_t n);

/// p_n / q_n exactly.
mpq_class cf_value(CFStream& cf, std::size_t n);

struct TrimmedStat {
  std::size_t n = 0;
  mpz_class sum;
  mpz_class a_max;
  std::size_t argmax = 0;  // 1-based index of the first maximal digit
  double ratio = 0.0;      // (sum - a_max) / (n log n)
};

/// Sum of a_1..a_n with the largest digit removed once. Needs n >= 2.
TrimmedStat trimmed_sum(CFStream& cf, std::size_t n);

/// log(q_n) / n.
double levy_ratio(CFStream& cf, std::size_t n);

/// #{ i <= n : a_i >= phi(i) }.
std::size_t threshold_census(CFStream& cf, std::size_t n, const std::function<double(std::size_t)>& phi);

/// Natural log of |x| for x != 0, accurate for arbitrarily large x.
double log_abs(const mpz_class& x);
/// Nearest double to x / y (may overflow to inf / underflow to 0 only
/// when the true ratio does).
double ratio_to_double(const mpz_class& x, const mpz_class& y);

}  // namespace exlab
