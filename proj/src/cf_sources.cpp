#include <cmath>
#include <limits>
#include <string>

#include "exlab/continued_fraction.hpp"

namespace exlab {
namespace {

constexpr std::uint64_t kBigMarker = std::numeric_limits<std::uint64_t>::max();

bool fits_u64(const mpz_class& v) {
  return mpz_sgn(v.get_mpz_t()) >= 0 && mpz_sizeinbase(v.get_mpz_t(), 2) <= 64;
}

std::uint64_t to_u64(const mpz_class& v) {
  // mpz_get_ui is only 64 bits wide on LP64, which is what we build for.
  static_assert(sizeof(unsigned long) == 8);
  return mpz_get_ui(v.get_mpz_t());
}

}  // namespace

BudgetExhausted::BudgetExhausted(std::size_t produced, std::uint64_t budget)
    : CFError("bit budget of " + std::to_string(budget) + " exhausted after " +
              std::to_string(produced) + " digits"),
      produced_(produced),
      budget_(budget) {}

InsufficientCoefficients::InsufficientCoefficients(std::size_t available, std::size_t requested)
    : CFError("stream has " + std::to_string(available) + " digits, " + std::to_string(requested) +
              " requested"),
      available_(available),
      requested_(requested) {}

std::uint64_t default_bit_budget(std::size_t digits) {
  return static_cast<std::uint64_t>(std::ceil(3.6 * static_cast<double>(digits))) + 256;
}

BitSource::BitSource(std::uint64_t seed, std::uint64_t budget, std::vector<std::uint8_t> prefix)
    : engine_(seed), budget_(budget), prefix_(std::move(prefix)) {}

std::optional<int> BitSource::next() {
  if (history_.size() >= budget_) return std::nullopt;
  int bit;
  if (history_.size() < prefix_.size()) {
    bit = prefix_[history_.size()] ? 1 : 0;
  } else {
    if (word_bits_ == 0) {
      word_ = engine_();
      word_bits_ = 64;
    }
    --word_bits_;
    bit = static_cast<int>((word_ >> word_bits_) & 1u);
  }
  history_.push_back(static_cast<std::uint8_t>(bit));
  return bit;
}

// Complete quotient z = (A s + B) / (C s + D) as a function of the unread
// tail s in (0, 1) of the dyadic real.
struct CFStream::DyadicState {
  explicit DyadicState(BitSource b) : bits(std::move(b)), A(0), B(1), C(1), D(0) {}
  BitSource bits;
  mpz_class A, B, C, D;
  mpz_class q0, r0, q1, r1, num1, den1;  // scratch

  // Floor of z common to every s in (0, 1), if there is one.
  std::optional<mpz_class> determined_floor() {
    const int sd = mpz_sgn(D.get_mpz_t());
    den1 = C + D;
    const int sd1 = mpz_sgn(den1.get_mpz_t());
    if (sd == 0 || sd1 == 0 || sd != sd1) return std::nullopt;  // pole in [0, 1]
    num1 = A + B;

    // Cheap floating screen before any big division.
    const double v0 = ratio_to_double(B, D);
    const double v1 = ratio_to_double(num1, den1);
    if (std::isfinite(v0) && std::isfinite(v1) && std::fabs(v0) < 1e15 && std::fabs(v1) < 1e15) {
      const double f0 = std::floor(v0), f1 = std::floor(v1);
      const double gap = std::fabs(f0 - f1);
      if (gap >= 2.0) return std::nullopt;
      if (gap == 1.0) {
        const double m = std::max(f0, f1);
        const double slack = 1e-9 * (1.0 + std::fabs(m));
        if (std::fabs(v0 - m) > slack && std::fabs(v1 - m) > slack) return std::nullopt;
      }
    }

    mpz_fdiv_qr(q0.get_mpz_t(), r0.get_mpz_t(), B.get_mpz_t(), D.get_mpz_t());
    mpz_fdiv_qr(q1.get_mpz_t(), r1.get_mpz_t(), num1.get_mpz_t(), den1.get_mpz_t());
    if (q0 == q1) return q0;
    // Open interval whose upper end is exactly the next integer.
    if (q1 == q0 + 1 && r1 == 0) return q0;
    if (q0 == q1 + 1 && r0 == 0) return q1;
    return std::nullopt;
  }

  void emit(const mpz_class& k) {
    // z -> 1 / (z - k)
    mpz_class nc = A - k * C;
    mpz_class nd = B - k * D;
    A.swap(C);
    B.swap(D);
    C.swap(nc);
    D.swap(nd);
  }

  void read(int bit) {
    // s = (bit + s') / 2
    mpz_mul_2exp(B.get_mpz_t(), B.get_mpz_t(), 1);
    mpz_mul_2exp(D.get_mpz_t(), D.get_mpz_t(), 1);
    if (bit) {
      B += A;
      D += C;
    }
    while (mpz_even_p(A.get_mpz_t()) && mpz_even_p(B.get_mpz_t()) && mpz_even_p(C.get_mpz_t()) &&
           mpz_even_p(D.get_mpz_t()) && (A != 0 || B != 0)) {
      mpz_fdiv_q_2exp(A.get_mpz_t(), A.get_mpz_t(), 1);
      mpz_fdiv_q_2exp(B.get_mpz_t(), B.get_mpz_t(), 1);
      mpz_fdiv_q_2exp(C.get_mpz_t(), C.get_mpz_t(), 1);
      mpz_fdiv_q_2exp(D.get_mpz_t(), D.get_mpz_t(), 1);
    }
  }
};

// Markov chain on theta = q_{n-1}/q_n: P(a_{n+1} >= j | past) = (1+theta)/(j+theta).
struct CFStream::ChainState {
  explicit ChainState(std::uint64_t seed) : engine(seed) {}
  std::mt19937_64 engine;
  long double theta = 0.0L;
};

CFStream::CFStream(CFStream&&) noexcept = default;
CFStream& CFStream::operator=(CFStream&&) noexcept = default;
CFStream::~CFStream() = default;

CFStream CFStream::from_rational(const mpz_class& p, const mpz_class& q) {
  if (q == 0) throw CFError("rational with zero denominator");
  mpz_class num = p, den = q;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  CFStream s;
  s.source_ = CFSource::kRational;
  mpz_class a0;
  mpz_fdiv_qr(a0.get_mpz_t(), num.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (!mpz_fits_slong_p(a0.get_mpz_t())) throw CFError("integer part out of range");
  s.integer_part_ = mpz_get_si(a0.get_mpz_t());
  // Fractional part num/den in [0, 1): Euclid on (den, num).
  mpz_class a, r;
  while (num != 0) {
    mpz_fdiv_qr(a.get_mpz_t(), r.get_mpz_t(), den.get_mpz_t(), num.get_mpz_t());
    s.push(a);
    den.swap(num);
    num.swap(r);
  }
  return s;
}

CFStream CFStream::from_digits(const std::vector<std::uint64_t>& digits, long long integer_part) {
  CFStream s;
  s.source_ = CFSource::kExplicit;
  s.integer_part_ = integer_part;
  for (auto d : digits) {
    if (d == 0) throw CFError("partial quotients must be positive");
    s.push(d);
  }
  return s;
}

CFStream CFStream::from_bits(BitSource bits, long long integer_part) {
  CFStream s;
  s.source_ = CFSource::kDyadic;
  s.integer_part_ = integer_part;
  s.dyadic_ = std::make_unique<DyadicState>(std::move(bits));
  return s;
}

CFStream CFStream::from_conditional_law(std::uint64_t seed) {
  CFStream s;
  s.source_ = CFSource::kConditionalLaw;
  s.chain_ = std::make_unique<ChainState>(seed);
  return s;
}

void CFStream::push(const mpz_class& digit) {
  if (fits_u64(digit) && to_u64(digit) != kBigMarker) {
    small_.push_back(to_u64(digit));
  } else {
    big_.emplace(small_.size(), digit);
    small_.push_back(kBigMarker);
  }
}

void CFStream::push(std::uint64_t digit) {
  if (digit == kBigMarker) {
    push(mpz_class(std::to_string(digit)));
  } else {
    small_.push_back(digit);
  }
}

bool CFStream::extend_one() {
  switch (source_) {
    case CFSource::kRational:
    case CFSource::kExplicit:
      return false;
    case CFSource::kDyadic: {
      auto& st = *dyadic_;
      for (;;) {
        if (auto k = st.determined_floor()) {
          st.emit(*k);
          push(*k);
          return true;
        }
        const auto bit = st.bits.next();
        if (!bit) throw BudgetExhausted(size(), st.bits.budget());
        st.read(*bit);
      }
    }
    case CFSource::kConditionalLaw: {
      auto& st = *chain_;
      const std::uint64_t x = st.engine();
      const long double u = (static_cast<long double>(x) + 0.5L) * 0x1p-64L;
      const long double v = std::floor((1.0L + st.theta) / u - st.theta);
      if (v < 0x1p63L) {
        const auto a = static_cast<std::uint64_t>(v);
        push(a);
        st.theta = 1.0L / (static_cast<long double>(a) + st.theta);
      } else {
        mpz_class a;
        mpz_set_d(a.get_mpz_t(), static_cast<double>(v));
        push(a);
        st.theta = 1.0L / (v + st.theta);
      }
      return true;
    }
  }
  return false;
}

bool CFStream::try_ensure(std::size_t n) {
  while (size() < n) {
    if (!extend_one()) return false;
  }
  return true;
}

void CFStream::ensure(std::size_t n) {
  if (!try_ensure(n)) throw InsufficientCoefficients(size(), n);
}

mpz_class CFStream::digit(std::size_t i) const {
  const std::uint64_t v = small_.at(i - 1);
  if (v == kBigMarker) return big_.at(i - 1);
  mpz_class out;
  mpz_set_ui(out.get_mpz_t(), v);
  return out;
}

double CFStream::digit_double(std::size_t i) const {
  const std::uint64_t v = small_.at(i - 1);
  if (v == kBigMarker) return big_.at(i - 1).get_d();
  return static_cast<double>(v);
}

bool CFStream::digit_is_small(std::size_t i) const { return small_.at(i - 1) != kBigMarker; }

std::uint64_t CFStream::digit_u64(std::size_t i) const {
  const std::uint64_t v = small_.at(i - 1);
  if (v == kBigMarker) throw CFError("digit does not fit in 64 bits");
  return v;
}

const BitSource* CFStream::bits() const { return dyadic_ ? &dyadic_->bits : nullptr; }

CFStream cf_from_bits(std::uint64_t seed, std::size_t n, std::uint64_t budget) {
  if (budget < 1) throw CFError("bit budget must be at least 1");
  CFStream s = CFStream::from_bits(BitSource(seed, budget));
  s.ensure(n);
  return s;
}

CFStream cf_from_rational(const mpz_class& p, const mpz_class& q) { return CFStream::from_rational(p, q); }

}  // namespace exlab
