#include "exlab/continued_fraction.hpp"

#include <cmath>
#include <numbers>

namespace exlab {

double log_abs(const mpz_class& x) {
  if (x == 0) throw CFError("log of zero");
  long exp = 0;
  const double m = mpz_get_d_2exp(&exp, x.get_mpz_t());
  return std::log(std::fabs(m)) + static_cast<double>(exp) * std::numbers::ln2;
}

double ratio_to_double(const mpz_class& x, const mpz_class& y) {
  if (y == 0) return x == 0 ? std::nan("") : (x > 0 ? HUGE_VAL : -HUGE_VAL);
  if (x == 0) return 0.0;
  long ex = 0, ey = 0;
  const double mx = mpz_get_d_2exp(&ex, x.get_mpz_t());
  const double my = mpz_get_d_2exp(&ey, y.get_mpz_t());
  const long shift = ex - ey;
  if (shift > 2000) return (mx / my) > 0 ? HUGE_VAL : -HUGE_VAL;
  if (shift < -2000) return 0.0;
  return std::ldexp(mx / my, static_cast<int>(shift));
}

ConvergentIterator::ConvergentIterator(long long integer_part)
    : p_(static_cast<long>(integer_part)), q_(1), p_prev_(1), q_prev_(0) {}

void ConvergentIterator::advance(const mpz_class& digit) {
  // (p, p_prev) <- (a p + p_prev, p)
  mpz_addmul(p_prev_.get_mpz_t(), digit.get_mpz_t(), p_.get_mpz_t());
  mpz_addmul(q_prev_.get_mpz_t(), digit.get_mpz_t(), q_.get_mpz_t());
  p_.swap(p_prev_);
  q_.swap(q_prev_);
  ++n_;
}

void ConvergentIterator::advance(std::uint64_t digit) {
  mpz_addmul_ui(p_prev_.get_mpz_t(), p_.get_mpz_t(), digit);
  mpz_addmul_ui(q_prev_.get_mpz_t(), q_.get_mpz_t(), digit);
  p_.swap(p_prev_);
  q_.swap(q_prev_);
  ++n_;
}

namespace {

void advance_with(ConvergentIterator& it, const CFStream& cf, std::size_t i) {
  if (cf.digit_is_small(i)) {
    it.advance(cf.digit_u64(i));
  } else {
    it.advance(cf.digit(i));
  }
}

}  // namespace

std::vector<Convergent> convergents(CFStream& cf, std::size_t n) {
  cf.ensure(n);
  std::vector<Convergent> out;
  out.reserve(n);
  ConvergentIterator it(cf.integer_part());
  for (std::size_t i = 1; i <= n; ++i) {
    advance_with(it, cf, i);
    out.push_back({it.p(), it.q(), i});
  }
  return out;
}

mpq_class cf_value(CFStream& cf, std::size_t n) {
  if (n == 0) throw CFError("cf_value needs n >= 1");
  cf.ensure(n);
  ConvergentIterator it(cf.integer_part());
  for (std::size_t i = 1; i <= n; ++i) advance_with(it, cf, i);
  mpq_class v(it.p(), it.q());
  v.canonicalize();
  return v;
}

TrimmedStat trimmed_sum(CFStream& cf, std::size_t n) {
  if (n < 2) throw CFError("trimmed_sum needs n >= 2");
  cf.ensure(n);
  TrimmedStat st;
  st.n = n;
  unsigned __int128 small_sum = 0;
  std::uint64_t small_max = 0;
  std::size_t small_arg = 0;
  mpz_class big_max = 0;
  std::size_t big_arg = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (cf.digit_is_small(i)) {
      const std::uint64_t a = cf.digit_u64(i);
      small_sum += a;
      if (a > small_max) {
        small_max = a;
        small_arg = i;
      }
    } else {
      const mpz_class a = cf.digit(i);
      st.sum += a;
      if (a > big_max) {
        big_max = a;
        big_arg = i;
      }
    }
  }
  mpz_class lo, hi;
  mpz_set_ui(lo.get_mpz_t(), static_cast<std::uint64_t>(small_sum));
  mpz_set_ui(hi.get_mpz_t(), static_cast<std::uint64_t>(small_sum >> 64));
  mpz_mul_2exp(hi.get_mpz_t(), hi.get_mpz_t(), 64);
  st.sum += hi + lo;
  if (big_arg != 0) {
    st.a_max = big_max;
    st.argmax = big_arg;
  } else {
    mpz_set_ui(st.a_max.get_mpz_t(), small_max);
    st.argmax = small_arg;
  }
  const mpz_class trimmed = st.sum - st.a_max;
  const double nd = static_cast<double>(n);
  st.ratio = trimmed.get_d() / (nd * std::log(nd));
  return st;
}

double levy_ratio(CFStream& cf, std::size_t n) {
  if (n == 0) throw CFError("levy_ratio needs n >= 1");
  cf.ensure(n);
  ConvergentIterator it(cf.integer_part());
  for (std::size_t i = 1; i <= n; ++i) advance_with(it, cf, i);
  return log_abs(it.q()) / static_cast<double>(n);
}

std::size_t threshold_census(CFStream& cf, std::size_t n, const std::function<double(std::size_t)>& phi) {
  cf.ensure(n);
  std::size_t count = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double threshold = phi(i);
    bool hit;
    if (cf.digit_is_small(i)) {
      hit = static_cast<long double>(cf.digit_u64(i)) >= static_cast<long double>(threshold);
    } else {
      hit = mpz_cmp_d(cf.digit(i).get_mpz_t(), threshold) >= 0;
    }
    if (hit) ++count;
  }
  return count;
}

}  // namespace exlab
