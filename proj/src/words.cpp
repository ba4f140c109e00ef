#include "exlab/words.hpp"

#include <cmath>
#include <numbers>

namespace exlab {

IntMatrix IntMatrix::operator*(const IntMatrix& o) const {
  return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
}

bool IntMatrix::operator==(const IntMatrix& o) const {
  return a == o.a && b == o.b && c == o.c && d == o.d;
}

UnimodularMap IntMatrix::to_real() const { return {a.get_d(), b.get_d(), c.get_d(), d.get_d()}; }

namespace {

IntMatrix generator_power(Generator g, const mpz_class& k) {
  if (g == Generator::kT) return IntMatrix::T_power(k);
  // S has order 4.
  mpz_class r;
  mpz_fdiv_r_ui(r.get_mpz_t(), k.get_mpz_t(), 4);
  IntMatrix out;
  for (unsigned long i = 0; i < r.get_ui(); ++i) out = out * IntMatrix::S();
  return out;
}

void append(WordDecomposition& w, Generator g, const mpz_class& power) {
  if (power == 0) return;
  if (!w.runs.empty() && w.runs.back().generator == g) {
    auto& p = w.runs.back().power;
    p += power;
    if (g == Generator::kS) {
      // S^4 = 1: keep the exponent in {-1, 0, 1, 2}.
      mpz_fdiv_r_ui(p.get_mpz_t(), p.get_mpz_t(), 4);
      if (p == 3) p = -1;
    }
    if (p == 0) w.runs.pop_back();
  } else {
    w.runs.push_back({g, power});
  }
}

}  // namespace

IntMatrix WordDecomposition::evaluate() const {
  IntMatrix out;
  for (const auto& run : runs) out = out * generator_power(run.generator, run.power);
  return out;
}

std::string WordDecomposition::spelled() const {
  std::string s;
  for (const auto& run : runs) {
    const bool inv = run.power < 0;
    const char letter = run.generator == Generator::kT ? (inv ? 't' : 'T') : (inv ? 's' : 'S');
    mpz_class n = abs(run.power);
    for (; n > 0; --n) {
      if (!s.empty()) s += ' ';
      s += letter;
    }
  }
  return s;
}

WordDecomposition word_decompose(const IntMatrix& m) {
  if (m.det() != 1) throw CFError("word_decompose needs an integer matrix of determinant 1");
  WordDecomposition w;
  IntMatrix cur = m;
  mpz_class k;
  // cur = T^k S cur' with cur' = S^{-1} T^{-k} cur, and |c'| = |a - k c| < |c|.
  while (cur.c != 0) {
    mpz_tdiv_q(k.get_mpz_t(), cur.a.get_mpz_t(), cur.c.get_mpz_t());
    append(w, Generator::kT, k);
    append(w, Generator::kS, mpz_class(1));
    const mpz_class a1 = cur.a - k * cur.c;
    const mpz_class b1 = cur.b - k * cur.d;
    cur = IntMatrix{cur.c, cur.d, -a1, -b1};
  }
  // Upper triangular with a = d = ±1.
  if (cur.a == 1) {
    append(w, Generator::kT, cur.b);
  } else {
    // -T^{-b} = S^2 T^{-b}
    append(w, Generator::kS, mpz_class(2));
    append(w, Generator::kT, -cur.b);
  }
  w.length = 0;
  for (const auto& run : w.runs) w.length += abs(run.power);
  return w;
}

namespace {

TranslationLength from_log_trace(double log_tr) {
  // 2 acosh(t/2) = 2 (log t - log 2 + log(1 + sqrt(1 - 4/t^2)))
  const double inv_t2 = std::exp(-2.0 * log_tr);
  TranslationLength out;
  out.approx = 2.0 * log_tr;
  out.exact = 2.0 * (log_tr - std::numbers::ln2 + std::log1p(std::sqrt(1.0 - 4.0 * inv_t2)));
  return out;
}

}  // namespace

TranslationLength translation_length(const UnimodularMap& m) {
  const double tr = std::fabs(m.a + m.d);
  if (!(tr > 2.0)) throw GeometryError("translation length needs |trace| > 2");
  if (tr > 1e6) return from_log_trace(std::log(tr));
  return {2.0 * std::acosh(0.5 * tr), 2.0 * std::log(tr)};
}

TranslationLength translation_length(const IntMatrix& m) {
  const mpz_class tr = abs(m.trace());
  if (tr <= 2) throw GeometryError("translation length needs |trace| > 2");
  if (mpz_sizeinbase(tr.get_mpz_t(), 2) < 50) {
    const double t = tr.get_d();
    return {2.0 * std::acosh(0.5 * t), 2.0 * std::log(t)};
  }
  return from_log_trace(log_abs(tr));
}

IntMatrix convergent_matrix(const mpz_class& p_prev, const mpz_class& q_prev, const mpz_class& p,
                            const mpz_class& q) {
  IntMatrix m{p_prev, p, q_prev, q};
  if (m.det() == -1) m = IntMatrix{p, p_prev, q, q_prev};
  return m;
}

}  // namespace exlab
