// SL(2,Z) words in the generators S = [[0,-1],[1,0]], T = [[1,1],[0,1]] and
// hyperbolic translation lengths.
#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

#include "exlab/continued_fraction.hpp"
#include "exlab/hyperbolic.hpp"

namespace exlab {

struct IntMatrix {
  mpz_class a{1}, b{0}, c{0}, d{1};

  static IntMatrix identity() { return {}; }
  static IntMatrix S() { return {0, -1, 1, 0}; }
  static IntMatrix T() { return {1, 1, 0, 1}; }
  /// T^k.
  static IntMatrix T_power(const mpz_class& k) { return {1, k, 0, 1}; }

  mpz_class det() const { return a * d - b * c; }
  mpz_class trace() const { return a + d; }
  IntMatrix operator*(const IntMatrix& o) const;
  bool operator==(const IntMatrix& o) const;
  /// Real map with the same entries (rounded to double).
  UnimodularMap to_real() const;
};

enum class Generator { kT, kS };

/// A run g^power; power may be negative. Total letters = |power|.
struct WordRun {
  Generator generator;
  mpz_class power;
};

struct WordDecomposition {
  std::vector<WordRun> runs;
  mpz_class length;  // sum of |power|

  IntMatrix evaluate() const;
  /// Letters spelled out, e.g. "T T S t" (t, s for inverses). Only for short words.
  std::string spelled() const;
};

/// Factorization M = T^{k_1} S T^{k_2} S ... read off from the Euclidean
/// algorithm on the first column. Throws CFError unless det M = 1.
WordDecomposition word_decompose(const IntMatrix& m);

struct TranslationLength {
  double exact = 0.0;   // 2 acosh(|tr|/2)
  double approx = 0.0;  // 2 log|tr|
};

/// Throws GeometryError for |trace| <= 2 (not hyperbolic).
TranslationLength translation_length(const UnimodularMap& m);
TranslationLength translation_length(const IntMatrix& m);

/// The matrix with columns (p_{n-1}, q_{n-1}) and (p_n, q_n), columns
/// swapped when needed so that det = 1.
IntMatrix convergent_matrix(const mpz_class& p_prev, const mpz_class& q_prev, const mpz_class& p,
                            const mpz_class& q);

}  // namespace exlab
