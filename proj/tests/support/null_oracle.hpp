#pragma once

// Closed-form expectations for the matched-sparsity null model, exact in
// rational arithmetic.
//
// Setting: a catalog of r equal categories with n_c items each; each null
// trial draws k_v (resp. k_b) distinct items uniformly from the flat item
// space, channels independent.
//
// CVR case (single category): the overlap count is hypergeometric, so the
// per-trial conversion fraction has mean exactly k_b / total.
//
// Jaccard case: category occupancy counts follow the classic committee
// occupancy law (inclusion-exclusion); conditional on occupancy counts
// (a, b) the number of co-occupied categories is hypergeometric over r,
// giving exact E[J] and E[J^2] by full enumeration.

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace null_oracle {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt result = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    result *= static_cast<std::uint64_t>(n - i);
    result /= static_cast<std::uint64_t>(i + 1);
  }
  return result;
}

// P(exactly a of r categories occupied when k distinct items are drawn
// from r*n_c), as an exact rational.
inline Rational occupancy_probability(std::uint64_t r, std::uint64_t n_c,
                                      std::uint64_t k, std::uint64_t a) {
  const BigInt denom = binom(r * n_c, k);
  BigInt numer = 0;
  for (std::uint64_t j = 0; j <= a; ++j) {
    const BigInt term = binom(a, j) * binom((a - j) * n_c, k);
    if (j % 2 == 0)
      numer += term;
    else
      numer -= term;
  }
  numer *= binom(r, a);
  return Rational(numer, denom);
}

struct JaccardMoments {
  double mean = 0;      // E[J] per trial, as a fraction
  double variance = 0;  // Var[J] per trial
};

inline JaccardMoments jaccard_moments(std::uint64_t r, std::uint64_t n_c,
                                      std::uint64_t k_v, std::uint64_t k_b) {
  std::vector<Rational> pa(r + 1), pb(r + 1);
  for (std::uint64_t a = 0; a <= r; ++a) {
    pa[a] = occupancy_probability(r, n_c, k_v, a);
    pb[a] = occupancy_probability(r, n_c, k_b, a);
  }
  Rational mean{0}, second{0};
  for (std::uint64_t a = 0; a <= r; ++a) {
    if (pa[a] == 0) continue;
    for (std::uint64_t b = 0; b <= r; ++b) {
      if (pb[b] == 0) continue;
      if (a == 0 && b == 0) continue;  // skipped trial
      const BigInt hyp_denom = binom(r, b);
      const std::uint64_t lo = (a + b > r) ? a + b - r : 0;
      const std::uint64_t hi = std::min(a, b);
      for (std::uint64_t i = lo; i <= hi; ++i) {
        const Rational p_i(binom(a, i) * binom(r - a, b - i), hyp_denom);
        const Rational weight = pa[a] * pb[b] * p_i;
        const Rational j(i, a + b - i);
        mean += weight * j;
        second += weight * j * j;
      }
    }
  }
  // condition on the trial not being skipped
  Rational p_keep = 1 - pa[0] * pb[0];
  if (p_keep != 0) {
    mean /= p_keep;
    second /= p_keep;
  }
  JaccardMoments out;
  out.mean = mean.convert_to<double>();
  out.variance = second.convert_to<double>() - out.mean * out.mean;
  return out;
}

struct CvrMoments {
  double mean = 0;      // E[overlap fraction] per trial
  double variance = 0;  // hypergeometric variance of the fraction
};

// Single-category case: the conversion fraction is H / k_v with
// H ~ Hypergeometric(total, k_v, k_b).
inline CvrMoments cvr_moments_single_category(std::uint64_t total,
                                              std::uint64_t k_v,
                                              std::uint64_t k_b) {
  CvrMoments out;
  const double n = static_cast<double>(total);
  const double kv = static_cast<double>(k_v);
  const double kb = static_cast<double>(k_b);
  out.mean = kb / n;
  out.variance =
      (kb * (n - kb) * (n - kv)) / (n * n * (n - 1.0) * kv);
  return out;
}

}  // namespace null_oracle
