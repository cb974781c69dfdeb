#include "degell/special_functions.hpp"

#include <cmath>

namespace degell {

namespace {

struct SeriesResult {
  double value = 0.0;
  int terms = 0;
  double tail = 0.0;
  bool converged = false;
};

// Direct series sum_{n>=0} (alpha)_n / (beta)_n x^n / n! with term-wise
// stopping at |term| < 1e-16 |partial sum| and compensated summation.
SeriesResult kummer_series(double alpha, double beta, double x) {
  constexpr int kMaxTerms = 10000;
  KahanSum sum;
  double term = 1.0;
  sum.add(term);
  SeriesResult out;
  for (int n = 0; n < kMaxTerms; ++n) {
    term *= (alpha + n) / (beta + n) * x / (n + 1);
    sum.add(term);
    out.terms = n + 2;
    if (std::abs(term) < 1e-16 * std::abs(sum.value())) {
      out.converged = true;
      break;
    }
  }
  out.value = sum.value();
  out.tail = std::abs(term);
  if (!std::isfinite(out.value)) {
    throw NumericError("kummer_M: series produced a non-finite value");
  }
  return out;
}

}  // namespace

KummerEval kummer_M(double alpha, double beta, double x, double x_max) {
  if (beta <= 0.0) {
    throw ParameterError("kummer_M: beta must be positive");
  }
  if (x < 0.0) {
    throw ParameterError("kummer_M: series implementation requires x >= 0");
  }
  if (x > x_max) {
    throw ParameterError("kummer_M: x exceeds the x_max cap");
  }

  SeriesResult m = kummer_series(alpha, beta, x);
  // Shift identities: M' = (alpha/beta) M(alpha+1, beta+1; x), applied twice
  // for the second derivative.
  SeriesResult m1 = kummer_series(alpha + 1.0, beta + 1.0, x);
  SeriesResult m2 = kummer_series(alpha + 2.0, beta + 2.0, x);
  if (!(m.converged && m1.converged && m2.converged)) {
    throw NumericError("kummer_M: series cap reached without convergence");
  }

  KummerEval out;
  out.value = m.value;
  out.derivative = alpha / beta * m1.value;
  out.second_derivative =
      alpha * (alpha + 1.0) / (beta * (beta + 1.0)) * m2.value;
  out.terms_used = m.terms;
  out.truncation_estimate = m.tail;
  out.converged = m.tail < 1e-14 * std::abs(m.value);
  return out;
}

double verify_kummer_ode(double alpha, double beta, double x) {
  KummerEval e = kummer_M(alpha, beta, x);
  return std::abs(-x * e.second_derivative - (beta - x) * e.derivative +
                  alpha * e.value);
}

}  // namespace degell
