#ifndef DEGELL_SPECIAL_FUNCTIONS_HPP
#define DEGELL_SPECIAL_FUNCTIONS_HPP

#include "degell/common.hpp"

namespace degell {

struct KummerEval {
  double value = 0.0;
  double derivative = 0.0;
  double second_derivative = 0.0;
  int terms_used = 0;
  double truncation_estimate = 0.0;
  bool converged = false;
};

/// Confluent hypergeometric function of the first kind M(alpha, beta; x) by
/// direct series with compensated summation; derivatives via the shift
/// identity M'(alpha,beta;x) = (alpha/beta) M(alpha+1,beta+1;x).
/// Requires beta > 0 and 0 <= x <= x_max.
KummerEval kummer_M(double alpha, double beta, double x, double x_max = 50.0);

/// Residual |-x M'' - (beta - x) M' + alpha M| of the Kummer equation.
double verify_kummer_ode(double alpha, double beta, double x);

}  // namespace degell

#endif
