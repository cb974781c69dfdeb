#ifndef DEGELL_QUADRATURE_HPP
#define DEGELL_QUADRATURE_HPP

#include <vector>

#include "degell/common.hpp"

namespace degell {

struct QuadPoints {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre rule on [-1,1].
QuadPoints gauss_legendre(int n);

/// Gauss-Jacobi rule on [-1,1] for the weight (1-x)^alpha (1+x)^beta,
/// alpha, beta > -1.  Golub-Welsch on the symmetric Jacobi matrix.
QuadPoints gauss_jacobi(int n, double alpha, double beta);

/// One-dimensional rule assembled from panels; weights may carry a folded-in
/// weight function so that  integral f w dx ~= sum w_i f(x_i).
struct AxisRule {
  std::vector<double> x;
  std::vector<double> w;
  void append_scaled(const QuadPoints& q, double a, double b);  // map [-1,1] -> [a,b]
};

/// Equal panels on [a,b], n-point Gauss-Legendre each, optionally split at
/// interior breakpoints (kinks of the integrand).
AxisRule composite_legendre(double a, double b, int panels, int pts,
                            const std::vector<double>& breaks = {});

/// Panels geometrically graded toward `a` with the given ratio; the final
/// stub [a, a+eps] uses Gauss-Jacobi with the power weight (x-a)^power folded
/// into the weights exactly, the remaining panels evaluate the power factor
/// at Gauss-Legendre nodes.  For power == 0 the stub degenerates to plain
/// Gauss-Legendre.  All returned weights include the (x-a)^power factor.
AxisRule graded_power_axis(double a, double b, double power, int levels,
                           double ratio, int pts);

}  // namespace degell

#endif
