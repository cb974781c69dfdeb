#ifndef DEGELL_OPERATORS_HPP
#define DEGELL_OPERATORS_HPP

#include <optional>
#include <string>

#include "degell/common.hpp"
#include "degell/grid.hpp"

namespace degell {

/// Coefficient data of  A u = -tr(a D^2 u) - <b, Du> + c u  with a(x)
/// symmetric non-negative definite on the open domain and vanishing on the
/// degenerate boundary portion.  Coefficients are pure evaluation closures;
/// `div_a` is the analytic row divergence (sum_j da^{kj}/dx_j)_k and is
/// replaced by central differences when absent, with the substitution
/// recorded in `approximate_derivatives`.
struct OperatorSpec {
  int dim = 1;
  std::string label;

  MatrixField a;
  VectorField b;
  ScalarField c;
  VectorField div_d;  // optional divergence-form coefficient d^j, default zero
  VectorField div_a;  // optional analytic derivatives of a

  /// Derivatives of a fall back to central differences when div_a is absent.
  bool approximate_derivatives() const { return !div_a; }

  Eigen::VectorXd div_a_at(const Point& x) const;
  Eigen::VectorXd d_at(const Point& x) const;

  /// Smallest eigenvalue of a(x); the coefficient matrix must stay
  /// non-negative definite up to `tol` times its norm.
  double lambda_min(const Point& x) const;
  void check_psd(const Point& x, double tol = 1e-12) const;
};

struct HestonParams {
  double kappa = 1.0;
  double theta = 1.0;
  double sigma = 1.0;
  double rho = 0.0;
  double r = 0.0;
  double q = 0.0;

  double beta() const { return 2.0 * kappa * theta / (sigma * sigma); }
  double mu() const { return 2.0 * kappa / (sigma * sigma); }
  void validate() const;
};

OperatorSpec make_heston(const HestonParams& p);
OperatorSpec make_kummer(double alpha, double beta);
OperatorSpec make_dh_model(double beta, int dim);

/// Affine family  a(x) = x_d a1,  b = b0 + b1 x,  c = c0 + <c1, x>.
OperatorSpec make_affine(const Eigen::MatrixXd& a1, const Eigen::VectorXd& b0,
                         const Eigen::MatrixXd& b1, double c0,
                         const Eigen::VectorXd& c1);

/// Constant-coefficient (uniformly elliptic when a0 is positive definite).
OperatorSpec make_constant(const Eigen::MatrixXd& a0, const Eigen::VectorXd& b0,
                           double c0);

struct DriftSplit {
  double b_perp = 0.0;
  Eigen::VectorXd b_par;
};

/// Normal/tangential splitting b = b_perp n + b_par with respect to the
/// inward unit normal of a degenerate segment.  The tubular neighborhood of
/// the splitting is taken to be the full grid.
DriftSplit split_drift(const OperatorSpec& op, const DomainGrid& dom,
                       const BoundarySegment& seg, const Point& x);

/// Conjugation by phi(x) = exp(-<h,x>):  a unchanged,
/// b^ = b + 2 a h,  c^ = c - <b,h> - <a h, h>.
OperatorSpec conjugate_exponential_affine(const OperatorSpec& op,
                                          const Eigen::VectorXd& h);

struct LnConditionResult {
  double quadratic_residual = 0.0;  // L + 2 kappa N - L^2 - 2 rho sigma L N - sigma^2 N^2
  double zeroth_residual = 0.0;     // r - kappa theta N - (r - q) L
  bool holds = false;               // first >= 0 and second > 0
};

LnConditionResult check_heston_ln_condition(const HestonParams& p, double L, double N);

/// First-order operator B v = f^i v_{x_i} + f^0 v obtained by commuting A
/// with multiplication by phi > 0, supplied through grad(log phi) and the
/// scalar a^{ij} phi^{-1} phi_{x_i x_j}.
struct FirstOrderCoefficients {
  VectorField f;
  ScalarField f0;
};

FirstOrderCoefficients commutator_coefficients(const OperatorSpec& op,
                                               VectorField log_phi_grad,
                                               ScalarField a_phi_hess_term);

}  // namespace degell

#endif
