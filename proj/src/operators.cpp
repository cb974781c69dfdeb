#include "degell/operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace degell {

namespace {

// Central-difference row divergence (sum_j da^{kj}/dx_j)_k with step
// h = cbrt(eps) (1 + |x|) per axis.
Eigen::VectorXd fd_div_a(const MatrixField& a, int dim, const Point& x) {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  for (int j = 0; j < dim; ++j) {
    const double h = base * (1.0 + std::abs(x[j]));
    Point xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Eigen::MatrixXd dcol = (a(xp).col(j) - a(xm).col(j)) / (2.0 * h);
    if (!dcol.allFinite()) {
      throw NumericError("OperatorSpec: finite differencing of a failed");
    }
    out += dcol;
  }
  return out;
}

}  // namespace

Eigen::VectorXd OperatorSpec::div_a_at(const Point& x) const {
  if (div_a) return div_a(x);
  return fd_div_a(a, dim, x);
}

Eigen::VectorXd OperatorSpec::d_at(const Point& x) const {
  if (div_d) return div_d(x);
  return Eigen::VectorXd::Zero(dim);
}

double OperatorSpec::lambda_min(const Point& x) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a(x));
  return es.eigenvalues().minCoeff();
}

void OperatorSpec::check_psd(const Point& x, double tol) const {
  const Eigen::MatrixXd A = a(x);
  if ((A - A.transpose()).norm() > tol * (A.norm() + 1.0)) {
    throw NumericError(label + ": coefficient matrix not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.eigenvalues().minCoeff() < -tol * (A.norm() + 1.0)) {
    throw NumericError(label + ": coefficient matrix not non-negative definite");
  }
}

void HestonParams::validate() const {
  if (!(kappa > 0)) throw ParameterError("HestonParams: kappa must be positive");
  if (!(theta > 0)) throw ParameterError("HestonParams: theta must be positive");
  if (sigma == 0 || !std::isfinite(sigma)) {
    throw ParameterError("HestonParams: sigma must be nonzero");
  }
  if (!(rho > -1 && rho < 1)) throw ParameterError("HestonParams: rho in (-1,1)");
  if (r < 0) throw ParameterError("HestonParams: r must be non-negative");
  if (!(beta() > 0)) throw ParameterError("HestonParams: derived beta must be positive");
}

OperatorSpec make_heston(const HestonParams& p) {
  p.validate();
  OperatorSpec op;
  op.dim = 2;
  op.label = "heston";
  Eigen::Matrix2d a1;
  a1 << 1.0, p.rho * p.sigma, p.rho * p.sigma, p.sigma * p.sigma;
  op.a = [a1](const Point& x) -> Eigen::MatrixXd { return 0.5 * x[1] * a1; };
  op.b = [p](const Point& x) {
    Eigen::VectorXd b(2);
    b[0] = p.r - p.q - 0.5 * x[1];
    b[1] = p.kappa * (p.theta - x[1]);
    return b;
  };
  op.c = [r = p.r](const Point&) { return r; };
  // d a^{kj}/dx_j sums to the y-derivative column of a
  Eigen::Vector2d da = 0.5 * a1.col(1);
  op.div_a = [da](const Point&) -> Eigen::VectorXd { return da; };
  return op;
}

OperatorSpec make_kummer(double alpha, double beta) {
  if (beta <= 0) throw ParameterError("make_kummer: beta must be positive");
  if (alpha < 0) throw ParameterError("make_kummer: alpha must be non-negative");
  OperatorSpec op;
  op.dim = 1;
  op.label = "kummer";
  op.a = [](const Point& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd a(1, 1);
    a(0, 0) = x[0];
    return a;
  };
  op.b = [beta](const Point& x) {
    Eigen::VectorXd b(1);
    b[0] = beta - x[0];
    return b;
  };
  op.c = [alpha](const Point&) { return alpha; };
  op.div_a = [](const Point&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Ones(1);
  };
  return op;
}

OperatorSpec make_dh_model(double beta, int dim) {
  if (beta <= 0) throw ParameterError("make_dh_model: beta must be positive");
  if (dim < 1) throw ParameterError("make_dh_model: dim must be at least 1");
  OperatorSpec op;
  op.dim = dim;
  op.label = "dh";
  op.a = [dim](const Point& x) -> Eigen::MatrixXd {
    return x[dim - 1] * Eigen::MatrixXd::Identity(dim, dim);
  };
  op.b = [beta, dim](const Point&) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    b[dim - 1] = beta;
    return b;
  };
  op.c = [](const Point&) { return 0.0; };
  op.div_a = [dim](const Point&) -> Eigen::VectorXd {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    d[dim - 1] = 1.0;
    return d;
  };
  return op;
}

OperatorSpec make_affine(const Eigen::MatrixXd& a1, const Eigen::VectorXd& b0,
                         const Eigen::MatrixXd& b1, double c0,
                         const Eigen::VectorXd& c1) {
  const int d = static_cast<int>(a1.rows());
  if (a1.cols() != d || b0.size() != d || b1.rows() != d || b1.cols() != d ||
      c1.size() != d) {
    throw ParameterError("make_affine: inconsistent coefficient dimensions");
  }
  if ((a1 - a1.transpose()).norm() > 1e-12 * (a1.norm() + 1)) {
    throw ParameterError("make_affine: a1 must be symmetric");
  }
  OperatorSpec op;
  op.dim = d;
  op.label = "affine";
  op.a = [a1, d](const Point& x) -> Eigen::MatrixXd { return x[d - 1] * a1; };
  op.b = [b0, b1](const Point& x) -> Eigen::VectorXd { return b0 + b1 * x; };
  op.c = [c0, c1](const Point& x) { return c0 + c1.dot(x); };
  Eigen::VectorXd da = a1.col(d - 1);
  op.div_a = [da](const Point&) -> Eigen::VectorXd { return da; };
  return op;
}

OperatorSpec make_constant(const Eigen::MatrixXd& a0, const Eigen::VectorXd& b0,
                           double c0) {
  const int d = static_cast<int>(a0.rows());
  if (a0.cols() != d || b0.size() != d) {
    throw ParameterError("make_constant: inconsistent coefficient dimensions");
  }
  OperatorSpec op;
  op.dim = d;
  op.label = "constant";
  op.a = [a0](const Point&) -> Eigen::MatrixXd { return a0; };
  op.b = [b0](const Point&) -> Eigen::VectorXd { return b0; };
  op.c = [c0](const Point&) { return c0; };
  op.div_a = [d](const Point&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(d); };
  return op;
}

DriftSplit split_drift(const OperatorSpec& op, const DomainGrid& dom,
                       const BoundarySegment& seg, const Point& x) {
  // the tubular neighborhood is the full grid: only the box membership of x
  // is checked
  for (int k = 0; k < dom.dim; ++k) {
    const double lo = dom.axes[k].lo, hi = dom.axes[k].hi;
    const double slack = 1e-12 * (hi - lo);
    if (x[k] < lo - slack || x[k] > hi + slack) {
      throw GeometryError("split_drift: point outside the segment neighborhood");
    }
  }
  const Eigen::VectorXd n = dom.inward_normal(seg);
  const Eigen::VectorXd b = op.b(x);
  DriftSplit out;
  out.b_perp = b.dot(n);
  out.b_par = b - out.b_perp * n;
  return out;
}

OperatorSpec conjugate_exponential_affine(const OperatorSpec& op,
                                          const Eigen::VectorXd& h) {
  if (h.size() != op.dim) {
    throw ParameterError("conjugate_exponential_affine: h has wrong dimension");
  }
  OperatorSpec out = op;
  out.label = op.label + "^";
  out.b = [a = op.a, b = op.b, h](const Point& x) -> Eigen::VectorXd {
    return b(x) + 2.0 * (a(x) * h);
  };
  out.c = [a = op.a, b = op.b, c = op.c, h](const Point& x) {
    return c(x) - b(x).dot(h) - h.dot(a(x) * h);
  };
  return out;
}

LnConditionResult check_heston_ln_condition(const HestonParams& p, double L,
                                            double N) {
  if (L < 0 || N < 0) {
    throw ParameterError("check_heston_ln_condition: L, N must be non-negative");
  }
  LnConditionResult out;
  out.quadratic_residual = L + 2.0 * p.kappa * N - L * L -
                           2.0 * p.rho * p.sigma * L * N -
                           p.sigma * p.sigma * N * N;
  out.zeroth_residual = p.r - p.kappa * p.theta * N - (p.r - p.q) * L;
  out.holds = out.quadratic_residual >= 0.0 && out.zeroth_residual > 0.0;
  return out;
}

FirstOrderCoefficients commutator_coefficients(const OperatorSpec& op,
                                               VectorField log_phi_grad,
                                               ScalarField a_phi_hess_term) {
  FirstOrderCoefficients out;
  out.f = [a = op.a, g = log_phi_grad](const Point& x) -> Eigen::VectorXd {
    return 2.0 * (a(x) * g(x));  // (a^{ij} + a^{ji}) (log phi)_{x_j}
  };
  out.f0 = [a = op.a, b = op.b, g = log_phi_grad, hess = a_phi_hess_term](const Point& x) {
    const Eigen::VectorXd lg = g(x);
    return hess(x) + b(x).dot(lg) - 2.0 * lg.dot(a(x) * lg);
  };
  return out;
}

}  // namespace degell
