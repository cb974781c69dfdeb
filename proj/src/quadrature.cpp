#include "degell/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace degell {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix of
// the orthogonal-polynomial recurrence, weights mu0 * (first eigenvector
// component)^2.  n stays small (panel rules), so a dense solve is fine.
QuadPoints golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub,
                        double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = diag[i];
    if (i + 1 < n) {
      J(i, i + 1) = sub[i];
      J(i + 1, i) = sub[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadPoints q;
  q.x.resize(n);
  q.w.resize(n);
  for (int i = 0; i < n; ++i) {
    q.x[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    q.w[i] = mu0 * v0 * v0;
  }
  return q;
}

}  // namespace

QuadPoints gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw ParameterError("gauss_jacobi: need n >= 1");
  if (alpha <= -1.0 || beta <= -1.0) {
    throw ParameterError("gauss_jacobi: weight exponents must exceed -1");
  }
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 0));
  diag[0] = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
    diag[k] = (beta * beta - alpha * alpha) / denom;
  }
  for (int k = 1; k < n; ++k) {
    double b2;
    if (k == 1) {
      b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) /
           ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      const double t = 2.0 * k + ab;
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
           (t * t * (t + 1.0) * (t - 1.0));
    }
    sub[k - 1] = std::sqrt(b2);
  }
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) *
                     std::tgamma(beta + 1.0) / std::tgamma(ab + 2.0);
  return golub_welsch(diag, sub, mu0);
}

QuadPoints gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

void AxisRule::append_scaled(const QuadPoints& q, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (size_t i = 0; i < q.x.size(); ++i) {
    x.push_back(mid + half * q.x[i]);
    w.push_back(half * q.w[i]);
  }
}

AxisRule composite_legendre(double a, double b, int panels, int pts,
                            const std::vector<double>& breaks) {
  if (panels < 1 || pts < 1) throw ParameterError("composite_legendre: bad sizes");
  std::vector<double> edges;
  edges.push_back(a);
  for (double t : breaks) {
    if (t > a && t < b) edges.push_back(t);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());

  const QuadPoints gl = gauss_legendre(pts);
  AxisRule rule;
  for (size_t s = 0; s + 1 < edges.size(); ++s) {
    const double lo = edges[s], hi = edges[s + 1];
    const double dx = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      rule.append_scaled(gl, lo + p * dx, lo + (p + 1) * dx);
    }
  }
  return rule;
}

AxisRule graded_power_axis(double a, double b, double power, int levels,
                           double ratio, int pts) {
  if (b <= a) throw ParameterError("graded_power_axis: empty interval");
  if (ratio <= 0.0 || ratio >= 1.0) throw ParameterError("graded_power_axis: ratio in (0,1)");
  if (power <= -1.0) throw ParameterError("graded_power_axis: power must exceed -1");

  const QuadPoints gl = gauss_legendre(pts);
  AxisRule rule;
  const double len = b - a;

  if (power == 0.0 || levels <= 0) {
    // no singularity to resolve; plain panels
    const int panels = std::max(levels, 4);
    const double dx = len / panels;
    for (int p = 0; p < panels; ++p) {
      rule.append_scaled(gl, a + p * dx, a + (p + 1) * dx);
    }
    return rule;
  }

  // panels [a + len r^{k+1}, a + len r^k] carry the power factor evaluated at
  // Gauss-Legendre nodes; the stub [a, a + len r^L] uses Gauss-Jacobi with
  // (x-a)^power folded in exactly.
  for (int k = 0; k < levels; ++k) {
    const double hi = a + len * std::pow(ratio, k);
    const double lo = a + len * std::pow(ratio, k + 1);
    AxisRule panel;
    panel.append_scaled(gl, lo, hi);
    for (size_t i = 0; i < panel.x.size(); ++i) {
      rule.x.push_back(panel.x[i]);
      rule.w.push_back(panel.w[i] * std::pow(panel.x[i] - a, power));
    }
  }
  const double eps = len * std::pow(ratio, levels);
  // int_a^{a+eps} f(x) (x-a)^power dx  via Jacobi weight (1+t)^power on [-1,1]
  const QuadPoints gj = gauss_jacobi(pts, 0.0, power);
  const double half = 0.5 * eps;
  for (size_t i = 0; i < gj.x.size(); ++i) {
    rule.x.push_back(a + half * (gj.x[i] + 1.0));
    rule.w.push_back(gj.w[i] * std::pow(half, power + 1.0));
  }
  return rule;
}

}  // namespace degell
