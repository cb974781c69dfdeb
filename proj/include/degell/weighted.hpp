#ifndef DEGELL_WEIGHTED_HPP
#define DEGELL_WEIGHTED_HPP

#include <array>
#include <vector>

#include "degell/operators.hpp"
#include "degell/quadrature.hpp"

namespace degell {

using Box = std::vector<std::array<double, 2>>;

/// Weight w and degeneracy coefficient theta of the weighted Sobolev norms.
/// Families:
///   heston  w = y^{beta-1} e^{-gamma|x| - mu y},  theta = y   (y = last axis)
///   power   w = x_d^expo,                         theta = x_d
///   unit    w = 1, theta = 1
struct WeightSpec {
  enum class Family { unit, heston, power };
  Family family = Family::unit;
  int dim = 1;
  double beta = 1.0, gamma = 0.0, mu = 0.0;  // heston family
  double expo = 0.0;                         // power family

  ScalarField w;
  ScalarField theta;
  VectorField log_w_grad;

  static WeightSpec unit(int dim);
  static WeightSpec heston_family(int dim, double beta, double gamma, double mu);
  static WeightSpec power(int dim, double expo);
};

/// Heston weight built from process parameters, with the drift normalization
/// r - q - rho kappa theta / sigma = 0 applied by shifting q.  Both raw and
/// normalized parameter sets are retained.
struct HestonWeightBundle {
  WeightSpec ws;
  HestonParams raw;
  HestonParams normalized;
};
HestonWeightBundle heston_weight(const HestonParams& p, double gamma);

struct QuadratureSpec {
  int pts = 8;          // Gauss points per panel
  int panels = 8;       // panels per axis (before grading)
  int levels = 24;      // geometric grading levels toward a singular endpoint
  double ratio = 0.5;
  QuadratureSpec refined() const { return {pts + 4, panels * 2, levels + 8, ratio}; }
};

/// Tensor-product rule over a box with the weight folded into the weights.
struct Quadrature {
  int dim = 1;
  std::vector<AxisRule> axes;

  template <class F>
  double integrate(F&& f) const {
    KahanSum s;
    Point p(dim);
    if (dim == 1) {
      for (size_t i = 0; i < axes[0].x.size(); ++i) {
        p[0] = axes[0].x[i];
        s.add(axes[0].w[i] * f(p));
      }
    } else {
      for (size_t j = 0; j < axes[1].x.size(); ++j) {
        p[1] = axes[1].x[j];
        for (size_t i = 0; i < axes[0].x.size(); ++i) {
          p[0] = axes[0].x[i];
          s.add(axes[0].w[i] * axes[1].w[j] * f(p));
        }
      }
    }
    return s.value();
  }
};

Quadrature build_quadrature(const WeightSpec& ws, const Box& box,
                            const QuadratureSpec& qs = {});

/// Smooth test function with gradient and (optionally) Hessian closures.
struct TestFunction {
  ScalarField val;
  VectorField grad;
  MatrixField hess;  // may be empty when no second derivatives are needed
};

struct WeightedNorm {
  double value = 0.0;
  double refinement_delta = 0.0;  // |refined - base| two-level estimate
};

WeightedNorm norm_Lpw(const TestFunction& u, double p, const WeightSpec& ws,
                      const Box& box, const QuadratureSpec& qs = {});
WeightedNorm norm_L2w(const TestFunction& u, const WeightSpec& ws,
                      const Box& box, const QuadratureSpec& qs = {});
WeightedNorm norm_H1w(const TestFunction& u, const WeightSpec& ws,
                      const Box& box, const QuadratureSpec& qs = {});
WeightedNorm norm_H2w(const TestFunction& u, const WeightSpec& ws,
                      const Box& box, const QuadratureSpec& qs = {});

/// Drift and zeroth-order coefficient of the weighted bilinear map
///   a(u,v) = int (a^{ij} u_i v_j + d^j u v_j - b^i u_i v + c u v) w dx
/// associated with the non-divergence operator through integration by parts:
///   b^i = b_op^i - sum_j da^{ij}/dx_j - (log w)_j a^{ij}
///   c   = c_op + sum_j dd^j/dx_j + (log w)_j d^j.
struct BilinearCoefficients {
  VectorField b;
  ScalarField c;
};
BilinearCoefficients divergence_coefficients(const OperatorSpec& op,
                                             const WeightSpec& ws);

double bilinear_form(const OperatorSpec& op, const WeightSpec& ws,
                     const TestFunction& u, const TestFunction& v,
                     const Box& box, const QuadratureSpec& qs = {});

/// Pointwise A u as a closure (u must provide a Hessian).
ScalarField apply_operator(const OperatorSpec& op, const TestFunction& u);

struct IbpReport {
  double max_rel_discrepancy = 0.0;  // on the refined rule
  double max_rel_base = 0.0;         // on the base rule
  std::vector<double> per_trial;
};

/// Random smooth pairs (u, v), v compactly supported away from the
/// non-degenerate faces; compares a(u,v) with (Au, v)_{L2(w)}.
IbpReport verify_ibp(const OperatorSpec& op, const WeightSpec& ws, const Box& box,
                     int trials, uint64_t seed, const QuadratureSpec& qs = {});

/// q with 1/p = 1/q + (1-xi)/d;  requires p >= 1 and 1 - d/p < xi <= 1.
double sobolev_exponent_q(double p, double xi, int d);
/// lambda with 1/r = lambda/2 + (1-lambda)/q;  requires 2 <= r <= q.
double sobolev_lambda(double r, double q);

struct SobolevProbeReport {
  double c_emp = 0.0;
  double c_emp_refined = 0.0;
  double drift = 0.0;  // |refined-base| / base
  std::vector<double> ratios;
  int skipped = 0;
};

/// Empirical constant of  ||x_d^s u||_{L^q} <= C ||x_d^{s+xi} Du||_{L^p}
/// over random compactly supported bumps in the box (upper half-space box,
/// d = 2).  q is derived from (p, xi, d).
SobolevProbeReport probe_sobolev_inequality(double s, double xi, double p,
                                            const Box& box, int trials,
                                            uint64_t seed,
                                            const QuadratureSpec& qs = {});

// --- smooth test-field builders (shared with the verification harness) ---

/// C^inf ramp rising 0 -> 1 over [a, b] (value/first/second derivative).
struct SmoothRamp {
  double a, b;
  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
};

/// Random trigonometric mixture with analytic derivatives, amplitude ~1.
TestFunction random_fourier_field(Rng& rng, const Box& box, int modes = 4);

/// Product bump supported in [c_i - r_i, c_i + r_i] per axis, C^inf.
TestFunction product_bump(const std::vector<double>& center,
                          const std::vector<double>& radius);

/// Multiply two test functions (Leibniz for grad/hess).
TestFunction product(const TestFunction& f, const TestFunction& g);

/// Cutoff equal to 1 in the box core and 0 near the selected faces
/// (faces[axis][side] = true), transition width `margin` * axis extent.
TestFunction face_cutoff(const Box& box,
                         const std::vector<std::array<bool, 2>>& faces,
                         double margin = 0.18);

}  // namespace degell

#endif
