#include "degell/weighted.hpp"

#include <cmath>
#include <limits>

namespace degell {

namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// mollifier kernel exp(-1/(1-s^2)) on |s|<1 with derivatives
void bump_kernel(double s, double& v, double& d1, double& d2) {
  if (std::abs(s) >= 1.0 - 1e-12) {
    v = d1 = d2 = 0.0;
    return;
  }
  const double m = 1.0 - s * s;
  v = std::exp(-1.0 / m);
  const double g1 = -2.0 * s / (m * m);
  d1 = v * g1;
  d2 = v * (g1 * g1 - 2.0 * (1.0 + 3.0 * s * s) / (m * m * m));
}

double ramp_f(double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; }
double ramp_f1(double s) { return s > 0 ? ramp_f(s) / (s * s) : 0.0; }
double ramp_f2(double s) {
  return s > 0 ? ramp_f(s) * (1.0 - 2.0 * s) / (s * s * s * s) : 0.0;
}

}  // namespace

double SmoothRamp::value(double t) const {
  const double s = (t - a) / (b - a);
  if (s <= 0) return 0.0;
  if (s >= 1) return 1.0;
  const double n = ramp_f(s);
  return n / (n + ramp_f(1.0 - s));
}

double SmoothRamp::d1(double t) const {
  const double s = (t - a) / (b - a);
  if (s <= 0 || s >= 1) return 0.0;
  const double fs = ramp_f(s), fo = ramp_f(1.0 - s);
  const double D = fs + fo;
  const double P = ramp_f1(s) * fo + fs * ramp_f1(1.0 - s);
  return P / (D * D) / (b - a);
}

double SmoothRamp::d2(double t) const {
  const double s = (t - a) / (b - a);
  if (s <= 0 || s >= 1) return 0.0;
  const double fs = ramp_f(s), fo = ramp_f(1.0 - s);
  const double D = fs + fo;
  const double P = ramp_f1(s) * fo + fs * ramp_f1(1.0 - s);
  const double Pp = ramp_f2(s) * fo - fs * ramp_f2(1.0 - s);
  const double Dp = ramp_f1(s) - ramp_f1(1.0 - s);
  return (Pp * D - 2.0 * P * Dp) / (D * D * D) / ((b - a) * (b - a));
}

// ---------------------------------------------------------------------------
// WeightSpec
// ---------------------------------------------------------------------------

WeightSpec WeightSpec::unit(int dim) {
  WeightSpec ws;
  ws.family = Family::unit;
  ws.dim = dim;
  ws.w = [](const Point&) { return 1.0; };
  ws.theta = [](const Point&) { return 1.0; };
  ws.log_w_grad = [dim](const Point&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Zero(dim);
  };
  return ws;
}

WeightSpec WeightSpec::heston_family(int dim, double beta, double gamma, double mu) {
  if (!(beta > 0)) throw ParameterError("WeightSpec: beta must be positive");
  if (gamma < 0 || mu < 0) {
    throw ParameterError("WeightSpec: gamma and mu must be non-negative");
  }
  WeightSpec ws;
  ws.family = Family::heston;
  ws.dim = dim;
  ws.beta = beta;
  ws.gamma = gamma;
  ws.mu = mu;
  const int yax = dim - 1;
  ws.w = [beta, gamma, mu, dim, yax](const Point& x) {
    const double y = x[yax];
    double e = -mu * y;
    if (dim > 1) e -= gamma * std::abs(x[0]);
    return std::pow(y, beta - 1.0) * std::exp(e);
  };
  ws.theta = [yax](const Point& x) { return x[yax]; };
  ws.log_w_grad = [beta, gamma, mu, dim, yax](const Point& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    if (dim > 1) g[0] = -gamma * sgn(x[0]);
    g[yax] = (beta - 1.0) / x[yax] - mu;
    return g;
  };
  return ws;
}

WeightSpec WeightSpec::power(int dim, double expo) {
  if (expo <= -1.0) throw ParameterError("WeightSpec: power exponent must exceed -1");
  WeightSpec ws;
  ws.family = Family::power;
  ws.dim = dim;
  ws.expo = expo;
  const int yax = dim - 1;
  ws.w = [expo, yax](const Point& x) { return std::pow(x[yax], expo); };
  ws.theta = [yax](const Point& x) { return x[yax]; };
  ws.log_w_grad = [expo, dim, yax](const Point& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    g[yax] = expo / x[yax];
    return g;
  };
  return ws;
}

HestonWeightBundle heston_weight(const HestonParams& p, double gamma) {
  p.validate();
  HestonWeightBundle bundle;
  bundle.raw = p;
  bundle.normalized = p;
  bundle.normalized.q = p.r - p.rho * p.kappa * p.theta / p.sigma;
  bundle.ws = WeightSpec::heston_family(2, p.beta(), gamma, p.mu());
  return bundle;
}

// ---------------------------------------------------------------------------
// Quadrature assembly
// ---------------------------------------------------------------------------

namespace {

AxisRule plain_axis(double lo, double hi, const QuadratureSpec& qs,
                    const std::vector<double>& breaks = {}) {
  return composite_legendre(lo, hi, qs.panels, qs.pts, breaks);
}

void scale_weights(AxisRule& rule, const std::function<double(double)>& factor) {
  for (size_t i = 0; i < rule.x.size(); ++i) rule.w[i] *= factor(rule.x[i]);
}

// axis rule for the singular direction: power (x-lo)^expo folded in, any
// additional smooth factor evaluated at the nodes
AxisRule singular_axis(double lo, double hi, double expo,
                       const QuadratureSpec& qs,
                       const std::function<double(double)>& smooth) {
  AxisRule rule;
  if (expo == 0.0) {
    rule = plain_axis(lo, hi, qs);
  } else if (lo == 0.0) {
    rule = graded_power_axis(0.0, hi, expo, qs.levels, qs.ratio, qs.pts);
  } else {
    rule = plain_axis(lo, hi, qs);
    scale_weights(rule, [expo](double x) { return std::pow(x, expo); });
  }
  if (smooth) scale_weights(rule, smooth);
  return rule;
}

}  // namespace

Quadrature build_quadrature(const WeightSpec& ws, const Box& box,
                            const QuadratureSpec& qs) {
  if (static_cast<int>(box.size()) != ws.dim) {
    throw ParameterError("build_quadrature: box dimension mismatch");
  }
  Quadrature quad;
  quad.dim = ws.dim;
  const int yax = ws.dim - 1;
  for (int ax = 0; ax < ws.dim; ++ax) {
    const double lo = box[ax][0], hi = box[ax][1];
    if (!(hi > lo)) throw ParameterError("build_quadrature: empty box axis");
    switch (ws.family) {
      case WeightSpec::Family::unit:
        quad.axes.push_back(plain_axis(lo, hi, qs));
        break;
      case WeightSpec::Family::heston:
        if (ax == yax) {
          const double mu = ws.mu;
          quad.axes.push_back(singular_axis(
              lo, hi, ws.beta - 1.0, qs,
              [mu](double y) { return std::exp(-mu * y); }));
        } else {
          // e^{-gamma |x|} has a kink at x = 0
          AxisRule rule = plain_axis(lo, hi, qs, {0.0});
          const double gamma = ws.gamma;
          scale_weights(rule, [gamma](double x) { return std::exp(-gamma * std::abs(x)); });
          quad.axes.push_back(std::move(rule));
        }
        break;
      case WeightSpec::Family::power:
        if (ax == yax) {
          quad.axes.push_back(singular_axis(lo, hi, ws.expo, qs, {}));
        } else {
          quad.axes.push_back(plain_axis(lo, hi, qs));
        }
        break;
    }
  }
  return quad;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(what) + ": non-finite integrand samples");
  }
  return v;
}

template <class Integrand>
WeightedNorm two_level(const WeightSpec& ws, const Box& box,
                       const QuadratureSpec& qs, double root,
                       Integrand&& integrand, const char* what) {
  const Quadrature base = build_quadrature(ws, box, qs);
  const Quadrature fine = build_quadrature(ws, box, qs.refined());
  const double vb = std::pow(checked(base.integrate(integrand), what), 1.0 / root);
  const double vf = std::pow(checked(fine.integrate(integrand), what), 1.0 / root);
  return {vf, std::abs(vf - vb)};
}

}  // namespace

WeightedNorm norm_Lpw(const TestFunction& u, double p, const WeightSpec& ws,
                      const Box& box, const QuadratureSpec& qs) {
  if (!(p >= 1)) throw ParameterError("norm_Lpw: p must be at least 1");
  return two_level(ws, box, qs, p,
                   [&](const Point& x) { return std::pow(std::abs(u.val(x)), p); },
                   "norm_Lpw");
}

WeightedNorm norm_L2w(const TestFunction& u, const WeightSpec& ws, const Box& box,
                      const QuadratureSpec& qs) {
  return norm_Lpw(u, 2.0, ws, box, qs);
}

WeightedNorm norm_H1w(const TestFunction& u, const WeightSpec& ws, const Box& box,
                      const QuadratureSpec& qs) {
  if (!u.grad) throw ParameterError("norm_H1w: gradient closure required");
  return two_level(ws, box, qs, 2.0,
                   [&](const Point& x) {
                     const double th = ws.theta(x);
                     const double uv = u.val(x);
                     return th * u.grad(x).squaredNorm() + (1.0 + th) * uv * uv;
                   },
                   "norm_H1w");
}

WeightedNorm norm_H2w(const TestFunction& u, const WeightSpec& ws, const Box& box,
                      const QuadratureSpec& qs) {
  if (!u.grad || !u.hess) throw ParameterError("norm_H2w: derivative closures required");
  return two_level(ws, box, qs, 2.0,
                   [&](const Point& x) {
                     const double th = ws.theta(x);
                     const double uv = u.val(x);
                     return th * th * u.hess(x).squaredNorm() +
                            (1.0 + th * th) * (u.grad(x).squaredNorm() + uv * uv);
                   },
                   "norm_H2w");
}

// ---------------------------------------------------------------------------
// Bilinear map and integration by parts
// ---------------------------------------------------------------------------

BilinearCoefficients divergence_coefficients(const OperatorSpec& op,
                                             const WeightSpec& ws) {
  if (!ws.log_w_grad) {
    throw NumericError("divergence_coefficients: log-weight gradient unavailable");
  }
  BilinearCoefficients out;
  out.b = [op, lw = ws.log_w_grad](const Point& x) -> Eigen::VectorXd {
    // b = b_op - div a - a grad(log w) - d
    return op.b(x) - op.div_a_at(x) - op.a(x) * lw(x) - op.d_at(x);
  };
  if (!op.div_d) {
    out.c = op.c;
  } else {
    out.c = [op, lw = ws.log_w_grad](const Point& x) {
      // central-difference divergence of d
      const double base = std::cbrt(std::numeric_limits<double>::epsilon());
      double div = 0.0;
      for (int j = 0; j < op.dim; ++j) {
        const double h = base * (1.0 + std::abs(x[j]));
        Point xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        div += (op.div_d(xp)[j] - op.div_d(xm)[j]) / (2.0 * h);
      }
      return op.c(x) + div + lw(x).dot(op.div_d(x));
    };
  }
  return out;
}

double bilinear_form(const OperatorSpec& op, const WeightSpec& ws,
                     const TestFunction& u, const TestFunction& v,
                     const Box& box, const QuadratureSpec& qs) {
  if (!u.val || !u.grad || !v.val || !v.grad) {
    throw ParameterError("bilinear_form: value and gradient closures required");
  }
  const BilinearCoefficients bc = divergence_coefficients(op, ws);
  const Quadrature quad = build_quadrature(ws, box, qs);
  const double value = quad.integrate([&](const Point& x) {
    const Eigen::VectorXd du = u.grad(x);
    const Eigen::VectorXd dv = v.grad(x);
    const double uv = u.val(x), vv = v.val(x);
    double s = du.dot(op.a(x) * dv);
    s += uv * op.d_at(x).dot(dv);
    s -= bc.b(x).dot(du) * vv;
    s += bc.c(x) * uv * vv;
    return s;
  });
  return checked(value, "bilinear_form");
}

ScalarField apply_operator(const OperatorSpec& op, const TestFunction& u) {
  if (!u.val || !u.grad || !u.hess) {
    throw ParameterError("apply_operator: value, gradient and Hessian required");
  }
  return [op, u](const Point& x) {
    return -(op.a(x) * u.hess(x)).trace() - op.b(x).dot(u.grad(x)) +
           op.c(x) * u.val(x);
  };
}

// ---------------------------------------------------------------------------
// Smooth test fields
// ---------------------------------------------------------------------------

TestFunction random_fourier_field(Rng& rng, const Box& box, int modes) {
  const int d = static_cast<int>(box.size());
  std::vector<double> amp(modes), phase(modes);
  std::vector<Eigen::VectorXd> freq(modes, Eigen::VectorXd(d));
  for (int m = 0; m < modes; ++m) {
    amp[m] = rng.uniform(-1.0, 1.0) / modes;
    phase[m] = rng.uniform(0.0, 2.0 * M_PI);
    for (int k = 0; k < d; ++k) {
      const double extent = box[k][1] - box[k][0];
      freq[m][k] = rng.uniform(-3.0, 3.0) * M_PI / extent;
    }
  }
  TestFunction f;
  f.val = [amp, phase, freq, modes](const Point& x) {
    double s = 0;
    for (int m = 0; m < modes; ++m) s += amp[m] * std::cos(freq[m].dot(x) + phase[m]);
    return s;
  };
  f.grad = [amp, phase, freq, modes, d](const Point& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    for (int m = 0; m < modes; ++m) {
      g -= amp[m] * std::sin(freq[m].dot(x) + phase[m]) * freq[m];
    }
    return g;
  };
  f.hess = [amp, phase, freq, modes, d](const Point& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (int m = 0; m < modes; ++m) {
      h -= amp[m] * std::cos(freq[m].dot(x) + phase[m]) * freq[m] * freq[m].transpose();
    }
    return h;
  };
  return f;
}

TestFunction product_bump(const std::vector<double>& center,
                          const std::vector<double>& radius) {
  const int d = static_cast<int>(center.size());
  if (static_cast<int>(radius.size()) != d) {
    throw ParameterError("product_bump: center/radius size mismatch");
  }
  auto axis_parts = [center, radius, d](const Point& x, std::vector<double>& v,
                                        std::vector<double>& d1,
                                        std::vector<double>& d2) {
    v.resize(d);
    d1.resize(d);
    d2.resize(d);
    for (int k = 0; k < d; ++k) {
      const double s = (x[k] - center[k]) / radius[k];
      double bv, b1, b2;
      bump_kernel(s, bv, b1, b2);
      v[k] = bv;
      d1[k] = b1 / radius[k];
      d2[k] = b2 / (radius[k] * radius[k]);
    }
  };
  TestFunction f;
  f.val = [axis_parts, d](const Point& x) {
    std::vector<double> v, d1, d2;
    axis_parts(x, v, d1, d2);
    double p = 1;
    for (int k = 0; k < d; ++k) p *= v[k];
    return p;
  };
  f.grad = [axis_parts, d](const Point& x) -> Eigen::VectorXd {
    std::vector<double> v, d1, d2;
    axis_parts(x, v, d1, d2);
    Eigen::VectorXd g(d);
    for (int k = 0; k < d; ++k) {
      double p = d1[k];
      for (int l = 0; l < d; ++l) {
        if (l != k) p *= v[l];
      }
      g[k] = p;
    }
    return g;
  };
  f.hess = [axis_parts, d](const Point& x) -> Eigen::MatrixXd {
    std::vector<double> v, d1, d2;
    axis_parts(x, v, d1, d2);
    Eigen::MatrixXd h(d, d);
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        double p = 1;
        if (k == l) {
          p = d2[k];
          for (int m = 0; m < d; ++m) {
            if (m != k) p *= v[m];
          }
        } else {
          p = d1[k] * d1[l];
          for (int m = 0; m < d; ++m) {
            if (m != k && m != l) p *= v[m];
          }
        }
        h(k, l) = p;
      }
    }
    return h;
  };
  return f;
}

TestFunction product(const TestFunction& f, const TestFunction& g) {
  TestFunction out;
  out.val = [f, g](const Point& x) { return f.val(x) * g.val(x); };
  out.grad = [f, g](const Point& x) -> Eigen::VectorXd {
    return f.grad(x) * g.val(x) + g.grad(x) * f.val(x);
  };
  if (f.hess && g.hess) {
    out.hess = [f, g](const Point& x) -> Eigen::MatrixXd {
      const Eigen::VectorXd df = f.grad(x), dg = g.grad(x);
      return f.hess(x) * g.val(x) + g.hess(x) * f.val(x) +
             df * dg.transpose() + dg * df.transpose();
    };
  }
  return out;
}

TestFunction face_cutoff(const Box& box,
                         const std::vector<std::array<bool, 2>>& faces,
                         double margin) {
  const int d = static_cast<int>(box.size());
  if (static_cast<int>(faces.size()) != d) {
    throw ParameterError("face_cutoff: faces size mismatch");
  }
  struct AxisCut {
    bool lo_cut, hi_cut;
    SmoothRamp lo_ramp, hi_ramp;
  };
  std::vector<AxisCut> cuts(d);
  for (int k = 0; k < d; ++k) {
    const double ext = box[k][1] - box[k][0];
    cuts[k].lo_cut = faces[k][0];
    cuts[k].hi_cut = faces[k][1];
    cuts[k].lo_ramp = {box[k][0], box[k][0] + margin * ext};
    cuts[k].hi_ramp = {box[k][1] - margin * ext, box[k][1]};
  }
  auto axis_vals = [cuts, d](const Point& x, std::vector<double>& v,
                             std::vector<double>& d1, std::vector<double>& d2) {
    v.assign(d, 1.0);
    d1.assign(d, 0.0);
    d2.assign(d, 0.0);
    for (int k = 0; k < d; ++k) {
      // rising ramp near the low face, falling near the high face
      double a = 1, a1 = 0, a2 = 0, b = 1, b1 = 0, b2 = 0;
      if (cuts[k].lo_cut) {
        a = cuts[k].lo_ramp.value(x[k]);
        a1 = cuts[k].lo_ramp.d1(x[k]);
        a2 = cuts[k].lo_ramp.d2(x[k]);
      }
      if (cuts[k].hi_cut) {
        b = 1.0 - cuts[k].hi_ramp.value(x[k]);
        b1 = -cuts[k].hi_ramp.d1(x[k]);
        b2 = -cuts[k].hi_ramp.d2(x[k]);
      }
      v[k] = a * b;
      d1[k] = a1 * b + a * b1;
      d2[k] = a2 * b + 2 * a1 * b1 + a * b2;
    }
  };
  TestFunction f;
  f.val = [axis_vals, d](const Point& x) {
    std::vector<double> v, d1, d2;
    axis_vals(x, v, d1, d2);
    double p = 1;
    for (int k = 0; k < d; ++k) p *= v[k];
    return p;
  };
  f.grad = [axis_vals, d](const Point& x) -> Eigen::VectorXd {
    std::vector<double> v, d1, d2;
    axis_vals(x, v, d1, d2);
    Eigen::VectorXd g(d);
    for (int k = 0; k < d; ++k) {
      double p = d1[k];
      for (int l = 0; l < d; ++l) {
        if (l != k) p *= v[l];
      }
      g[k] = p;
    }
    return g;
  };
  f.hess = [axis_vals, d](const Point& x) -> Eigen::MatrixXd {
    std::vector<double> v, d1, d2;
    axis_vals(x, v, d1, d2);
    Eigen::MatrixXd h(d, d);
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        double p;
        if (k == l) {
          p = d2[k];
          for (int m = 0; m < d; ++m) {
            if (m != k) p *= v[m];
          }
        } else {
          p = d1[k] * d1[l];
          for (int m = 0; m < d; ++m) {
            if (m != k && m != l) p *= v[m];
          }
        }
        h(k, l) = p;
      }
    }
    return h;
  };
  return f;
}

// ---------------------------------------------------------------------------
// Integration-by-parts check
// ---------------------------------------------------------------------------

IbpReport verify_ibp(const OperatorSpec& op, const WeightSpec& ws, const Box& box,
                     int trials, uint64_t seed, const QuadratureSpec& qs) {
  const int d = ws.dim;
  // v is compactly supported away from the non-degenerate faces; the
  // degenerate face (x_d = 0 for the singular weight families) stays free
  std::vector<std::array<bool, 2>> faces(d, {true, true});
  if (ws.family != WeightSpec::Family::unit && box[d - 1][0] == 0.0) {
    faces[d - 1][0] = false;
  }
  const TestFunction cutoff = face_cutoff(box, faces);

  const Quadrature base = build_quadrature(ws, box, qs);
  const Quadrature fine = build_quadrature(ws, box, qs.refined());
  const BilinearCoefficients bc = divergence_coefficients(op, ws);

  IbpReport rep;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.fork(t);
    const TestFunction u = random_fourier_field(trial, box);
    const TestFunction v = product(cutoff, random_fourier_field(trial, box));
    const ScalarField Au = apply_operator(op, u);

    auto discrepancy = [&](const Quadrature& quad) {
      const double lhs = quad.integrate([&](const Point& x) {
        const Eigen::VectorXd du = u.grad(x);
        const Eigen::VectorXd dv = v.grad(x);
        double s = du.dot(op.a(x) * dv);
        s += u.val(x) * op.d_at(x).dot(dv);
        s -= bc.b(x).dot(du) * v.val(x);
        s += bc.c(x) * u.val(x) * v.val(x);
        return s;
      });
      const double rhs = quad.integrate(
          [&](const Point& x) { return Au(x) * v.val(x); });
      return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1.0);
    };

    rep.max_rel_base = std::max(rep.max_rel_base, checked(discrepancy(base), "verify_ibp"));
    const double fine_disc = checked(discrepancy(fine), "verify_ibp");
    rep.per_trial.push_back(fine_disc);
    rep.max_rel_discrepancy = std::max(rep.max_rel_discrepancy, fine_disc);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Power-weighted Sobolev machinery
// ---------------------------------------------------------------------------

double sobolev_exponent_q(double p, double xi, int d) {
  if (!(p >= 1)) throw InputError("sobolev_exponent_q: p must be at least 1");
  if (!(xi > 1.0 - static_cast<double>(d) / p && xi <= 1.0)) {
    throw InputError("sobolev_exponent_q: need 1 - d/p < xi <= 1");
  }
  const double inv_q = 1.0 / p - (1.0 - xi) / d;
  if (!(inv_q > 0)) throw InputError("sobolev_exponent_q: derived q not positive");
  return 1.0 / inv_q;
}

double sobolev_lambda(double r, double q) {
  if (!(r >= 2.0 && r <= q)) throw InputError("sobolev_lambda: need 2 <= r <= q");
  if (q == 2.0) return 1.0;
  return (1.0 / r - 1.0 / q) / (0.5 - 1.0 / q);
}

SobolevProbeReport probe_sobolev_inequality(double s, double xi, double p,
                                            const Box& box, int trials,
                                            uint64_t seed,
                                            const QuadratureSpec& qs) {
  const int d = static_cast<int>(box.size());
  if (d != 2) throw InputError("probe_sobolev_inequality: implemented for d = 2");
  if (!(s > -1.0 / p)) throw InputError("probe_sobolev_inequality: need s > -1/p");
  const double q = sobolev_exponent_q(p, xi, d);

  const WeightSpec w_num = WeightSpec::power(d, q * s);
  const WeightSpec w_den = WeightSpec::power(d, p * (s + xi));
  const Quadrature num_base = build_quadrature(w_num, box, qs);
  const Quadrature num_fine = build_quadrature(w_num, box, qs.refined());
  const Quadrature den_base = build_quadrature(w_den, box, qs);
  const Quadrature den_fine = build_quadrature(w_den, box, qs.refined());

  SobolevProbeReport rep;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.fork(t);
    // compactly supported bump at a random distance from x_d = 0; the radii
    // stay wide enough for the base rule to resolve the bump core
    std::vector<double> center(d), radius(d);
    for (int k = 0; k < d; ++k) {
      const double ext = box[k][1] - box[k][0];
      radius[k] = ext * trial.uniform(0.12, 0.28);
      double clo = box[k][0] + 1.02 * radius[k];
      double chi = box[k][1] - 1.02 * radius[k];
      center[k] = trial.uniform(clo, chi);
    }
    const TestFunction u = product_bump(center, radius);

    auto ratio = [&](const Quadrature& num, const Quadrature& den) {
      const double nv = std::pow(
          num.integrate([&](const Point& x) { return std::pow(std::abs(u.val(x)), q); }),
          1.0 / q);
      const double dv = std::pow(
          den.integrate([&](const Point& x) { return std::pow(u.grad(x).norm(), p); }),
          1.0 / p);
      if (!(dv > 1e-300)) return -1.0;  // zero-gradient guard
      return nv / dv;
    };

    const double rb = ratio(num_base, den_base);
    const double rf = ratio(num_fine, den_fine);
    if (rb < 0 || rf < 0) {
      rep.skipped++;
      continue;
    }
    rep.ratios.push_back(rf);
    if (rb > rep.c_emp) rep.c_emp = rb;
    if (rf > rep.c_emp_refined) rep.c_emp_refined = rf;
  }
  if (rep.c_emp_refined > 0) {
    rep.drift = std::abs(rep.c_emp_refined - rep.c_emp) / rep.c_emp_refined;
  }
  return rep;
}

}  // namespace degell
