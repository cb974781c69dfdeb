#include "degell/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace degell {

// ---------------------------------------------------------------------------
// DomainGrid
// ---------------------------------------------------------------------------

GridAxis GridAxis::uniform(double lo, double hi, int n) {
  if (hi <= lo) throw ParameterError("GridAxis: hi must exceed lo");
  if (n < 3) throw ParameterError("GridAxis: need at least 3 nodes");
  GridAxis a{lo, hi, {}};
  a.x.resize(n);
  for (int k = 0; k < n; ++k) {
    a.x[k] = lo + (hi - lo) * static_cast<double>(k) / (n - 1);
  }
  a.x.front() = lo;
  a.x.back() = hi;
  return a;
}

GridAxis GridAxis::graded(double lo, double hi, int n, double power) {
  if (hi <= lo) throw ParameterError("GridAxis: hi must exceed lo");
  if (n < 3) throw ParameterError("GridAxis: need at least 3 nodes");
  if (power <= 0) throw ParameterError("GridAxis: grading power must be positive");
  GridAxis a{lo, hi, {}};
  a.x.resize(n);
  for (int k = 0; k < n; ++k) {
    double t = static_cast<double>(k) / (n - 1);
    a.x[k] = lo + (hi - lo) * std::pow(t, power);
  }
  a.x.front() = lo;
  a.x.back() = hi;
  return a;
}

DomainGrid DomainGrid::interval(double lo, double hi, int n) {
  DomainGrid g;
  g.dim = 1;
  g.axes = {GridAxis::uniform(lo, hi, n)};
  g.segments = {{0, 0, "left"}, {0, 1, "right"}};
  g.validate();
  return g;
}

DomainGrid DomainGrid::rectangle(std::array<double, 2> xb, std::array<double, 2> yb,
                                 int nx, int ny) {
  DomainGrid g;
  g.dim = 2;
  g.axes = {GridAxis::uniform(xb[0], xb[1], nx), GridAxis::uniform(yb[0], yb[1], ny)};
  g.segments = {{0, 0, "left"}, {0, 1, "right"}, {1, 0, "bottom"}, {1, 1, "top"}};
  g.validate();
  return g;
}

DomainGrid DomainGrid::from_axes(std::vector<GridAxis> axes) {
  DomainGrid g;
  g.dim = static_cast<int>(axes.size());
  g.axes = std::move(axes);
  if (g.dim == 1) {
    g.segments = {{0, 0, "left"}, {0, 1, "right"}};
  } else if (g.dim == 2) {
    g.segments = {{0, 0, "left"}, {0, 1, "right"}, {1, 0, "bottom"}, {1, 1, "top"}};
  } else {
    throw ParameterError("DomainGrid: dim must be 1 or 2");
  }
  g.validate();
  return g;
}

Point DomainGrid::node(int i, int j) const {
  Point p(dim);
  p[0] = axes[0].x[i];
  if (dim > 1) p[1] = axes[1].x[j];
  return p;
}

bool DomainGrid::is_boundary(int i, int j) const {
  if (i == 0 || i == nx() - 1) return true;
  if (dim > 1 && (j == 0 || j == ny() - 1)) return true;
  return false;
}

bool DomainGrid::node_on_segment(int i, int j, const BoundarySegment& seg) const {
  const int idx = seg.axis == 0 ? i : j;
  const int n = axes[seg.axis].n();
  return seg.side == 0 ? idx == 0 : idx == n - 1;
}

double DomainGrid::face_coord(const BoundarySegment& seg, int i, int j) const {
  if (dim == 1) return 0.0;
  const int tangent = 1 - seg.axis;
  return axes[tangent].x[tangent == 0 ? i : j];
}

Eigen::VectorXd DomainGrid::inward_normal(const BoundarySegment& seg) const {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(dim);
  n[seg.axis] = seg.side == 0 ? 1.0 : -1.0;
  return n;
}

const BoundarySegment& DomainGrid::segment_by_label(const std::string& label) const {
  for (const auto& s : segments) {
    if (s.label == label) return s;
  }
  throw ParameterError("DomainGrid: no segment labelled '" + label + "'");
}

std::vector<int> DomainGrid::segment_nodes(const BoundarySegment& seg,
                                           bool include_corners) const {
  std::vector<int> out;
  if (dim == 1) {
    out.push_back(seg.side == 0 ? 0 : nx() - 1);
    return out;
  }
  const int fixed = seg.side == 0 ? 0 : axes[seg.axis].n() - 1;
  const int tangent = 1 - seg.axis;
  const int nt = axes[tangent].n();
  const int first = include_corners ? 0 : 1;
  const int last = include_corners ? nt - 1 : nt - 2;
  for (int k = first; k <= last; ++k) {
    const int i = seg.axis == 0 ? fixed : k;
    const int j = seg.axis == 0 ? k : fixed;
    out.push_back(index(i, j));
  }
  return out;
}

void DomainGrid::validate() const {
  if (dim < 1 || dim > 2) throw ParameterError("DomainGrid: dim must be 1 or 2");
  if (static_cast<int>(axes.size()) != dim) {
    throw ParameterError("DomainGrid: axis count does not match dim");
  }
  for (const auto& a : axes) {
    if (a.n() < 3) throw ParameterError("DomainGrid: need at least 3 nodes per axis");
    if (!(a.hi > a.lo)) throw ParameterError("DomainGrid: hi must exceed lo");
    for (int k = 1; k < a.n(); ++k) {
      if (!(a.x[k] > a.x[k - 1])) {
        throw ParameterError("DomainGrid: axis coordinates must increase");
      }
    }
  }
  // segments must cover each face exactly once
  const size_t expected = dim == 1 ? 2 : 4;
  if (segments.size() != expected) {
    throw ParameterError("DomainGrid: segment list must cover the boundary exactly once");
  }
  std::vector<std::pair<int, int>> seen;
  for (const auto& s : segments) {
    if (s.axis < 0 || s.axis >= dim || (s.side != 0 && s.side != 1)) {
      throw ParameterError("DomainGrid: malformed boundary segment");
    }
    std::pair<int, int> key{s.axis, s.side};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ParameterError("DomainGrid: duplicate boundary segment");
    }
    seen.push_back(key);
  }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

const char* to_string(SigmaClass s) {
  switch (s) {
    case SigmaClass::Sigma0: return "Sigma0";
    case SigmaClass::Sigma1: return "Sigma1";
    case SigmaClass::Sigma2: return "Sigma2";
    case SigmaClass::Sigma3: return "Sigma3";
  }
  return "?";
}

const char* to_string(ConditionTag t) {
  switch (t) {
    case ConditionTag::dirichlet: return "dirichlet";
    case ConditionTag::oblique_degenerate: return "oblique_degenerate";
    case ConditionTag::neumann: return "neumann";
    case ConditionTag::none: return "none";
  }
  return "?";
}

namespace {

// Probe points on a face: grid nodes without the corners, optionally refined
// by subdividing between nodes.
std::vector<Point> face_probes(const DomainGrid& dom, const BoundarySegment& seg,
                               int refine) {
  std::vector<Point> out;
  if (dom.dim == 1) {
    out.push_back(seg.side == 0 ? dom.node(0) : dom.node(dom.nx() - 1));
    return out;
  }
  const int tangent = 1 - seg.axis;
  const auto& ax = dom.axes[tangent];
  const double fixed = seg.side == 0 ? dom.axes[seg.axis].lo : dom.axes[seg.axis].hi;
  const int steps = std::max(1, refine);
  for (int k = 1; k < ax.n() - 1; ++k) {
    for (int s = 0; s < steps; ++s) {
      const double t = ax.x[k] + (ax.x[std::min(k + 1, ax.n() - 1)] - ax.x[k]) *
                                     static_cast<double>(s) / steps;
      if (k == ax.n() - 2 && s > 0) break;  // stay inside the face interior
      Point p(2);
      p[seg.axis] = fixed;
      p[tangent] = t;
      out.push_back(p);
    }
  }
  return out;
}

double coefficient_scale(const OperatorSpec& op, const DomainGrid& dom) {
  double scale = 0.0;
  const int mx = std::min(dom.nx(), 9);
  const int my = dom.dim > 1 ? std::min(dom.ny(), 9) : 1;
  for (int j = (dom.dim > 1 ? 1 : 0); j < std::max(my - 1, 1); ++j) {
    for (int i = 1; i < mx - 1; ++i) {
      Point p(dom.dim);
      p[0] = dom.axes[0].lo +
             (dom.axes[0].hi - dom.axes[0].lo) * static_cast<double>(i) / (mx - 1);
      if (dom.dim > 1) {
        p[1] = dom.axes[1].lo +
               (dom.axes[1].hi - dom.axes[1].lo) * static_cast<double>(j) / (my - 1);
      }
      scale = std::max(scale, op.a(p).norm());
    }
  }
  return scale > 0 ? scale : 1.0;
}

double drift_scale(const OperatorSpec& op, const std::vector<Point>& probes) {
  double s = 0.0;
  for (const auto& p : probes) s = std::max(s, op.b(p).norm());
  return s > 0 ? s : 1.0;
}

// Normal-limit of ||a|| at a boundary point: geometric sequence of interior
// points x' = x + t n, t = 2^{-k} scale, k = 1..20, closed with Richardson
// extrapolation of the two deepest samples (exact when ||a|| is affine in t).
double normal_limit_of_a(const OperatorSpec& op, const DomainGrid& dom,
                         const BoundarySegment& seg, const Point& x) {
  const Eigen::VectorXd n = dom.inward_normal(seg);
  const double extent = dom.axes[seg.axis].hi - dom.axes[seg.axis].lo;
  double prev = 0.0, value = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const double t = std::ldexp(extent, -k);
    prev = value;
    value = op.a(x + t * n).norm();
  }
  return std::max(0.0, 2.0 * value - prev);
}

SigmaClass sign_class(double lo, double hi, double eps_f) {
  if (lo > eps_f) return SigmaClass::Sigma1;
  if (hi < -eps_f) return SigmaClass::Sigma2;
  return SigmaClass::Sigma0;  // callers split mixed-sign ranges beforehand
}

int tag_priority(ConditionTag t) {
  switch (t) {
    case ConditionTag::dirichlet: return 3;
    case ConditionTag::neumann: return 2;
    case ConditionTag::oblique_degenerate: return 1;
    case ConditionTag::none: return 0;
  }
  return -1;
}

}  // namespace

std::vector<bool> detect_degenerate_boundary(const OperatorSpec& op,
                                             const DomainGrid& dom,
                                             double eps_deg) {
  if (eps_deg == 0.0 || std::isnan(eps_deg)) {
    throw ParameterError("detect_degenerate_boundary: eps_deg must be positive");
  }
  const double scale = coefficient_scale(op, dom);
  const double threshold = (eps_deg > 0 ? eps_deg : 1e-10) * scale;
  std::vector<bool> out;
  for (const auto& seg : dom.segments) {
    bool degenerate = true;
    for (const auto& p : face_probes(dom, seg, 1)) {
      if (normal_limit_of_a(op, dom, seg, p) >= threshold) {
        degenerate = false;
        break;
      }
    }
    out.push_back(degenerate);
  }
  return out;
}

double fichera_function(const OperatorSpec& op, const DomainGrid& dom,
                        const BoundarySegment& seg, const Point& x) {
  const Eigen::VectorXd n = dom.inward_normal(seg);
  const Eigen::VectorXd b = op.b(x);
  Eigen::VectorXd da;
  try {
    da = op.div_a_at(x);
  } catch (const std::exception& e) {
    throw NumericError(std::string("fichera_function: coefficient derivatives failed: ") +
                       e.what());
  }
  return (b - da).dot(n);
}

BoundaryClassification classify(const OperatorSpec& op, const DomainGrid& dom,
                                const ClassifyOptions& opts) {
  const auto degenerate = detect_degenerate_boundary(op, dom, opts.eps_deg);

  BoundaryClassification cls;
  for (size_t s = 0; s < dom.segments.size(); ++s) {
    const auto& seg = dom.segments[s];
    if (!degenerate[s]) {
      SegmentClassification e;
      e.segment = seg;
      e.label = seg.label;
      if (dom.dim > 1) {
        const int tangent = 1 - seg.axis;
        e.t_lo = dom.axes[tangent].lo;
        e.t_hi = dom.axes[tangent].hi;
      }
      e.degenerate = false;
      e.sigma = SigmaClass::Sigma3;
      e.needs_dirichlet = true;
      e.needs_dirichlet_c2s = true;
      // Fichera value range is still reported for context
      const auto probes = face_probes(dom, seg, opts.probe_refine);
      double lo = 0, hi = 0;
      for (size_t k = 0; k < probes.size(); ++k) {
        const double f = fichera_function(op, dom, seg, probes[k]);
        lo = k == 0 ? f : std::min(lo, f);
        hi = k == 0 ? f : std::max(hi, f);
      }
      e.fichera_min = lo;
      e.fichera_max = hi;
      cls.entries.push_back(std::move(e));
      continue;
    }

    const auto probes = face_probes(dom, seg, opts.probe_refine);
    const double eps_f =
        opts.eps_f > 0 ? opts.eps_f : 1e-12 * drift_scale(op, probes);

    std::vector<double> fvals(probes.size());
    for (size_t k = 0; k < probes.size(); ++k) {
      fvals[k] = fichera_function(op, dom, seg, probes[k]);
    }
    auto klass = [&](double f) {
      return sign_class(f, f, eps_f);
    };

    // maximal runs of equal sign class; mixed faces split at sign changes
    size_t run_start = 0;
    int part = 0;
    const int tangent = dom.dim > 1 ? 1 - seg.axis : 0;
    while (run_start < fvals.size()) {
      size_t run_end = run_start;
      while (run_end + 1 < fvals.size() &&
             klass(fvals[run_end + 1]) == klass(fvals[run_start])) {
        ++run_end;
      }
      SegmentClassification e;
      e.segment = seg;
      e.degenerate = true;
      double lo = fvals[run_start], hi = fvals[run_start];
      for (size_t k = run_start; k <= run_end; ++k) {
        lo = std::min(lo, fvals[k]);
        hi = std::max(hi, fvals[k]);
      }
      e.fichera_min = lo;
      e.fichera_max = hi;
      e.sigma = sign_class(lo, hi, eps_f);
      e.needs_dirichlet = e.sigma == SigmaClass::Sigma2;
      e.needs_dirichlet_c2s = false;
      if (dom.dim == 1) {
        e.t_lo = e.t_hi = 0.0;
        e.label = seg.label;
      } else {
        // sub-segment bounds: midpoints between runs, face ends otherwise
        const double face_lo = dom.axes[tangent].lo;
        const double face_hi = dom.axes[tangent].hi;
        e.t_lo = run_start == 0
                     ? face_lo
                     : 0.5 * (probes[run_start - 1][tangent] + probes[run_start][tangent]);
        e.t_hi = run_end + 1 == fvals.size()
                     ? face_hi
                     : 0.5 * (probes[run_end][tangent] + probes[run_end + 1][tangent]);
        const bool whole = run_start == 0 && run_end + 1 == fvals.size();
        e.label = whole ? seg.label
                        : seg.label + "[" + std::to_string(part) + "]";
      }
      cls.entries.push_back(std::move(e));
      ++part;
      run_start = run_end + 1;
    }
  }
  return cls;
}

ConditionPlan boundary_condition_plan(const BoundaryClassification& cls,
                                      Convention convention) {
  ConditionPlan plan;
  for (const auto& e : cls.entries) {
    ConditionPlan::Entry p;
    p.segment = e.segment;
    p.t_lo = e.t_lo;
    p.t_hi = e.t_hi;
    p.label = e.label;
    if (convention == Convention::fichera) {
      p.tag = (e.sigma == SigmaClass::Sigma2 || e.sigma == SigmaClass::Sigma3)
                  ? ConditionTag::dirichlet
                  : ConditionTag::none;
    } else {
      p.tag = e.sigma == SigmaClass::Sigma3 ? ConditionTag::dirichlet
                                            : ConditionTag::oblique_degenerate;
    }
    plan.entries.push_back(std::move(p));
  }
  return plan;
}

ConditionPlan neumann_plan(const BoundaryClassification& cls) {
  ConditionPlan plan = boundary_condition_plan(cls, Convention::c2s);
  for (auto& e : plan.entries) {
    if (e.tag == ConditionTag::dirichlet) e.tag = ConditionTag::neumann;
  }
  return plan;
}

ConditionTag ConditionPlan::tag_at(const DomainGrid& dom, int i, int j) const {
  return entry_at(dom, i, j).tag;
}

const ConditionPlan::Entry& ConditionPlan::entry_at(const DomainGrid& dom, int i,
                                                    int j) const {
  const Entry* best = nullptr;
  int best_priority = -1;
  for (const auto& e : entries) {
    if (!dom.node_on_segment(i, j, e.segment)) continue;
    if (dom.dim > 1) {
      const double t = dom.face_coord(e.segment, i, j);
      const double slack =
          1e-12 * (dom.axes[1 - e.segment.axis].hi - dom.axes[1 - e.segment.axis].lo);
      if (t < e.t_lo - slack || t > e.t_hi + slack) continue;
    }
    const int pr = tag_priority(e.tag);
    if (pr > best_priority ||
        (pr == best_priority && best && e.segment.axis < best->segment.axis)) {
      best = &e;
      best_priority = pr;
    }
  }
  if (!best) {
    throw GeometryError("ConditionPlan: node not covered by any plan entry");
  }
  return *best;
}

void write_classification_csv(std::ostream& os, const BoundaryClassification& cls) {
  os << "label,axis,side,t_lo,t_hi,degenerate,sigma_class,fichera_min,fichera_max,"
     << "plan_fichera,plan_c2s\n";
  const auto plan_f = boundary_condition_plan(cls, Convention::fichera);
  const auto plan_s = boundary_condition_plan(cls, Convention::c2s);
  char buf[64];
  auto fmt = [&buf](double v) {
    snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (size_t k = 0; k < cls.entries.size(); ++k) {
    const auto& e = cls.entries[k];
    os << e.label << ',' << e.segment.axis << ',' << e.segment.side << ','
       << fmt(e.t_lo) << ',' << fmt(e.t_hi) << ',' << (e.degenerate ? 1 : 0) << ','
       << to_string(e.sigma) << ',' << fmt(e.fichera_min) << ',' << fmt(e.fichera_max)
       << ',' << to_string(plan_f.entries[k].tag) << ','
       << to_string(plan_s.entries[k].tag) << '\n';
  }
}

}  // namespace degell
