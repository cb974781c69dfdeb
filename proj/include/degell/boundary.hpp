#ifndef DEGELL_BOUNDARY_HPP
#define DEGELL_BOUNDARY_HPP

#include <iosfwd>
#include <vector>

#include "degell/operators.hpp"

namespace degell {

enum class SigmaClass { Sigma0, Sigma1, Sigma2, Sigma3 };
const char* to_string(SigmaClass s);

enum class Convention { fichera, c2s };
enum class ConditionTag { dirichlet, oblique_degenerate, neumann, none };
const char* to_string(ConditionTag t);

/// One classified segment, possibly a sub-segment after splitting a face at
/// Fichera sign changes.  [t_lo, t_hi] is the covered range of the tangential
/// face coordinate (degenerate to a point in one dimension).
struct SegmentClassification {
  BoundarySegment segment;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::string label;
  bool degenerate = false;
  double fichera_min = 0.0;
  double fichera_max = 0.0;
  SigmaClass sigma = SigmaClass::Sigma3;
  bool needs_dirichlet = true;      // Fichera convention: Sigma2 or Sigma3
  bool needs_dirichlet_c2s = true;  // this paper's convention: Sigma3 only
};

struct BoundaryClassification {
  std::vector<SegmentClassification> entries;
};

/// Per segment: degenerate iff the normal-limit of ||a|| vanishes below
/// eps_deg * coefficient scale at every probe point.  eps_deg < 0 selects
/// the default 1e-10 * max interior ||a||.
std::vector<bool> detect_degenerate_boundary(const OperatorSpec& op,
                                             const DomainGrid& dom,
                                             double eps_deg = -1.0);

/// Fichera function  b(x) = (b^k - sum_j da^{kj}/dx_j) n_k  with the
/// inward-pointing unit normal of the segment.
double fichera_function(const OperatorSpec& op, const DomainGrid& dom,
                        const BoundarySegment& seg, const Point& x);

struct ClassifyOptions {
  double eps_deg = -1.0;        // < 0: auto 1e-10 * coefficient scale
  double eps_f = -1.0;          // < 0: auto 1e-12 * drift scale
  int probe_refine = 1;         // probe-resolution multiplier (invariance tests)
};

BoundaryClassification classify(const OperatorSpec& op, const DomainGrid& dom,
                                const ClassifyOptions& opts = {});

struct ConditionPlan {
  struct Entry {
    BoundarySegment segment;
    double t_lo = 0.0;
    double t_hi = 0.0;
    ConditionTag tag = ConditionTag::dirichlet;
    std::string label;
  };
  std::vector<Entry> entries;

  /// Tag for a boundary node.  Corner nodes belong to two faces; they take
  /// the strongest condition (dirichlet > neumann > oblique > none), with
  /// ties resolved toward the lower axis.  This realizes the convention that
  /// corners where the degenerate and non-degenerate boundary meet are
  /// conditioned with the non-degenerate side.
  ConditionTag tag_at(const DomainGrid& dom, int i, int j) const;

  /// Entry owning the given boundary node under the same priority rule.
  const Entry& entry_at(const DomainGrid& dom, int i, int j) const;
};

/// fichera convention: Dirichlet on Sigma2 and Sigma3, nothing elsewhere.
/// c2s convention: Dirichlet on Sigma3 only; every degenerate segment gets
/// the oblique first-order condition regardless of the Fichera sign.
ConditionPlan boundary_condition_plan(const BoundaryClassification& cls,
                                      Convention convention);

/// Variant for the Neumann uniqueness experiment: non-degenerate segments
/// carry Neumann rows, degenerate ones keep the oblique condition.
ConditionPlan neumann_plan(const BoundaryClassification& cls);

/// CSV report: label, sigma class, Fichera range, plan under both conventions.
void write_classification_csv(std::ostream& os, const BoundaryClassification& cls);

}  // namespace degell

#endif
