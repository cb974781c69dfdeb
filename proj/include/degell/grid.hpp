#ifndef DEGELL_GRID_HPP
#define DEGELL_GRID_HPP

#include <array>
#include <string>
#include <vector>

#include "degell/common.hpp"

namespace degell {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> x;  // strictly increasing, x.front()==lo, x.back()==hi

  int n() const { return static_cast<int>(x.size()); }

  static GridAxis uniform(double lo, double hi, int n);
  /// Nodes clustered toward `lo`: x_k = lo + (hi-lo) * (k/(n-1))^power.
  static GridAxis graded(double lo, double hi, int n, double power);
};

/// One face of the rectangle (or one endpoint of the interval).
/// side 0 is the low-coordinate face of `axis`, side 1 the high one.
struct BoundarySegment {
  int axis = 0;
  int side = 0;
  std::string label;
};

/// Axis-aligned tensor grid in one or two dimensions with labelled
/// boundary segments covering the topological boundary exactly once.
struct DomainGrid {
  int dim = 1;
  std::vector<GridAxis> axes;
  std::vector<BoundarySegment> segments;

  static DomainGrid interval(double lo, double hi, int n);
  static DomainGrid rectangle(std::array<double, 2> xb, std::array<double, 2> yb,
                              int nx, int ny);
  static DomainGrid from_axes(std::vector<GridAxis> axes);

  int nx() const { return axes[0].n(); }
  int ny() const { return dim > 1 ? axes[1].n() : 1; }
  int num_nodes() const { return nx() * ny(); }

  int index(int i, int j = 0) const { return i + nx() * j; }
  void unpack(int k, int& i, int& j) const {
    i = k % nx();
    j = k / nx();
  }
  Point node(int i, int j = 0) const;
  Point node_at(int k) const {
    int i, j;
    unpack(k, i, j);
    return node(i, j);
  }

  bool is_boundary(int i, int j) const;
  bool node_on_segment(int i, int j, const BoundarySegment& seg) const;
  /// Tangential coordinate of a face node (the running coordinate along the
  /// face); zero in one dimension where a face is a single point.
  double face_coord(const BoundarySegment& seg, int i, int j) const;

  Eigen::VectorXd inward_normal(const BoundarySegment& seg) const;
  const BoundarySegment& segment_by_label(const std::string& label) const;

  /// Face nodes, with the option to drop corner nodes (the face interior).
  std::vector<int> segment_nodes(const BoundarySegment& seg, bool include_corners) const;

  void validate() const;
};

}  // namespace degell

#endif
