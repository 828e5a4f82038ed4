#pragma once

#include <array>
#include <memory>
#include <vector>

#include "shearbayes/geometry.hpp"

namespace shearbayes {

struct BoundaryEdge {
  int a = 0;  // node ids
  int b = 0;
  double length = 0.0;
};

/// Structured P1 triangulation of a rectangle: nx x ny cells of size
/// hx x hy, each split along its (i,j)-(i+1,j+1) diagonal into two right
/// triangles. Nodes are numbered row by row, node(i,j) = j*(nx+1)+i.
/// Boundary edges on y = y_max form the physical interface Sigma; every
/// other boundary edge is an artificial truncation edge.
class Mesh {
 public:
  /// Rounds each side to the nearest whole number of cells of size ~dx and
  /// adjusts the per-axis steps so the cells tile the rectangle exactly.
  /// Throws ConfigError when dx exceeds a side length.
  static std::shared_ptr<const Mesh> build(const Rect& domain, double dx);

  int nx_cells() const { return nx_; }
  int ny_cells() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  const Rect& domain() const { return domain_; }

  int node_count() const { return (nx_ + 1) * (ny_ + 1); }
  int element_count() const { return 2 * nx_ * ny_; }
  int node_id(int i, int j) const { return j * (nx_ + 1) + i; }
  Vec2 node(int id) const;
  Vec2 node(int i, int j) const;

  /// Node ids of element e, counter-clockwise. Even e is the lower-right
  /// triangle of cell e/2, odd e the upper-left one.
  std::array<int, 3> element(int e) const;
  Vec2 centroid(int e) const;
  double element_area() const { return 0.5 * hx_ * hy_; }
  double area() const { return domain_.width() * domain_.height(); }

  const std::vector<BoundaryEdge>& sigma_edges() const { return sigma_; }
  const std::vector<BoundaryEdge>& artificial_edges() const { return artificial_; }

  struct InterpStencil {
    std::array<int, 3> nodes{};
    std::array<double, 3> weights{};
  };

  /// P1 interpolation stencil for a point inside the closed domain.
  /// Throws DomainError for points outside.
  InterpStencil locate(const Vec2& p) const;

 private:
  Mesh() = default;

  int nx_ = 0, ny_ = 0;
  double hx_ = 0.0, hy_ = 0.0;
  Rect domain_;
  std::vector<BoundaryEdge> sigma_;
  std::vector<BoundaryEdge> artificial_;
};

}  // namespace shearbayes
