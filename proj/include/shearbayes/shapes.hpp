#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "shearbayes/geometry.hpp"
#include "shearbayes/mesh.hpp"

namespace shearbayes {

enum class ShapeVariant { smooth, piecewise };

/// Star-shaped anomaly with a trigonometric-polynomial radius
///   r(theta) = a0 + 2 sum_q a_q cos(2 pi q theta) + 2 sum_q b_q sin(2 pi q theta),
/// theta in [0,1). mu is the dimensionless squared wave speed inside.
struct SmoothBlock {
  double cx = 0.0;
  double cy = 0.0;
  double a0 = 0.0;
  Eigen::VectorXd b;  // b[q-1], q = 1..Q
  Eigen::VectorXd a;  // a[q-1], q = 1..Q
  double mu = 0.0;

  int modes() const { return static_cast<int>(a.size()); }
};

/// Star-shaped anomaly with a piecewise-linear radius on the uniform angle
/// grid theta_j = j/Z. The closure r_Z = r_0 is implicit and never stored.
struct PiecewiseBlock {
  double cx = 0.0;
  double cy = 0.0;
  Eigen::VectorXd r;  // r[j], j = 0..Z-1
  double mu = 0.0;

  int nodes() const { return static_cast<int>(r.size()); }
};

double radius_smooth(const SmoothBlock& block, double theta);
double radius_piecewise(const PiecewiseBlock& block, double theta);

/// Flattened anomaly parameters: L blocks of one variant in block order.
/// Smooth block layout    (cx, cy, a0, b1, a1, ..., bQ, aQ, mu), length 2Q+4.
/// Piecewise block layout (cx, cy, r0, ..., r_{Z-1}, mu),        length Z+3.
class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(ShapeVariant variant, int blocks, int order, Eigen::VectorXd flat);

  static ParameterVector from_smooth(const std::vector<SmoothBlock>& blocks);
  static ParameterVector from_piecewise(const std::vector<PiecewiseBlock>& blocks);
  /// Smooth circle: all Fourier coefficients zero.
  static ParameterVector circle(double cx, double cy, double radius, double mu, int Q);

  ShapeVariant variant() const { return variant_; }
  int block_count() const { return blocks_; }
  /// Q for the smooth variant, Z for the piecewise one.
  int order() const { return order_; }
  int block_size() const;
  int dim() const { return static_cast<int>(flat_.size()); }

  const Eigen::VectorXd& flat() const { return flat_; }
  Eigen::VectorXd& flat() { return flat_; }
  ParameterVector with_flat(const Eigen::VectorXd& flat) const;

  Vec2 center(int l) const;
  double mu(int l) const;
  int mu_index(int l) const;
  double radius(int l, double theta) const;
  SmoothBlock smooth_block(int l) const;
  PiecewiseBlock piecewise_block(int l) const;

 private:
  ShapeVariant variant_ = ShapeVariant::smooth;
  int blocks_ = 0;
  int order_ = 0;
  Eigen::VectorXd flat_;
};

/// Uniformly sampled boundary polyline q(theta_i), theta_i = i/samples,
/// i = 0..samples-1; the polyline closes back onto its first point.
std::vector<Vec2> boundary(const ParameterVector& nu, int l, int samples);

/// Strict star-shape membership: |p - center| < r(theta_p). Boundary points
/// are outside. The center itself is inside whenever r > 0 somewhere.
bool contains(const ParameterVector& nu, int l, const Vec2& p);
/// True when any block contains p.
bool contains_any(const ParameterVector& nu, const Vec2& p);

struct AdmissibilityRule {
  /// Number of boundary test angles; 0 picks the default (256 smooth,
  /// Z piecewise). Explicit values below 64 are rejected.
  int theta_samples = 0;
  double mu_min = 0.0;

  int resolve_samples(const ParameterVector& nu) const;
};

struct AdmissibilityReport {
  bool positive_radius = true;
  bool mu_above_min = true;
  bool inside_domain = true;
  bool disjoint = true;
  bool not_nested = true;

  bool ok() const {
    return positive_radius && mu_above_min && inside_domain && disjoint && not_nested;
  }
  std::string first_failure() const;
};

AdmissibilityReport check_admissible(const ParameterVector& nu,
                                     const AdmissibilityRule& rule, const Rect& domain);
bool admissible(const ParameterVector& nu, const AdmissibilityRule& rule,
                const Rect& domain);

/// Per-element squared speed on a FEM mesh.
struct SpeedField {
  Eigen::VectorXd c2;
};

/// Element value is block mu (as c^2) when the element centroid lies in the
/// block, background c^2 otherwise; blocks are tested in order and the first
/// containing block wins. Throws ContractViolation for inadmissible nu
/// (checked with the default rule on the mesh domain).
SpeedField rasterize(const ParameterVector& nu, const Mesh& mesh, double c_background);

}  // namespace shearbayes
