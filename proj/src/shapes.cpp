#include "shearbayes/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shearbayes/errors.hpp"

namespace shearbayes {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_unit(double theta) {
  double t = theta - std::floor(theta);
  if (t >= 1.0) t = 0.0;  // guards against floor rounding at integers
  return t;
}
}  // namespace

double radius_smooth(const SmoothBlock& block, double theta) {
  double r = block.a0;
  const double base = kTwoPi * theta;
  for (int q = 1; q <= block.modes(); ++q) {
    const double ang = base * q;
    r += 2.0 * block.a[q - 1] * std::cos(ang) + 2.0 * block.b[q - 1] * std::sin(ang);
  }
  return r;
}

double radius_piecewise(const PiecewiseBlock& block, double theta) {
  const int z = block.nodes();
  const double t = wrap_unit(theta) * z;
  int j = static_cast<int>(t);
  if (j >= z) j = z - 1;
  const double frac = t - j;
  const double r0 = block.r[j];
  const double r1 = block.r[(j + 1) % z];  // r_Z = r_0
  return r0 * (1.0 - frac) + r1 * frac;
}

ParameterVector::ParameterVector(ShapeVariant variant, int blocks, int order,
                                 Eigen::VectorXd flat)
    : variant_(variant), blocks_(blocks), order_(order), flat_(std::move(flat)) {
  if (blocks_ < 0 || order_ < 0) throw ShapeError("negative block count or order");
  const long expected = static_cast<long>(blocks_) * block_size();
  if (flat_.size() != expected)
    throw ShapeError("parameter vector length " + std::to_string(flat_.size()) +
                     " does not match " + std::to_string(expected));
}

int ParameterVector::block_size() const {
  return variant_ == ShapeVariant::smooth ? 2 * order_ + 4 : order_ + 3;
}

ParameterVector ParameterVector::from_smooth(const std::vector<SmoothBlock>& blocks) {
  if (blocks.empty()) return ParameterVector(ShapeVariant::smooth, 0, 0, {});
  const int q = blocks.front().modes();
  Eigen::VectorXd flat(static_cast<long>(blocks.size()) * (2 * q + 4));
  long at = 0;
  for (const auto& blk : blocks) {
    if (blk.modes() != q || blk.b.size() != blk.a.size())
      throw ShapeError("all smooth blocks must share the same mode count Q");
    flat[at++] = blk.cx;
    flat[at++] = blk.cy;
    flat[at++] = blk.a0;
    for (int i = 0; i < q; ++i) {
      flat[at++] = blk.b[i];
      flat[at++] = blk.a[i];
    }
    flat[at++] = blk.mu;
  }
  return ParameterVector(ShapeVariant::smooth, static_cast<int>(blocks.size()), q,
                         std::move(flat));
}

ParameterVector ParameterVector::from_piecewise(const std::vector<PiecewiseBlock>& blocks) {
  if (blocks.empty()) return ParameterVector(ShapeVariant::piecewise, 0, 0, {});
  const int z = blocks.front().nodes();
  Eigen::VectorXd flat(static_cast<long>(blocks.size()) * (z + 3));
  long at = 0;
  for (const auto& blk : blocks) {
    if (blk.nodes() != z)
      throw ShapeError("all piecewise blocks must share the same node count Z");
    flat[at++] = blk.cx;
    flat[at++] = blk.cy;
    flat.segment(at, z) = blk.r;
    at += z;
    flat[at++] = blk.mu;
  }
  return ParameterVector(ShapeVariant::piecewise, static_cast<int>(blocks.size()), z,
                         std::move(flat));
}

ParameterVector ParameterVector::circle(double cx, double cy, double radius, double mu,
                                        int Q) {
  SmoothBlock blk;
  blk.cx = cx;
  blk.cy = cy;
  blk.a0 = radius;
  blk.a = Eigen::VectorXd::Zero(Q);
  blk.b = Eigen::VectorXd::Zero(Q);
  blk.mu = mu;
  return from_smooth({blk});
}

ParameterVector ParameterVector::with_flat(const Eigen::VectorXd& flat) const {
  return ParameterVector(variant_, blocks_, order_, flat);
}

Vec2 ParameterVector::center(int l) const {
  const long base = static_cast<long>(l) * block_size();
  return {flat_[base], flat_[base + 1]};
}

int ParameterVector::mu_index(int l) const {
  return (l + 1) * block_size() - 1;
}

double ParameterVector::mu(int l) const { return flat_[mu_index(l)]; }

double ParameterVector::radius(int l, double theta) const {
  if (variant_ == ShapeVariant::smooth) return radius_smooth(smooth_block(l), theta);
  return radius_piecewise(piecewise_block(l), theta);
}

SmoothBlock ParameterVector::smooth_block(int l) const {
  if (variant_ != ShapeVariant::smooth)
    throw ShapeError("parameter vector is not of the smooth variant");
  const long base = static_cast<long>(l) * block_size();
  SmoothBlock blk;
  blk.cx = flat_[base];
  blk.cy = flat_[base + 1];
  blk.a0 = flat_[base + 2];
  blk.b.resize(order_);
  blk.a.resize(order_);
  for (int q = 0; q < order_; ++q) {
    blk.b[q] = flat_[base + 3 + 2 * q];
    blk.a[q] = flat_[base + 4 + 2 * q];
  }
  blk.mu = flat_[base + block_size() - 1];
  return blk;
}

PiecewiseBlock ParameterVector::piecewise_block(int l) const {
  if (variant_ != ShapeVariant::piecewise)
    throw ShapeError("parameter vector is not of the piecewise variant");
  const long base = static_cast<long>(l) * block_size();
  PiecewiseBlock blk;
  blk.cx = flat_[base];
  blk.cy = flat_[base + 1];
  blk.r = flat_.segment(base + 2, order_);
  blk.mu = flat_[base + block_size() - 1];
  return blk;
}

std::vector<Vec2> boundary(const ParameterVector& nu, int l, int samples) {
  if (samples < 16) throw ShapeError("boundary needs at least 16 samples");
  const Vec2 c = nu.center(l);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double theta = static_cast<double>(i) / samples;
    const double r = nu.radius(l, theta);
    pts.push_back({c.x + r * std::cos(kTwoPi * theta), c.y + r * std::sin(kTwoPi * theta)});
  }
  return pts;
}

bool contains(const ParameterVector& nu, int l, const Vec2& p) {
  const Vec2 c = nu.center(l);
  const double dx = p.x - c.x;
  const double dy = p.y - c.y;
  const double dist = std::hypot(dx, dy);
  if (dist == 0.0) {
    for (int i = 0; i < 32; ++i)
      if (nu.radius(l, i / 32.0) > 0.0) return true;
    return false;
  }
  const double theta = wrap_unit(std::atan2(dy, dx) / kTwoPi);
  return dist < nu.radius(l, theta);
}

bool contains_any(const ParameterVector& nu, const Vec2& p) {
  for (int l = 0; l < nu.block_count(); ++l)
    if (contains(nu, l, p)) return true;
  return false;
}

int AdmissibilityRule::resolve_samples(const ParameterVector& nu) const {
  if (theta_samples == 0)
    return nu.variant() == ShapeVariant::smooth ? 256 : std::max(64, nu.order());
  if (theta_samples < 64) throw ConfigError("theta_samples must be at least 64");
  return theta_samples;
}

std::string AdmissibilityReport::first_failure() const {
  if (!positive_radius) return "radius not positive at a test angle";
  if (!mu_above_min) return "mu at or below the lower bound";
  if (!inside_domain) return "boundary leaves the domain";
  if (!disjoint) return "boundaries intersect";
  if (!not_nested) return "nested blocks (center inside another block)";
  return "admissible";
}

namespace {

// Proper segment intersection test via orientation signs; touching at
// endpoints counts as an intersection (conservative for admissibility).
double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double o1 = orient(p1, p2, q1);
  const double o2 = orient(p1, p2, q2);
  const double o3 = orient(q1, q2, p1);
  const double o4 = orient(q1, q2, p2);
  if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 &&
      o4 != 0)
    return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool polylines_intersect(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  const std::size_t na = a.size(), nb = b.size();
  for (std::size_t i = 0; i < na; ++i) {
    const Vec2& p1 = a[i];
    const Vec2& p2 = a[(i + 1) % na];
    for (std::size_t j = 0; j < nb; ++j) {
      if (segments_intersect(p1, p2, b[j], b[(j + 1) % nb])) return true;
    }
  }
  return false;
}

}  // namespace

AdmissibilityReport check_admissible(const ParameterVector& nu,
                                     const AdmissibilityRule& rule, const Rect& domain) {
  AdmissibilityReport rep;
  const int L = nu.block_count();
  if (L == 0) return rep;
  const int samples = rule.resolve_samples(nu);

  for (int l = 0; l < L && rep.positive_radius; ++l) {
    for (int s = 0; s < samples; ++s) {
      if (nu.radius(l, static_cast<double>(s) / samples) <= 0.0) {
        rep.positive_radius = false;
        break;
      }
    }
  }
  for (int l = 0; l < L; ++l) {
    if (!(nu.mu(l) > rule.mu_min)) {
      rep.mu_above_min = false;
      break;
    }
  }
  if (!rep.positive_radius || !rep.mu_above_min) return rep;

  std::vector<std::vector<Vec2>> polys;
  polys.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) polys.push_back(boundary(nu, l, samples));

  for (const auto& poly : polys) {
    for (const auto& p : poly) {
      if (!domain.contains(p)) {
        rep.inside_domain = false;
        return rep;
      }
    }
  }
  for (int i = 0; i < L && rep.disjoint; ++i)
    for (int j = i + 1; j < L; ++j)
      if (polylines_intersect(polys[i], polys[j])) {
        rep.disjoint = false;
        break;
      }
  if (!rep.disjoint) return rep;

  for (int i = 0; i < L && rep.not_nested; ++i)
    for (int j = 0; j < L; ++j)
      if (i != j && contains(nu, j, nu.center(i))) {
        rep.not_nested = false;
        break;
      }
  return rep;
}

bool admissible(const ParameterVector& nu, const AdmissibilityRule& rule,
                const Rect& domain) {
  return check_admissible(nu, rule, domain).ok();
}

SpeedField rasterize(const ParameterVector& nu, const Mesh& mesh, double c_background) {
  if (!admissible(nu, AdmissibilityRule{}, mesh.domain()))
    throw ContractViolation("rasterize requires an admissible parameter vector");
  SpeedField field;
  field.c2.resize(mesh.element_count());
  const double bg = c_background * c_background;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Vec2 c = mesh.centroid(e);
    double value = bg;
    for (int l = 0; l < nu.block_count(); ++l) {
      if (contains(nu, l, c)) {
        value = nu.mu(l);
        break;
      }
    }
    field.c2[e] = value;
  }
  return field;
}

}  // namespace shearbayes
