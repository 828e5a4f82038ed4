#include "shearbayes/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "shearbayes/errors.hpp"

namespace shearbayes {

std::pair<Eigen::VectorXd, double> map_from_chain(const Chain& chain) {
  if (chain.kept <= chain.burn_index || chain.walkers < 1)
    throw ShapeError("chain has no post-burn-in samples");
  int best_w = 0;
  long best_s = chain.burn_index;
  double best = -std::numeric_limits<double>::infinity();
  for (int w = 0; w < chain.walkers; ++w) {
    for (long s = chain.burn_index; s < chain.kept; ++s) {
      const double lp = chain.log_post(w, s);
      if (lp > best) {
        best = lp;
        best_w = w;
        best_s = s;
      }
    }
  }
  return {chain.samples.row(chain.row(best_w, best_s)).transpose(), best};
}

std::pair<ParameterVector, double> map_from_chain(const Chain& chain,
                                                  const PriorSpec& prior) {
  auto [y, lp] = map_from_chain(chain);
  return {prior.to_raw(y), lp};
}

ParameterVector mean_shape(const Chain& chain, const PriorSpec& prior) {
  if (chain.kept <= chain.burn_index) throw ShapeError("chain has no post-burn-in samples");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(chain.dim);
  long count = 0;
  for (int w = 0; w < chain.walkers; ++w)
    for (long s = chain.burn_index; s < chain.kept; ++s) {
      mean += chain.samples.row(chain.row(w, s)).transpose();
      ++count;
    }
  mean /= static_cast<double>(count);
  return prior.to_raw(mean);
}

MembershipField membership_field(const std::vector<ParameterVector>& samples,
                                 const GridSpec& grid) {
  if (samples.empty()) throw ShapeError("membership field needs at least one sample");
  if (grid.nx < 2 || grid.ny < 2) throw ConfigError("membership grid needs nx, ny >= 2");

  MembershipField field;
  field.grid = grid;
  field.probability = Eigen::MatrixXd::Zero(grid.ny, grid.nx);
  for (const auto& nu : samples) {
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        if (contains_any(nu, grid.node(i, j))) field.probability(j, i) += 1.0;
  }
  field.probability /= static_cast<double>(samples.size());
  return field;
}

namespace {

struct PolygonMoments {
  double area = 0.0;       // signed
  double cx = 0.0, cy = 0.0;
  double ixx = 0.0, iyy = 0.0, ixy = 0.0;  // central second moments
  double perimeter = 0.0;
};

PolygonMoments polygon_moments(const std::vector<Vec2>& pts) {
  PolygonMoments m;
  const std::size_t n = pts.size();
  double a2 = 0.0, cx6 = 0.0, cy6 = 0.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    const double cross = p.x * q.y - q.x * p.y;
    a2 += cross;
    cx6 += (p.x + q.x) * cross;
    cy6 += (p.y + q.y) * cross;
    sxx += (p.x * p.x + p.x * q.x + q.x * q.x) * cross;
    syy += (p.y * p.y + p.y * q.y + q.y * q.y) * cross;
    sxy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * cross;
    m.perimeter += std::hypot(q.x - p.x, q.y - p.y);
  }
  m.area = 0.5 * a2;
  if (std::abs(m.area) < 1e-300) return m;
  m.cx = cx6 / (6.0 * m.area);
  m.cy = cy6 / (6.0 * m.area);
  // Second moments about the origin, then shifted to the centroid.
  const double oxx = sxx / 12.0;
  const double oyy = syy / 12.0;
  const double oxy = sxy / 24.0;
  m.ixx = oxx - m.area * m.cx * m.cx;
  m.iyy = oyy - m.area * m.cy * m.cy;
  m.ixy = oxy - m.area * m.cx * m.cy;
  return m;
}

}  // namespace

ShapeStatsTable shape_stats(const std::vector<ParameterVector>& samples,
                            int boundary_samples) {
  ShapeStatsTable table;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const ParameterVector& nu = samples[s];
    for (int l = 0; l < nu.block_count(); ++l) {
      const auto pts = boundary(nu, l, boundary_samples);
      const PolygonMoments m = polygon_moments(pts);
      if (std::abs(m.area) < 1e-12) {
        ++table.skipped_degenerate;
        continue;
      }

      ShapeStatsRow row;
      row.sample = static_cast<long>(s);
      row.block = l;
      row.area = std::abs(m.area);
      row.centroid_x = m.cx;
      row.centroid_y = m.cy;
      row.circ_deviation =
          1.0 - 4.0 * std::numbers::pi * row.area / (m.perimeter * m.perimeter);

      // Equivalent ellipse: covariance C = I/A has eigenvalues (p/2)^2 for
      // semi-axes p, so the diameters are 4 sqrt(eig).
      Eigen::Matrix2d cov;
      cov << m.ixx / m.area, m.ixy / m.area, m.ixy / m.area, m.iyy / m.area;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
      const Eigen::Vector2d ev = eig.eigenvalues().cwiseMax(0.0);
      row.diam_min = 4.0 * std::sqrt(ev[0]);
      row.diam_max = 4.0 * std::sqrt(ev[1]);
      const Eigen::Vector2d axis = eig.eigenvectors().col(1);  // largest eigenvalue
      double angle = std::atan2(axis[1], axis[0]);
      if (angle < 0.0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      row.orientation = angle;

      double r_min = std::numeric_limits<double>::max();
      double r_max = std::numeric_limits<double>::lowest();
      for (int i = 0; i < boundary_samples; ++i) {
        const double r = nu.radius(l, static_cast<double>(i) / boundary_samples);
        r_min = std::min(r_min, r);
        r_max = std::max(r_max, r);
      }
      row.r_min = r_min;
      row.r_max = r_max;
      row.mu = nu.mu(l);
      table.rows.push_back(row);
    }
  }
  return table;
}

std::vector<ParameterVector> chain_samples(const Chain& chain, const PriorSpec& prior) {
  std::vector<ParameterVector> out;
  out.reserve(static_cast<std::size_t>(chain.post_burn_count()));
  for (int w = 0; w < chain.walkers; ++w)
    for (long s = chain.burn_index; s < chain.kept; ++s)
      out.push_back(prior.to_raw(chain.samples.row(chain.row(w, s)).transpose()));
  return out;
}

}  // namespace shearbayes
