#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "shearbayes/mcmc.hpp"
#include "shearbayes/shapes.hpp"
#include "shearbayes/topo_prior.hpp"

namespace shearbayes {

/// Uniform evaluation grid: nx x ny nodes spanning the rectangle.
struct GridSpec {
  Rect rect;
  int nx = 0;  // node counts per axis
  int ny = 0;

  Vec2 node(int i, int j) const {
    return {rect.x_min + rect.width() * i / (nx - 1),
            rect.y_min + rect.height() * j / (ny - 1)};
  }
};

struct MembershipField {
  GridSpec grid;
  Eigen::MatrixXd probability;  // ny x nx, row j = y level
};

/// Geometry summary of one anomaly block from a 512-point boundary polyline.
struct ShapeStatsRow {
  long sample = 0;
  int block = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  double area = 0.0;
  double diam_max = 0.0;   // equivalent-ellipse diameters
  double diam_min = 0.0;
  double r_min = 0.0;      // extremes of the radius function
  double r_max = 0.0;
  double orientation = 0.0;     // largest principal axis, in [0, pi)
  double circ_deviation = 0.0;  // isoperimetric deficit 1 - 4 pi A / P^2
  double mu = 0.0;
};

struct ShapeStatsTable {
  std::vector<ShapeStatsRow> rows;
  long skipped_degenerate = 0;  // polygons with |area| < 1e-12
};

/// Post-burn-in sample with the highest stored log-posterior; ties break to
/// the earliest (walker, step). Returns sampling-space coordinates.
std::pair<Eigen::VectorXd, double> map_from_chain(const Chain& chain);
std::pair<ParameterVector, double> map_from_chain(const Chain& chain,
                                                  const PriorSpec& prior);

/// Coordinate-wise mean over post-burn-in samples, taken in the sampled
/// coordinates (log r / gamma for the piecewise variant) and mapped back.
ParameterVector mean_shape(const Chain& chain, const PriorSpec& prior);

/// Fraction of the given samples containing each grid node.
MembershipField membership_field(const std::vector<ParameterVector>& samples,
                                 const GridSpec& grid);

ShapeStatsTable shape_stats(const std::vector<ParameterVector>& samples,
                            int boundary_samples = 512);

/// Raw parameter vectors of the post-burn-in chain samples (all of them, in
/// (walker, step) order).
std::vector<ParameterVector> chain_samples(const Chain& chain, const PriorSpec& prior);

}  // namespace shearbayes
