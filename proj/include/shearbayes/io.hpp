#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "shearbayes/dataset.hpp"
#include "shearbayes/map_laplace.hpp"
#include "shearbayes/mcmc.hpp"
#include "shearbayes/report.hpp"
#include "shearbayes/shapes.hpp"
#include "shearbayes/topo_prior.hpp"

namespace shearbayes {

/// Plain-text field format: header `nx ny x_min x_max y_min y_max`, then
/// one line per y level with nx nodal values, %.12e.
void write_field(const std::string& path, const GridSpec& grid,
                 const Eigen::MatrixXd& values);
void write_field(const std::string& path, const EnergyField& field);
void write_field(const std::string& path, const MembershipField& field);

/// DataSet CSV: `receiver_index,time,value,parity` after an optional
/// `# noise_sigma = <v>` comment. Receiver positions are not stored; they
/// come from the acquisition configuration on import.
void write_dataset(const std::string& path, const DataSet& data);
DataSet read_dataset(const std::string& path, const std::vector<Vec2>& receivers);

/// Shape CSV with header `block,variant,field,index,value`.
void write_shape(const std::string& path, const ParameterVector& nu);
ParameterVector read_shape(const std::string& path);

/// Chain CSV with header `walker,step,log_post,accepted,p_0..p_{n-1}`.
void write_chain(const std::string& path, const Chain& chain);
Chain read_chain(const std::string& path);

void write_chain_diagnostics(const std::string& path, const Chain& chain);

void write_circles(const std::string& path, const std::vector<CircleGuess>& circles);
std::vector<CircleGuess> read_circles(const std::string& path);

/// Prior file: JSON with the variant, order, hyperparameters and detected
/// circles; the loader rebuilds the covariance deterministically.
void write_prior(const std::string& path, const PriorSpec& prior,
                 const std::vector<CircleGuess>& circles, const PriorHyper& hyper,
                 double C0_used, bool C0_satisfied);
struct PriorFile {
  PriorSpec prior;
  std::vector<CircleGuess> circles;
  PriorHyper hyper;
  double C0_used = 0.3;
  bool C0_satisfied = true;
};
PriorFile read_prior(const std::string& path);

/// Dense matrix CSV, %.12e.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

void write_cost_history(const std::string& path, const std::vector<double>& costs);

/// Laplace samples CSV: `sample,admissible,p_0..p_{n-1}`.
void write_laplace_samples(const std::string& path, const LaplaceSamples& samples);
LaplaceSamples read_laplace_samples(const std::string& path);

void write_shape_stats(const std::string& path, const ShapeStatsTable& table);

}  // namespace shearbayes
