#pragma once

#include <Eigen/Dense>
#include <vector>

#include "shearbayes/geometry.hpp"

namespace shearbayes {

enum class Parity { all, even, odd };

/// Receiver-by-time matrix of recorded wave values.
struct DataSet {
  Eigen::MatrixXd values;        // K x M
  std::vector<Vec2> receivers;   // size K
  std::vector<double> times;     // size M, strictly increasing
  double noise_sigma = 0.0;      // 0 for clean data
  Parity parity = Parity::all;

  int receiver_count() const { return static_cast<int>(values.rows()); }
  int time_count() const { return static_cast<int>(values.cols()); }

  /// Flattens in the acquisition ordering: all receivers at t_1, then all
  /// receivers at t_2, and so on.
  Eigen::VectorXd flatten() const {
    return Eigen::VectorXd::Map(values.data(), values.size());
  }

  /// Checks K,M >= 1, strictly increasing times and consistent sizes.
  void validate() const;
};

struct SplitData {
  DataSet even;  // times t_2, t_4, ... (1-based)
  DataSet odd;   // times t_1, t_3, ...
};

}  // namespace shearbayes
