#include "shearbayes/synthetic.hpp"

#include <cmath>
#include <random>

#include "shearbayes/errors.hpp"
#include "shearbayes/rng.hpp"

namespace shearbayes {

void DataSet::validate() const {
  if (values.rows() < 1 || values.cols() < 1) throw ShapeError("empty data set");
  if (static_cast<long>(receivers.size()) != values.rows())
    throw ShapeError("receiver count does not match the value rows");
  if (static_cast<long>(times.size()) != values.cols())
    throw ShapeError("time count does not match the value columns");
  for (std::size_t m = 1; m < times.size(); ++m)
    if (times[m] <= times[m - 1]) throw ShapeError("times must be strictly increasing");
}

DataSet generate_truth(const ParameterVector& truth, const SimulationConfig& config) {
  auto mesh = build_mesh(config);
  const SpeedField speed = rasterize(truth, *mesh, config.c_background);
  config.validate(std::sqrt(speed.c2.maxCoeff()));
  const FEMSystem system = assemble(mesh, speed, config);
  const WaveSolution u = solve_forward(system, config, 1.0);
  DataSet data = record(u, config.receivers, config.record_times);
  data.noise_sigma = 0.0;
  return data;
}

DataSet add_noise(const DataSet& data, double alpha, std::uint64_t rng_seed) {
  if (alpha < 0.0) throw ConfigError("noise level alpha must be nonnegative");
  if (alpha == 0.0) return data;

  DataSet noisy = data;
  const double sigma = alpha * data.values.cwiseAbs().maxCoeff() / 100.0;
  noisy.noise_sigma = sigma;
  auto rng = substream(rng_seed, stream_tag::noise);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (long m = 0; m < noisy.values.cols(); ++m)
    for (long k = 0; k < noisy.values.rows(); ++k)
      noisy.values(k, m) += sigma * normal(rng);
  return noisy;
}

SplitData split(const DataSet& data) {
  data.validate();
  const long M = data.values.cols();
  if (M < 2) throw ShapeError("splitting needs at least two recording times");

  SplitData out;
  out.even.receivers = data.receivers;
  out.odd.receivers = data.receivers;
  out.even.noise_sigma = data.noise_sigma;
  out.odd.noise_sigma = data.noise_sigma;
  out.even.parity = Parity::even;
  out.odd.parity = Parity::odd;

  const long n_even = M / 2;
  const long n_odd = M - n_even;
  out.even.values.resize(data.values.rows(), n_even);
  out.odd.values.resize(data.values.rows(), n_odd);
  // 1-based convention: column 0 is t_1 (odd), column 1 is t_2 (even), ...
  for (long m = 0; m < M; ++m) {
    if (m % 2 == 0) {
      out.odd.values.col(m / 2) = data.values.col(m);
      out.odd.times.push_back(data.times[static_cast<std::size_t>(m)]);
    } else {
      out.even.values.col(m / 2) = data.values.col(m);
      out.even.times.push_back(data.times[static_cast<std::size_t>(m)]);
    }
  }
  return out;
}

}  // namespace shearbayes
