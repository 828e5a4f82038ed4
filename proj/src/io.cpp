#include "shearbayes/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "shearbayes/errors.hpp"

namespace shearbayes {

namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double to_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() && s.find_first_not_of(" \t", pos) != std::string::npos)
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("cannot parse number '" + s + "' in " + context);
  }
}

std::string parity_name(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    default: return "all";
  }
}

Parity parity_from(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  if (s == "all") return Parity::all;
  throw IoError("unknown parity tag '" + s + "'");
}

}  // namespace

void write_field(const std::string& path, const GridSpec& grid,
                 const Eigen::MatrixXd& values) {
  if (values.rows() != grid.ny || values.cols() != grid.nx)
    throw ShapeError("field values do not match the grid");
  auto out = open_out(path);
  out << grid.nx << ' ' << grid.ny << ' ' << fmt(grid.rect.x_min) << ' '
      << fmt(grid.rect.x_max) << ' ' << fmt(grid.rect.y_min) << ' '
      << fmt(grid.rect.y_max) << '\n';
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i) out << ' ';
      out << fmt(values(j, i));
    }
    out << '\n';
  }
}

void write_field(const std::string& path, const EnergyField& field) {
  const Mesh& mesh = *field.mesh;
  const int nx = mesh.nx_cells() + 1;
  const int ny = mesh.ny_cells() + 1;
  Eigen::MatrixXd values(ny, nx);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) values(j, i) = field.values[mesh.node_id(i, j)];
  write_field(path, GridSpec{mesh.domain(), nx, ny}, values);
}

void write_field(const std::string& path, const MembershipField& field) {
  write_field(path, field.grid, field.probability);
}

void write_dataset(const std::string& path, const DataSet& data) {
  auto out = open_out(path);
  out << "# noise_sigma = " << fmt(data.noise_sigma) << '\n';
  out << "receiver_index,time,value,parity\n";
  const std::string parity = parity_name(data.parity);
  for (int k = 0; k < data.receiver_count(); ++k)
    for (int m = 0; m < data.time_count(); ++m)
      out << k << ',' << fmt(data.times[static_cast<std::size_t>(m)]) << ','
          << fmt(data.values(k, m)) << ',' << parity << '\n';
}

DataSet read_dataset(const std::string& path, const std::vector<Vec2>& receivers) {
  auto in = open_in(path);
  std::string line;
  double noise_sigma = 0.0;
  bool have_header = false;
  bool has_parity_col = false;
  Parity parity = Parity::all;
  bool parity_set = false;

  struct Entry {
    int k;
    double t, v;
  };
  std::vector<Entry> entries;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (line.find("noise_sigma") != std::string::npos && eq != std::string::npos)
        noise_sigma = to_double(line.substr(eq + 1), path);
      continue;
    }
    if (!have_header) {
      const auto fields = split_csv(line);
      if (fields.size() < 3 || fields[0] != "receiver_index")
        throw IoError("unexpected data header in " + path);
      has_parity_col = fields.size() >= 4 && fields[3] == "parity";
      have_header = true;
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() < 3) throw IoError("short row in " + path);
    Entry e;
    e.k = static_cast<int>(to_double(fields[0], path));
    e.t = to_double(fields[1], path);
    e.v = to_double(fields[2], path);
    if (has_parity_col && fields.size() >= 4) {
      const Parity p = parity_from(fields[3]);
      if (parity_set && p != parity) throw IoError("mixed parity tags in " + path);
      parity = p;
      parity_set = true;
    }
    entries.push_back(e);
  }
  if (entries.empty()) throw IoError("no data rows in " + path);

  std::vector<double> times;
  for (const auto& e : entries) times.push_back(e.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              times.end());

  int max_k = 0;
  for (const auto& e : entries) max_k = std::max(max_k, e.k);
  if (static_cast<std::size_t>(max_k + 1) != receivers.size())
    throw IoError("data in " + path + " references " + std::to_string(max_k + 1) +
                  " receivers, configuration has " + std::to_string(receivers.size()));

  DataSet data;
  data.receivers = receivers;
  data.times = times;
  data.noise_sigma = noise_sigma;
  data.parity = parity;
  data.values.resize(static_cast<long>(receivers.size()), static_cast<long>(times.size()));
  auto time_index = [&](double t) {
    const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
    return static_cast<long>(std::distance(times.begin(), it));
  };
  for (const auto& e : entries) data.values(e.k, time_index(e.t)) = e.v;
  data.validate();
  return data;
}

void write_shape(const std::string& path, const ParameterVector& nu) {
  auto out = open_out(path);
  out << "block,variant,field,index,value\n";
  const bool smooth = nu.variant() == ShapeVariant::smooth;
  const std::string variant = smooth ? "smooth" : "piecewise";
  for (int l = 0; l < nu.block_count(); ++l) {
    auto row = [&](const std::string& field, int index, double value) {
      out << l << ',' << variant << ',' << field << ',' << index << ',' << fmt(value)
          << '\n';
    };
    const Vec2 c = nu.center(l);
    row("cx", 0, c.x);
    row("cy", 0, c.y);
    if (smooth) {
      const SmoothBlock blk = nu.smooth_block(l);
      row("a0", 0, blk.a0);
      for (int q = 1; q <= nu.order(); ++q) {
        row("b", q, blk.b[q - 1]);
        row("a", q, blk.a[q - 1]);
      }
    } else {
      const PiecewiseBlock blk = nu.piecewise_block(l);
      for (int j = 0; j < nu.order(); ++j) row("r", j, blk.r[j]);
    }
    row("mu", 0, nu.mu(l));
  }
}

ParameterVector read_shape(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_csv(line)[0] != "block")
    throw IoError("unexpected shape header in " + path);

  struct Raw {
    std::string variant;
    double cx = 0, cy = 0, a0 = 0, mu = 0;
    std::map<int, double> a, b, r;
  };
  std::map<int, Raw> blocks;

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw IoError("short row in " + path);
    Raw& blk = blocks[static_cast<int>(to_double(f[0], path))];
    blk.variant = f[1];
    const int index = static_cast<int>(to_double(f[3], path));
    const double value = to_double(f[4], path);
    if (f[2] == "cx") blk.cx = value;
    else if (f[2] == "cy") blk.cy = value;
    else if (f[2] == "a0") blk.a0 = value;
    else if (f[2] == "mu") blk.mu = value;
    else if (f[2] == "a") blk.a[index] = value;
    else if (f[2] == "b") blk.b[index] = value;
    else if (f[2] == "r") blk.r[index] = value;
    else throw IoError("unknown shape field '" + f[2] + "' in " + path);
  }
  if (blocks.empty()) throw IoError("no shape rows in " + path);

  const bool smooth = blocks.begin()->second.variant == "smooth";
  if (smooth) {
    std::vector<SmoothBlock> out;
    for (auto& [l, raw] : blocks) {
      SmoothBlock blk;
      blk.cx = raw.cx;
      blk.cy = raw.cy;
      blk.a0 = raw.a0;
      blk.mu = raw.mu;
      const int Q = static_cast<int>(raw.a.size());
      blk.a.resize(Q);
      blk.b.resize(Q);
      for (int q = 1; q <= Q; ++q) {
        blk.a[q - 1] = raw.a.at(q);
        blk.b[q - 1] = raw.b.at(q);
      }
      out.push_back(blk);
    }
    return ParameterVector::from_smooth(out);
  }
  std::vector<PiecewiseBlock> out;
  for (auto& [l, raw] : blocks) {
    PiecewiseBlock blk;
    blk.cx = raw.cx;
    blk.cy = raw.cy;
    blk.mu = raw.mu;
    const int Z = static_cast<int>(raw.r.size());
    blk.r.resize(Z);
    for (int j = 0; j < Z; ++j) blk.r[j] = raw.r.at(j);
    out.push_back(blk);
  }
  return ParameterVector::from_piecewise(out);
}

void write_chain(const std::string& path, const Chain& chain) {
  auto out = open_out(path);
  out << "walker,step,log_post,accepted";
  for (int i = 0; i < chain.dim; ++i) out << ",p_" << i;
  out << '\n';
  for (int w = 0; w < chain.walkers; ++w)
    for (long s = 0; s < chain.kept; ++s) {
      out << w << ',' << s << ',' << fmt(chain.log_post(w, s)) << ','
          << static_cast<int>(chain.moved(w, s));
      const auto row = chain.samples.row(chain.row(w, s));
      for (int i = 0; i < chain.dim; ++i) out << ',' << fmt(row[i]);
      out << '\n';
    }
}

Chain read_chain(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty chain file " + path);
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "walker")
    throw IoError("unexpected chain header in " + path);
  const int dim = static_cast<int>(header.size()) - 4;

  struct Row {
    int w;
    long s;
    double lp;
    std::uint8_t moved;
    Eigen::VectorXd p;
  };
  std::vector<Row> rows;
  int max_w = -1;
  long max_s = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (static_cast<int>(f.size()) != dim + 4) throw IoError("short chain row in " + path);
    Row r;
    r.w = static_cast<int>(to_double(f[0], path));
    r.s = static_cast<long>(to_double(f[1], path));
    r.lp = to_double(f[2], path);
    r.moved = to_double(f[3], path) != 0.0 ? 1 : 0;
    r.p.resize(dim);
    for (int i = 0; i < dim; ++i) r.p[i] = to_double(f[4 + static_cast<std::size_t>(i)], path);
    max_w = std::max(max_w, r.w);
    max_s = std::max(max_s, r.s);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw IoError("chain file " + path + " has no samples");

  Chain chain;
  chain.walkers = max_w + 1;
  chain.kept = max_s + 1;
  chain.dim = dim;
  chain.burn_index = chain.kept / 5;
  chain.raw_steps = 0;  // unknown after a round-trip
  chain.samples.resize(static_cast<long>(chain.walkers) * chain.kept, dim);
  chain.log_post.resize(chain.walkers, chain.kept);
  chain.moved.resize(chain.walkers, chain.kept);
  chain.accepted = Eigen::VectorXi::Zero(chain.walkers);
  if (static_cast<long>(rows.size()) != static_cast<long>(chain.walkers) * chain.kept)
    throw IoError("chain file " + path + " is missing rows");
  for (const auto& r : rows) {
    chain.samples.row(chain.row(r.w, r.s)) = r.p.transpose();
    chain.log_post(r.w, r.s) = r.lp;
    chain.moved(r.w, r.s) = r.moved;
    chain.accepted[r.w] += r.moved;
  }
  return chain;
}

void write_chain_diagnostics(const std::string& path, const Chain& chain) {
  json j;
  j["walkers"] = chain.walkers;
  j["dimension"] = chain.dim;
  j["kept_steps"] = chain.kept;
  j["burn_index"] = chain.burn_index;
  j["raw_steps"] = chain.raw_steps;
  std::vector<double> rates;
  for (int w = 0; w < chain.walkers; ++w) rates.push_back(chain.acceptance_rate(w));
  j["acceptance_rate"] = rates;
  j["warnings"] = chain.warnings;
  open_out(path) << j.dump(2) << '\n';
}

void write_circles(const std::string& path, const std::vector<CircleGuess>& circles) {
  auto out = open_out(path);
  out << "cx,cy,rho0,fraction_id\n";
  for (const auto& c : circles)
    out << fmt(c.cx) << ',' << fmt(c.cy) << ',' << fmt(c.rho0) << ',' << c.fraction_id
        << '\n';
}

std::vector<CircleGuess> read_circles(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_csv(line)[0] != "cx")
    throw IoError("unexpected circles header in " + path);
  std::vector<CircleGuess> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 4) throw IoError("short circle row in " + path);
    CircleGuess c;
    c.cx = to_double(f[0], path);
    c.cy = to_double(f[1], path);
    c.rho0 = to_double(f[2], path);
    c.fraction_id = static_cast<int>(to_double(f[3], path));
    out.push_back(c);
  }
  return out;
}

namespace {

json rect_to_json(const Rect& r) {
  return {{"x_min", r.x_min}, {"x_max", r.x_max}, {"y_min", r.y_min}, {"y_max", r.y_max}};
}

Rect rect_from_json(const json& j) {
  return {j.at("x_min"), j.at("x_max"), j.at("y_min"), j.at("y_max")};
}

}  // namespace

void write_prior(const std::string& path, const PriorSpec& prior,
                 const std::vector<CircleGuess>& circles, const PriorHyper& hyper,
                 double C0_used, bool C0_satisfied) {
  json j;
  j["variant"] = prior.variant() == ShapeVariant::smooth ? "smooth" : "piecewise";
  j["order"] = prior.nu0().order();
  j["domain"] = rect_to_json(prior.domain());
  j["rule"] = {{"theta_samples", prior.rule().theta_samples},
               {"mu_min", prior.rule().mu_min}};
  j["hyper"] = {{"var_center", hyper.var_center},
                {"var_a0", hyper.var_a0},
                {"var_mu", hyper.var_mu},
                {"fourier_decay_s", hyper.fourier_decay_s},
                {"mu_background", hyper.mu_background},
                {"matern",
                 {{"nu", hyper.matern.nu}, {"rho", hyper.matern.rho},
                  {"sigma", hyper.matern.sigma}}}};
  j["topo"] = {{"C0", C0_used}, {"C0_satisfied", C0_satisfied}};
  json circ = json::array();
  for (const auto& c : circles)
    circ.push_back({{"cx", c.cx}, {"cy", c.cy}, {"rho0", c.rho0},
                    {"fraction_id", c.fraction_id}, {"peak", c.peak}});
  j["circles"] = circ;
  j["nu0"] = std::vector<double>(prior.nu0().flat().data(),
                                 prior.nu0().flat().data() + prior.nu0().dim());
  open_out(path) << j.dump(2) << '\n';
}

PriorFile read_prior(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse prior file " + path + ": " + e.what());
  }
  PriorFile file;
  try {
    const ShapeVariant variant =
        j.at("variant") == "smooth" ? ShapeVariant::smooth : ShapeVariant::piecewise;
    const int order = j.at("order");
    file.hyper.var_center = j.at("hyper").at("var_center");
    file.hyper.var_a0 = j.at("hyper").at("var_a0");
    file.hyper.var_mu = j.at("hyper").at("var_mu");
    file.hyper.fourier_decay_s = j.at("hyper").at("fourier_decay_s");
    file.hyper.mu_background = j.at("hyper").at("mu_background");
    file.hyper.matern.nu = j.at("hyper").at("matern").at("nu");
    file.hyper.matern.rho = j.at("hyper").at("matern").at("rho");
    file.hyper.matern.sigma = j.at("hyper").at("matern").at("sigma");
    file.hyper.domain = rect_from_json(j.at("domain"));
    file.hyper.rule.theta_samples = j.at("rule").at("theta_samples");
    file.hyper.rule.mu_min = j.at("rule").at("mu_min");
    file.C0_used = j.at("topo").at("C0");
    file.C0_satisfied = j.at("topo").at("C0_satisfied");
    for (const auto& c : j.at("circles")) {
      CircleGuess g;
      g.cx = c.at("cx");
      g.cy = c.at("cy");
      g.rho0 = c.at("rho0");
      g.fraction_id = c.value("fraction_id", 0);
      g.peak = c.value("peak", 0.0);
      file.circles.push_back(g);
    }
    file.prior = build_prior(file.circles, variant, order, file.hyper);
    if (j.contains("nu0")) {
      const std::vector<double> nu0 = j.at("nu0");
      if (static_cast<int>(nu0.size()) != file.prior.dim())
        throw IoError("prior file nu0 has the wrong dimension");
    }
  } catch (const json::exception& e) {
    throw IoError("malformed prior file " + path + ": " + e.what());
  }
  return file;
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << fmt(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    std::vector<double> row;
    for (const auto& s : f) row.push_back(to_double(s, path));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix file " + path);
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw IoError("ragged matrix in " + path);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
  }
  return m;
}

void write_cost_history(const std::string& path, const std::vector<double>& costs) {
  auto out = open_out(path);
  out << "iteration,cost\n";
  for (std::size_t i = 0; i < costs.size(); ++i) out << i << ',' << fmt(costs[i]) << '\n';
}

void write_laplace_samples(const std::string& path, const LaplaceSamples& samples) {
  auto out = open_out(path);
  out << "sample,admissible";
  for (long i = 0; i < samples.samples.cols(); ++i) out << ",p_" << i;
  out << '\n';
  for (long s = 0; s < samples.samples.rows(); ++s) {
    out << s << ',' << static_cast<int>(samples.admissible[static_cast<std::size_t>(s)]);
    for (long i = 0; i < samples.samples.cols(); ++i) out << ',' << fmt(samples.samples(s, i));
    out << '\n';
  }
}

LaplaceSamples read_laplace_samples(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty samples file " + path);
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "sample")
    throw IoError("unexpected samples header in " + path);
  const int dim = static_cast<int>(header.size()) - 2;

  std::vector<std::pair<std::uint8_t, Eigen::VectorXd>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (static_cast<int>(f.size()) != dim + 2) throw IoError("short sample row in " + path);
    Eigen::VectorXd p(dim);
    for (int i = 0; i < dim; ++i) p[i] = to_double(f[2 + static_cast<std::size_t>(i)], path);
    rows.emplace_back(to_double(f[1], path) != 0.0 ? 1 : 0, std::move(p));
  }
  if (rows.empty()) throw IoError("samples file " + path + " has no rows");

  LaplaceSamples out;
  out.samples.resize(static_cast<long>(rows.size()), dim);
  out.admissible.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.admissible[r] = rows[r].first;
    out.samples.row(static_cast<long>(r)) = rows[r].second.transpose();
  }
  return out;
}

void write_shape_stats(const std::string& path, const ShapeStatsTable& table) {
  auto out = open_out(path);
  out << "# skipped_degenerate = " << table.skipped_degenerate << '\n';
  out << "sample,block,centroid_x,centroid_y,area,diam_max,diam_min,r_min,r_max,"
         "orientation,circ_deviation,mu\n";
  for (const auto& r : table.rows) {
    out << r.sample << ',' << r.block << ',' << fmt(r.centroid_x) << ',' << fmt(r.centroid_y)
        << ',' << fmt(r.area) << ',' << fmt(r.diam_max) << ',' << fmt(r.diam_min) << ','
        << fmt(r.r_min) << ',' << fmt(r.r_max) << ',' << fmt(r.orientation) << ','
        << fmt(r.circ_deviation) << ',' << fmt(r.mu) << '\n';
  }
}

}  // namespace shearbayes
