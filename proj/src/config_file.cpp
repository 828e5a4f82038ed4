#include "shearbayes/config_file.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "shearbayes/errors.hpp"
#include "shearbayes/io.hpp"

namespace shearbayes {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string path;

  bool has(const std::string& section, const std::string& key) const {
    const auto it = sections.find(section);
    return it != sections.end() && it->second.count(key) > 0;
  }
  std::string get(const std::string& section, const std::string& key) const {
    return sections.at(section).at(key);
  }
  double number(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = get(section, key);
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse [" + section + "] " + key + " = '" + s + "'");
    }
  }
  long integer(const std::string& section, const std::string& key, long fallback) const {
    return static_cast<long>(number(section, key, static_cast<double>(fallback)));
  }
  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string s = get(section, key);
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("cannot parse boolean [" + section + "] " + key + " = '" + s + "'");
  }
  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
  }
};

IniFile parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration file: " + path);
  IniFile ini;
  ini.path = path;
  std::string line, section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    ini.sections[section][key] = trim(line.substr(eq + 1));
  }
  return ini;
}

ParameterVector parse_truth(const IniFile& ini, int Q) {
  if (ini.has("truth", "shape_file")) return read_shape(ini.get("truth", "shape_file"));

  std::vector<SmoothBlock> blocks;
  for (int i = 1;; ++i) {
    const std::string key = "circle" + std::to_string(i);
    if (!ini.has("truth", key)) break;
    std::istringstream ss(ini.get("truth", key));
    SmoothBlock blk;
    if (!(ss >> blk.cx >> blk.cy >> blk.a0 >> blk.mu))
      throw ConfigError("truth " + key + " needs 'cx cy radius mu'");
    blk.a = Eigen::VectorXd::Zero(Q);
    blk.b = Eigen::VectorXd::Zero(Q);
    blocks.push_back(blk);
  }
  if (blocks.empty())
    throw ConfigError("truth section needs circle1 = 'cx cy radius mu' or shape_file");
  return ParameterVector::from_smooth(blocks);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  const IniFile ini = parse_ini(path);
  RunConfig cfg;

  cfg.data.domain.x_min = ini.number("domain", "x_min", 0.0);
  cfg.data.domain.x_max = ini.number("domain", "x_max", 10.0);
  cfg.data.domain.y_min = ini.number("domain", "y_min", -7.0);
  cfg.data.domain.y_max = ini.number("domain", "y_max", 0.0);
  cfg.data.dx = ini.number("domain", "dx", 0.08);
  cfg.data.dt = ini.number("domain", "dt", 0.00125);
  cfg.data.c_background = ini.number("domain", "c_background", 1.3);
  cfg.data.depth_H = ini.number("domain", "depth_H", 7.0);
  cfg.inversion_dx = ini.number("domain", "inversion_dx", 2.0 * cfg.data.dx);
  cfg.inversion_dt = ini.number("domain", "inversion_dt", 2.0 * cfg.data.dt);

  cfg.data.fM = ini.number("source", "fM", 0.5);
  cfg.data.kappa = ini.number("source", "kappa", 2.0);
  cfg.data.tau_in = ini.number("source", "tau_in", 2.0);
  cfg.data.tau_end = ini.number("source", "tau_end", 0.0);
  cfg.noise_alpha = ini.number("source", "noise_alpha", 10.0);
  const double transducer_step = ini.number("source", "transducer_step", 0.5);
  const double record_step = ini.number("source", "record_step", 0.025);
  if (transducer_step <= 0.0 || record_step <= 0.0)
    throw ConfigError("transducer_step and record_step must be positive");

  for (double x = cfg.data.domain.x_min; x <= cfg.data.domain.x_max + 1e-12;
       x += transducer_step)
    cfg.data.emitters.push_back({x, cfg.data.domain.y_max});
  cfg.data.receivers = cfg.data.emitters;
  for (double t = cfg.data.tau_in; t <= cfg.data.effective_tau_end() + 1e-9;
       t += record_step)
    cfg.data.record_times.push_back(t);

  cfg.Q = static_cast<int>(ini.integer("truth", "Q", ini.integer("prior", "Q", 5)));
  cfg.truth = parse_truth(ini, cfg.Q);

  const std::string variant = ini.text("prior", "variant", "smooth");
  if (variant == "smooth") cfg.prior_variant = ShapeVariant::smooth;
  else if (variant == "piecewise") cfg.prior_variant = ShapeVariant::piecewise;
  else throw ConfigError("prior variant must be 'smooth' or 'piecewise'");
  cfg.Z = static_cast<int>(ini.integer("prior", "Z", 500));
  cfg.C0 = ini.number("prior", "C0", 0.3);
  cfg.auto_C0 = ini.flag("prior", "auto_C0", true);
  cfg.peak_min_separation = ini.number("prior", "peak_min_separation", 1.5);
  cfg.fraction_count = static_cast<int>(ini.integer("prior", "fractions", 3));
  cfg.hyper.var_center = ini.number("prior", "var_center", 0.1);
  cfg.hyper.var_a0 = ini.number("prior", "var_a0", 0.1);
  cfg.hyper.var_mu = ini.number("prior", "var_mu", 400.0);
  cfg.hyper.fourier_decay_s = ini.number("prior", "fourier_s", 3.0);
  cfg.hyper.matern.nu = ini.number("prior", "matern_nu", 1.5);
  cfg.hyper.matern.rho = ini.number("prior", "matern_rho", 0.5);
  cfg.hyper.matern.sigma = ini.number("prior", "matern_sigma", 0.2);
  cfg.hyper.mu_background = cfg.data.c_background * cfg.data.c_background;
  cfg.hyper.rule.mu_min = ini.number("prior", "mu_min", 0.0);
  cfg.hyper.domain = cfg.data.domain;

  const std::string kind = ini.text("sampler", "kind", "saies");
  if (kind == "saies") cfg.sampler.kind = SamplerKind::saies;
  else if (kind == "aies") cfg.sampler.kind = SamplerKind::aies;
  else throw ConfigError("sampler kind must be 'saies' or 'aies'");
  cfg.sampler.walkers = static_cast<int>(ini.integer("sampler", "walkers", 480));
  cfg.steps_kept = ini.integer("sampler", "steps_kept", 500);
  cfg.sampler.thin = static_cast<int>(ini.integer("sampler", "thin", 3));
  cfg.sampler.steps = cfg.steps_kept * cfg.sampler.thin;
  cfg.sampler.a = ini.number("sampler", "a", 2.0);
  cfg.sampler.lambda = ini.number("sampler", "lambda", 0.2);
  const std::string schedule = ini.text("sampler", "schedule", "halves");
  if (schedule == "sequential") cfg.sampler.schedule = WalkerSchedule::sequential;
  else if (schedule == "halves") cfg.sampler.schedule = WalkerSchedule::halves;
  else throw ConfigError("sampler schedule must be 'sequential' or 'halves'");
  cfg.sampler.threads = static_cast<int>(ini.integer("sampler", "threads", 0));
  cfg.seed = static_cast<std::uint64_t>(ini.integer("sampler", "seed", 1));
  cfg.sampler.seed = cfg.seed;

  cfg.optimizer.omega0 = ini.number("optimizer", "omega0", 5e-5);
  cfg.optimizer.lambda0 = ini.number("optimizer", "lambda0", 0.0);
  cfg.optimizer.tol = ini.number("optimizer", "tol", 5e-7);
  cfg.optimizer.max_outer = static_cast<int>(ini.integer("optimizer", "max_outer", 50));
  cfg.optimizer.eta.center = ini.number("optimizer", "eta_center", 0.05);
  cfg.optimizer.eta.a0 = ini.number("optimizer", "eta_a0", 0.1);
  cfg.optimizer.eta.fourier = ini.number("optimizer", "eta_fourier", 0.05);
  cfg.optimizer.eta.mu = ini.number("optimizer", "eta_mu", 0.15);
  cfg.optimizer.adaptive_eta = ini.flag("optimizer", "adaptive_eta", false);
  cfg.optimizer.threads = static_cast<int>(ini.integer("optimizer", "threads", 0));
  cfg.optimizer.mu_background = cfg.hyper.mu_background;
  cfg.laplace_count = ini.integer("optimizer", "laplace_count", 10000);

  return cfg;
}

RunConfig single_circle_config() {
  RunConfig cfg;
  cfg.data = SimulationConfig::defaults();
  cfg.truth = ParameterVector::circle(5.0, -3.0, 1.0, 16.0, cfg.Q);
  cfg.hyper.domain = cfg.data.domain;
  cfg.hyper.mu_background = cfg.data.c_background * cfg.data.c_background;
  cfg.optimizer.mu_background = cfg.hyper.mu_background;
  return cfg;
}

}  // namespace shearbayes
