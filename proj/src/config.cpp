#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fbi/experiment.hpp"
#include "fbi/kepler.hpp"

namespace fbi {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string>& allowed_gains(SystemKind system) {
  static const std::set<std::string> rigid{"k0", "k1", "k2"};
  static const std::set<std::string> orbital{"k1", "k2"};
  return system == SystemKind::RigidBody ? rigid : orbital;
}

const std::set<std::string>& allowed_params(SystemKind system) {
  static const std::set<std::string> rigid{"inertia", "projection_tol", "projection_max_iter"};
  static const std::set<std::string> kepler{"mu", "projection_tol", "projection_max_iter"};
  static const std::set<std::string> perturbed{"mu", "delta", "e", "projection_tol", "projection_max_iter"};
  switch (system) {
    case SystemKind::Kepler:
      return kepler;
    case SystemKind::PerturbedKepler:
      return perturbed;
    default:
      return rigid;
  }
}

const std::set<std::string>& allowed_initial(SystemKind system) {
  static const std::set<std::string> rigid{"R", "Omega"};
  static const std::set<std::string> orbital{"x", "v"};
  return system == SystemKind::RigidBody ? rigid : orbital;
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size()) throw ConfigError(what + ": '" + text + "' is not a number");
  return value;
}

// Comma- or whitespace-separated list.
std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_number(token, what));
  if (out.empty()) throw ConfigError(what + ": empty value");
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + format_real(values[i]);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!is_compatible(system, method)) {
    throw ConfigError("method " + to_string(method) + " is not available for system " + to_string(system));
  }
  if (!(h > 0) || !std::isfinite(h)) throw ConfigError("h must be positive and finite");
  if (!(t_end > 0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive and finite");
  if (step_count() < 1) throw ConfigError("t_end must be at least one step h");
  if (sample_stride < 1) throw ConfigError("stride must be at least 1");
  for (const auto& [key, value] : gains) {
    if (!allowed_gains(system).count(key)) throw ConfigError("unknown gain '" + key + "' for " + to_string(system));
    if (!(value > 0) || !std::isfinite(value)) throw ConfigError("gain '" + key + "' must be positive");
  }
  for (const auto& [key, values] : params) {
    if (!allowed_params(system).count(key)) throw ConfigError("unknown param '" + key + "' for " + to_string(system));
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError("param '" + key + "' must be finite");
    }
  }
  if (const auto it = params.find("projection_tol"); it != params.end() && !(it->second.front() > 0)) {
    throw ConfigError("projection_tol must be positive");
  }
  if (const auto it = params.find("projection_max_iter"); it != params.end() && !(it->second.front() >= 1)) {
    throw ConfigError("projection_max_iter must be at least 1");
  }
  for (const auto& [key, values] : initial_condition) {
    if (!allowed_initial(system).count(key)) {
      throw ConfigError("unknown initial value '" + key + "' for " + to_string(system));
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError("initial '" + key + "' must be finite");
    }
  }
}

long ExperimentConfig::step_count() const { return static_cast<long>(std::floor(t_end / h + 1e-9)); }

ExperimentConfig default_config(SystemKind system) {
  ExperimentConfig cfg;
  cfg.system = system;
  cfg.method = Method::FeedbackEuler;
  switch (system) {
    case SystemKind::RigidBody:
      cfg.h = 1e-4;
      cfg.t_end = 1000;
      cfg.gains = {{"k0", 50}, {"k1", 100}, {"k2", 50}};
      cfg.params = {{"projection_tol", {1e-4}}};
      cfg.sample_stride = 1000;
      break;
    case SystemKind::Kepler: {
      cfg.h = 0.005;
      cfg.t_end = 1000 * orbit_geometry(KeplerParams<double>{}).period;
      cfg.gains = {{"k1", 4}, {"k2", 2}};
      cfg.params = {{"projection_tol", {0.005}}};
      cfg.sample_stride = 1000;
      break;
    }
    case SystemKind::PerturbedKepler:
      cfg.h = 0.03;
      cfg.t_end = 200;
      cfg.gains = {{"k1", 2}, {"k2", 3}};
      cfg.params = {{"mu", {1}}, {"delta", {0.0025}}, {"e", {0.6}}, {"projection_tol", {1e-8}}};
      cfg.sample_stride = 1;
      break;
  }
  return cfg;
}

ExperimentConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  static const std::set<std::string> sections{"run", "gains", "params", "initial"};
  for (const auto& [name, section] : tree) {
    if (!sections.count(name)) throw ConfigError("config: unknown section [" + name + "]");
    if (section.empty()) throw ConfigError("config: '" + name + "' must be a section");
  }

  const auto run = tree.get_child_optional("run");
  if (!run) throw ConfigError("config: missing [run] section");
  const auto system_name = run->get_optional<std::string>("system");
  if (!system_name) throw ConfigError("config: [run] needs 'system'");

  ExperimentConfig cfg = default_config(parse_system(*system_name));
  static const std::set<std::string> run_keys{"system", "method", "h", "t_end", "output", "stride"};
  for (const auto& [key, node] : *run) {
    if (!run_keys.count(key)) throw ConfigError("config: unknown [run] key '" + key + "'");
    const std::string value = node.get_value<std::string>();
    if (key == "method") cfg.method = parse_method(value);
    if (key == "h") cfg.h = parse_number(value, "h");
    if (key == "t_end") cfg.t_end = parse_number(value, "t_end");
    if (key == "output") cfg.output_path = value;
    if (key == "stride") {
      const double stride = parse_number(value, "stride");
      if (stride != std::floor(stride)) throw ConfigError("stride must be an integer");
      cfg.sample_stride = static_cast<long>(stride);
    }
  }
  if (const auto gains = tree.get_child_optional("gains")) {
    for (const auto& [key, node] : *gains) cfg.gains[key] = parse_number(node.get_value<std::string>(), key);
  }
  if (const auto params = tree.get_child_optional("params")) {
    for (const auto& [key, node] : *params) cfg.params[key] = parse_list(node.get_value<std::string>(), key);
  }
  if (const auto initial = tree.get_child_optional("initial")) {
    for (const auto& [key, node] : *initial) {
      cfg.initial_condition[key] = parse_list(node.get_value<std::string>(), key);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n"
      << "system = " << to_string(cfg.system) << '\n'
      << "method = " << to_string(cfg.method) << '\n'
      << "h = " << format_real(cfg.h) << '\n'
      << "t_end = " << format_real(cfg.t_end) << '\n'
      << "stride = " << cfg.sample_stride << '\n';
  if (!cfg.output_path.empty()) out << "output = " << cfg.output_path << '\n';
  if (!cfg.gains.empty()) {
    out << "\n[gains]\n";
    for (const auto& [key, value] : cfg.gains) out << key << " = " << format_real(value) << '\n';
  }
  if (!cfg.params.empty()) {
    out << "\n[params]\n";
    for (const auto& [key, values] : cfg.params) out << key << " = " << join(values) << '\n';
  }
  if (!cfg.initial_condition.empty()) {
    out << "\n[initial]\n";
    for (const auto& [key, values] : cfg.initial_condition) out << key << " = " << join(values) << '\n';
  }
  return out.str();
}

std::map<std::string, double> parse_gain_list(std::string_view text) {
  std::map<std::string, double> gains;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("gain '" + item + "' is not of the form name=value");
    std::string key = item.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key.empty()) throw ConfigError("gain '" + item + "' has no name");
    gains[key] = parse_number(item.substr(eq + 1), key);
  }
  if (gains.empty()) throw ConfigError("empty gain list");
  return gains;
}

}  // namespace fbi
