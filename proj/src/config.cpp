#include "imbsam/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace imbsam {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& v, std::string (*fmt)(T)) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"schema_version", [&](const std::string& v) { cfg.schema_version = std::stoi(v); }},
      {"data.seed", [&](const std::string& v) { cfg.data_seed = std::stoull(v); }},
      {"data.classes", [&](const std::string& v) { cfg.num_classes = std::stoi(v); }},
      {"data.feature_dim", [&](const std::string& v) { cfg.feature_dim = std::stoll(v); }},
      {"data.n_max", [&](const std::string& v) { cfg.n_max = std::stoll(v); }},
      {"data.imbalance_factor", [&](const std::string& v) { cfg.imbalance_factor = std::stod(v); }},
      {"data.mean_radius", [&](const std::string& v) { cfg.mean_radius = std::stod(v); }},
      {"data.noise_sigma", [&](const std::string& v) { cfg.noise_sigma = std::stod(v); }},
      {"data.test_per_class", [&](const std::string& v) { cfg.test_per_class = std::stoll(v); }},
      {"model.hidden_dims",
       [&](const std::string& v) {
         cfg.hidden_dims.clear();
         for (const auto& item : split_list(v)) cfg.hidden_dims.push_back(std::stoll(item));
       }},
      {"model.activation", [&](const std::string& v) { cfg.activation = v; }},
      {"model.init_seed", [&](const std::string& v) { cfg.init_seed = std::stoull(v); }},
      {"optim.name", [&](const std::string& v) { cfg.optimizer = v; }},
      {"optim.learning_rate", [&](const std::string& v) { cfg.learning_rate = std::stod(v); }},
      {"optim.lr_schedule", [&](const std::string& v) { cfg.lr_schedule = v; }},
      {"optim.weight_decay", [&](const std::string& v) { cfg.weight_decay = std::stod(v); }},
      {"optim.momentum", [&](const std::string& v) { cfg.momentum = std::stod(v); }},
      {"optim.rho", [&](const std::string& v) { cfg.rho = std::stod(v); }},
      {"optim.eta", [&](const std::string& v) { cfg.eta = std::stoll(v); }},
      {"optim.class_weights",
       [&](const std::string& v) {
         cfg.class_weights.clear();
         for (const auto& item : split_list(v)) cfg.class_weights.push_back(std::stod(item));
       }},
      {"train.epochs", [&](const std::string& v) { cfg.epochs = std::stoi(v); }},
      {"train.batch_size", [&](const std::string& v) { cfg.batch_size = std::stoll(v); }},
      {"train.shuffle_seed", [&](const std::string& v) { cfg.shuffle_seed = std::stoull(v); }},
      {"eval.many_min", [&](const std::string& v) { cfg.many_min = std::stoll(v); }},
      {"eval.few_max", [&](const std::string& v) { cfg.few_max = std::stoll(v); }},
      {"diag.sharpness", [&](const std::string& v) { cfg.sharpness = parse_bool(v, "diag.sharpness"); }},
      {"diag.probe_seed", [&](const std::string& v) { cfg.probe_seed = std::stoull(v); }},
      {"diag.probes", [&](const std::string& v) { cfg.probes = std::stoi(v); }},
      {"diag.power_iters", [&](const std::string& v) { cfg.power_iters = std::stoi(v); }},
      {"diag.power_tol", [&](const std::string& v) { cfg.power_tol = std::stod(v); }},
      {"diag.ratio_epochs", [&](const std::string& v) { cfg.ratio_epochs = std::stoi(v); }},
      {"output.dir", [&](const std::string& v) { cfg.output_dir = v; }},
      {"run.seeds",
       [&](const std::string& v) {
         cfg.seeds.clear();
         for (const auto& item : split_list(v)) cfg.seeds.push_back(std::stoull(item));
       }},
  };

  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) + " is not key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                  std::to_string(line_no));
    }
    it->second(value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "schema_version = " << c.schema_version << "\n";
  out << "data.seed = " << c.data_seed << "\n";
  out << "data.classes = " << c.num_classes << "\n";
  out << "data.feature_dim = " << c.feature_dim << "\n";
  out << "data.n_max = " << c.n_max << "\n";
  out << "data.imbalance_factor = " << fmt_double(c.imbalance_factor) << "\n";
  out << "data.mean_radius = " << fmt_double(c.mean_radius) << "\n";
  out << "data.noise_sigma = " << fmt_double(c.noise_sigma) << "\n";
  out << "data.test_per_class = " << c.test_per_class << "\n";
  out << "model.hidden_dims = "
      << fmt_list<Index>(c.hidden_dims, +[](Index v) { return std::to_string(v); }) << "\n";
  out << "model.activation = " << c.activation << "\n";
  out << "model.init_seed = " << c.init_seed << "\n";
  out << "optim.name = " << c.optimizer << "\n";
  out << "optim.learning_rate = " << fmt_double(c.learning_rate) << "\n";
  out << "optim.lr_schedule = " << c.lr_schedule << "\n";
  out << "optim.weight_decay = " << fmt_double(c.weight_decay) << "\n";
  out << "optim.momentum = " << fmt_double(c.momentum) << "\n";
  out << "optim.rho = " << fmt_double(c.rho) << "\n";
  out << "optim.eta = " << c.eta << "\n";
  out << "optim.class_weights = " << fmt_list<double>(c.class_weights, &fmt_double) << "\n";
  out << "train.epochs = " << c.epochs << "\n";
  out << "train.batch_size = " << c.batch_size << "\n";
  out << "train.shuffle_seed = " << c.shuffle_seed << "\n";
  out << "eval.many_min = " << c.many_min << "\n";
  out << "eval.few_max = " << c.few_max << "\n";
  out << "diag.sharpness = " << (c.sharpness ? "true" : "false") << "\n";
  out << "diag.probe_seed = " << c.probe_seed << "\n";
  out << "diag.probes = " << c.probes << "\n";
  out << "diag.power_iters = " << c.power_iters << "\n";
  out << "diag.power_tol = " << fmt_double(c.power_tol) << "\n";
  out << "diag.ratio_epochs = " << c.ratio_epochs << "\n";
  out << "output.dir = " << c.output_dir << "\n";
  out << "run.seeds = "
      << fmt_list<std::uint64_t>(c.seeds, +[](std::uint64_t v) { return std::to_string(v); })
      << "\n";
  return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string s = serialize_config(config);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const ExperimentConfig& c) {
  if (c.schema_version != 1) throw std::invalid_argument("config: unsupported schema_version");
  if (c.num_classes < 2) throw std::invalid_argument("config: data.classes must be >= 2");
  if (c.feature_dim < 1) throw std::invalid_argument("config: data.feature_dim must be >= 1");
  if (c.imbalance_factor < 1.0) {
    throw std::invalid_argument("config: data.imbalance_factor must be >= 1");
  }
  if (static_cast<double>(c.n_max) < c.imbalance_factor) {
    throw std::invalid_argument("config: data.n_max must be >= data.imbalance_factor");
  }
  if (c.test_per_class < 1) throw std::invalid_argument("config: data.test_per_class must be >= 1");
  if (c.activation != "tanh" && c.activation != "relu") {
    throw std::invalid_argument("config: model.activation must be tanh or relu");
  }
  if (c.optimizer != "sgd" && c.optimizer != "sam" && c.optimizer != "imbsam") {
    throw std::invalid_argument("config: optim.name must be sgd, sam or imbsam");
  }
  if (c.lr_schedule != "constant" && c.lr_schedule != "cosine") {
    throw std::invalid_argument("config: optim.lr_schedule must be constant or cosine");
  }
  if (c.learning_rate <= 0.0) throw std::invalid_argument("config: optim.learning_rate must be > 0");
  if (c.weight_decay < 0.0) throw std::invalid_argument("config: optim.weight_decay must be >= 0");
  if (c.momentum < 0.0 || c.momentum >= 1.0) {
    throw std::invalid_argument("config: optim.momentum must lie in [0, 1)");
  }
  if (c.rho < 0.0) throw std::invalid_argument("config: optim.rho must be >= 0");
  if (c.eta < 0) throw std::invalid_argument("config: optim.eta must be >= 0");
  if (!c.class_weights.empty() &&
      static_cast<int>(c.class_weights.size()) != c.num_classes) {
    throw std::invalid_argument("config: optim.class_weights must have one entry per class");
  }
  for (double w : c.class_weights) {
    if (w < 0.0) throw std::invalid_argument("config: class weights must be >= 0");
  }
  if (c.epochs < 1) throw std::invalid_argument("config: train.epochs must be >= 1");
  if (c.batch_size < 1) throw std::invalid_argument("config: train.batch_size must be >= 1");
  if (c.few_max > c.many_min) throw std::invalid_argument("config: eval.few_max must be <= eval.many_min");
  if (c.probes < 1) throw std::invalid_argument("config: diag.probes must be >= 1");
  if (c.power_iters < 1) throw std::invalid_argument("config: diag.power_iters must be >= 1");
  if (c.power_tol <= 0.0) throw std::invalid_argument("config: diag.power_tol must be > 0");
  if (c.ratio_epochs < 0) throw std::invalid_argument("config: diag.ratio_epochs must be >= 0");
  if (c.seeds.empty()) throw std::invalid_argument("config: run.seeds must not be empty");
  for (Index h : c.hidden_dims) {
    if (h < 1) throw std::invalid_argument("config: hidden dims must be >= 1");
  }
}

}  // namespace imbsam
