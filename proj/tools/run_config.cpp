#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace lrpq::cli {

namespace {

std::string strip(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw std::invalid_argument(key + ": '" + value + "' is not a number");
  }
  return out;
}

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long out = std::strtol(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw std::invalid_argument(key + ": '" + value + "' is not an integer");
  }
  return out;
}

std::uint64_t parse_uint64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  unsigned long long out = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw std::invalid_argument(key + ": '" + value + "' is not an unsigned integer");
  }
  return static_cast<std::uint64_t>(out);
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string lower;
  for (char c : value) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "true" || lower == "1" || lower == "on" || lower == "yes") return true;
  if (lower == "false" || lower == "0" || lower == "off" || lower == "no") return false;
  throw std::invalid_argument(key + ": '" + value + "' is not a boolean");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = strip(item);
    if (item.empty()) continue;
    out.push_back(parse(key, item));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (taus.empty()) throw std::invalid_argument("tau: at least one quantile is required");
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) {
      throw std::invalid_argument("tau: values must lie strictly between 0 and 1");
    }
  }
  for (int k : ranks) {
    if (k < 0) throw std::invalid_argument("ranks: values must be nonnegative");
  }
  for (int r : pca_ranks) {
    if (r < 1) throw std::invalid_argument("pca_ranks: values must be positive");
  }
  if (r_max < 0) throw std::invalid_argument("r_max: must be nonnegative");
  if (alphas.empty()) throw std::invalid_argument("alphas: at least one level is required");
  for (double alpha : alphas) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("alphas: levels must lie strictly between 0 and 1");
    }
  }
  if (bandwidth < 0.0) throw std::invalid_argument("kernel.bandwidth: must be nonnegative");
  if (h_scale <= 0.0) throw std::invalid_argument("kernel.h_scale: must be positive");
  if (lag_window < 0) throw std::invalid_argument("kernel.lag_window: must be nonnegative");
  if (n_splits < 1) throw std::invalid_argument("n_splits: must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers: must be at least 1");
  nnr_config().validate();
}

NnrConfig RunConfig::nnr_config() const {
  NnrConfig config;
  config.nu_scale = nu_scale;
  config.admm_penalty = rho;
  config.max_iter = max_iter;
  config.tol_primal = tol;
  config.tol_dual = tol;
  config.adapt_rho = adapt_rho;
  return config;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "tau",          "ranks",          "pca_ranks",       "r_max",
      "nu_scale",     "admm.rho",       "admm.max_iter",   "admm.tol",
      "admm.adapt_rho", "kernel.bandwidth", "kernel.h_scale", "kernel.lag_window",
      "alphas",       "seed",           "n_splits",        "workers",
      "out",          "figures"};
  return keys;
}

void apply_key(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "tau") {
    config.taus = parse_list<double>(key, value, parse_double);
  } else if (key == "ranks") {
    config.ranks = parse_list<int>(key, value, [](const std::string& k, const std::string& v) {
      return static_cast<int>(parse_long(k, v));
    });
  } else if (key == "pca_ranks") {
    config.pca_ranks = parse_list<int>(key, value, [](const std::string& k, const std::string& v) {
      return static_cast<int>(parse_long(k, v));
    });
  } else if (key == "r_max") {
    config.r_max = static_cast<int>(parse_long(key, value));
  } else if (key == "nu_scale") {
    config.nu_scale = parse_double(key, value);
  } else if (key == "admm.rho") {
    config.rho = parse_double(key, value);
  } else if (key == "admm.max_iter") {
    config.max_iter = static_cast<int>(parse_long(key, value));
  } else if (key == "admm.tol") {
    config.tol = parse_double(key, value);
  } else if (key == "admm.adapt_rho") {
    config.adapt_rho = parse_bool(key, value);
  } else if (key == "kernel.bandwidth") {
    config.bandwidth = parse_double(key, value);
  } else if (key == "kernel.h_scale") {
    config.h_scale = parse_double(key, value);
  } else if (key == "kernel.lag_window") {
    config.lag_window = static_cast<int>(parse_long(key, value));
  } else if (key == "alphas") {
    config.alphas = parse_list<double>(key, value, parse_double);
  } else if (key == "seed") {
    config.seed = parse_uint64(key, value);
  } else if (key == "n_splits") {
    config.n_splits = static_cast<int>(parse_long(key, value));
  } else if (key == "workers") {
    config.workers = static_cast<int>(parse_long(key, value));
  } else if (key == "out") {
    config.out_dir = value;
  } else if (key == "figures") {
    config.figures = parse_bool(key, value);
  } else {
    throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open config file '" + path + "'");
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    auto text = strip(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": unterminated section header");
      }
      section = strip(text.substr(1, text.size() - 2));
      continue;
    }
    auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    auto key = strip(text.substr(0, eq));
    auto value = strip(text.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    try {
      apply_key(config, key, value);
    } catch (const std::invalid_argument& error) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " +
                                  error.what());
    }
  }
}

namespace {

std::string env_name_for(const std::string& key) {
  std::string name = "LRPQ_";
  for (char c : key) {
    name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(c)));
  }
  return name;
}

}  // namespace

void apply_env(RunConfig& config) {
  for (char** entry = environ; entry != nullptr && *entry != nullptr; ++entry) {
    const std::string raw(*entry);
    if (raw.rfind("LRPQ_", 0) != 0) continue;
    auto eq = raw.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = raw.substr(0, eq);
    const std::string value = raw.substr(eq + 1);
    bool matched = false;
    for (const auto& key : known_keys()) {
      if (env_name_for(key) == name) {
        apply_key(config, key, value);
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw std::invalid_argument("unknown environment variable '" + name + "'");
    }
  }
}

}  // namespace lrpq::cli
