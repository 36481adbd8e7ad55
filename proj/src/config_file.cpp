#include "stego/config_file.hpp"

#include <fstream>
#include <sstream>

namespace stego {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long r = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: expected integer for " + key + ", got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: expected number for " + key + ", got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: expected true/false for " + key + ", got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig run_config_from(const std::map<std::string, std::string>& kv) {
  RunConfig rc;
  for (const auto& [key, value] : kv) {
    if (key == "model.l_ms") rc.model.l_ms = to_long(key, value);
    else if (key == "model.n_r") rc.model.n_r = to_long(key, value);
    else if (key == "model.height") rc.model.h = to_long(key, value);
    else if (key == "model.width") rc.model.w = to_long(key, value);
    else if (key == "model.heads") rc.model.heads = to_long(key, value);
    else if (key == "model.window") rc.model.window = to_long(key, value);
    else if (key == "model.use_mhsa") rc.model.use_mhsa = to_bool(key, value);
    else if (key == "model.use_pe") rc.model.use_pe = to_bool(key, value);
    else if (key == "model.qkv_variant") rc.model.qkv = parse_qkv_variant(value);
    else if (key == "model.activation") rc.model.activation = parse_activation(value);
    else if (key == "train.iterations") rc.train.iterations = to_long(key, value);
    else if (key == "train.batch_size") rc.train.batch_size = to_long(key, value);
    else if (key == "train.seed") rc.train.seed = static_cast<uint64_t>(to_long(key, value));
    else if (key == "train.eval_interval") rc.train.eval_interval = to_long(key, value);
    else if (key == "train.lr") rc.train.lr = to_double(key, value);
    else if (key == "train.metrics_csv") rc.train.metrics_csv = value;
    else if (key == "loss.lambda1") rc.loss.lambda1 = to_double(key, value);
    else if (key == "loss.lambda2") rc.loss.lambda2 = to_double(key, value);
    else if (key == "loss.perceptual_proxy") rc.loss.use_perceptual_proxy = to_bool(key, value);
    else if (key == "data.eval_fraction") rc.eval_fraction = to_double(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  rc.train.image_size = rc.model.h;
  rc.model.validate();
  if (rc.train.iterations < 1 || rc.train.batch_size < 1)
    throw ConfigError("config: iterations and batch_size must be positive");
  if (rc.eval_fraction < 0.0 || rc.eval_fraction >= 1.0)
    throw ConfigError("config: data.eval_fraction must be in [0, 1)");
  return rc;
}

}  // namespace stego
