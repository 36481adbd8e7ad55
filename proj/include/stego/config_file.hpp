#pragma once

#include "stego/loss.hpp"
#include "stego/model_config.hpp"
#include "stego/train.hpp"

#include <map>
#include <string>

namespace stego {

/// Flat `key = value` config file ('#' starts a comment). Every model, train
/// and loss field has a documented key; unknown keys are rejected.
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  double eval_fraction = 0.1;
};

/// Applies parsed keys over the defaults; throws ConfigError on unknown keys
/// or malformed values.
RunConfig run_config_from(const std::map<std::string, std::string>& kv);

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from(parse_config_file(path));
}

}  // namespace stego
