#pragma once

#include "stego/checkpoint.hpp"
#include "stego/model_config.hpp"

namespace stego {

/// The model configuration rides inside the checkpoint as one extra entry so
/// embed/extract need only the checkpoint file.
inline constexpr const char* kMetaEntry = "__meta__.model";

inline CheckpointEntry config_to_entry(const ModelConfig& cfg) {
  CheckpointEntry e;
  e.name = kMetaEntry;
  e.values = {1.0f,  // meta layout version
              static_cast<float>(cfg.l_ms),
              static_cast<float>(cfg.n_r),
              static_cast<float>(cfg.h),
              static_cast<float>(cfg.w),
              static_cast<float>(cfg.heads),
              static_cast<float>(cfg.window),
              cfg.use_mhsa ? 1.0f : 0.0f,
              cfg.use_pe ? 1.0f : 0.0f,
              static_cast<float>(static_cast<int>(cfg.qkv)),
              static_cast<float>(static_cast<int>(cfg.activation))};
  e.shape = {static_cast<Index>(e.values.size())};
  return e;
}

inline ModelConfig config_from_entries(const std::vector<CheckpointEntry>& entries) {
  for (const auto& e : entries) {
    if (e.name != kMetaEntry) continue;
    if (e.values.size() != 11 || e.values[0] != 1.0f)
      throw DataError("unsupported model metadata layout in checkpoint");
    ModelConfig cfg;
    cfg.l_ms = static_cast<Index>(e.values[1]);
    cfg.n_r = static_cast<Index>(e.values[2]);
    cfg.h = static_cast<Index>(e.values[3]);
    cfg.w = static_cast<Index>(e.values[4]);
    cfg.heads = static_cast<Index>(e.values[5]);
    cfg.window = static_cast<Index>(e.values[6]);
    cfg.use_mhsa = e.values[7] != 0.0f;
    cfg.use_pe = e.values[8] != 0.0f;
    cfg.qkv = static_cast<QkvVariant>(static_cast<int>(e.values[9]));
    cfg.activation = static_cast<Activation>(static_cast<int>(e.values[10]));
    cfg.validate();
    return cfg;
  }
  throw DataError("checkpoint carries no model metadata entry");
}

inline void save_model(const ParamStore<float>& store, const ModelConfig& cfg,
                       const std::string& path) {
  save_params(store, path, {config_to_entry(cfg)});
}

}  // namespace stego
