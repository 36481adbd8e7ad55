#pragma once

#include "stego/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stego {

/// One named tensor inside a checkpoint file.
struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// CRC-32 (IEEE, reflected 0xEDB88320), the zlib-compatible checksum.
uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

/// Checkpoint container: "STGF" magic, u32 LE format version, u32 LE entry
/// count, then per entry u32 LE name length, UTF-8 name, u32 LE rank, u32 LE
/// dims, raw f32 LE values; the file ends with a CRC32 of all preceding bytes.
void save_checkpoint(const std::vector<CheckpointEntry>& entries, const std::string& path);
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

inline std::vector<CheckpointEntry> to_entries(const ParamStore<float>& store) {
  std::vector<CheckpointEntry> entries;
  for (const auto& [name, t] : store) {
    CheckpointEntry e;
    e.name = name;
    e.shape = t.shape();
    e.values.assign(t.data(), t.data() + t.numel());
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void save_params(const ParamStore<float>& store, const std::string& path,
                        std::vector<CheckpointEntry> extra = {}) {
  auto entries = to_entries(store);
  for (auto& e : extra) entries.push_back(std::move(e));
  save_checkpoint(entries, path);
}

/// Copies values from a checkpoint into an already-built store; every store
/// parameter must be present with a matching shape.
inline void load_params_into(ParamStore<float>& store, const std::vector<CheckpointEntry>& entries) {
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  for (auto& [name, t] : store) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint is missing parameter " + name);
    const CheckpointEntry& e = *it->second;
    if (e.shape != t.shape())
      throw DataError("checkpoint shape mismatch for " + name + ": file has " +
                      shape_str(e.shape) + ", model expects " + shape_str(t.shape()));
    for (Index i = 0; i < t.numel(); ++i) t.values_mut()[i] = e.values[static_cast<size_t>(i)];
  }
}

}  // namespace stego
