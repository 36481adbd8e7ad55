#include "stego/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace stego {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'G', 'F'};
constexpr uint32_t kVersion = 1;

const std::array<uint32_t, 256>& crc_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(static_cast<uint8_t>(v));
  buf.push_back(static_cast<uint8_t>(v >> 8));
  buf.push_back(static_cast<uint8_t>(v >> 16));
  buf.push_back(static_cast<uint8_t>(v >> 24));
}

void put_f32(std::vector<uint8_t>& buf, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(buf, v);
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;
  uint32_t u32() {
    if (pos + 4 > buf.size()) throw DataError("checkpoint truncated");
    uint32_t v = static_cast<uint32_t>(buf[pos]) | static_cast<uint32_t>(buf[pos + 1]) << 8 |
                 static_cast<uint32_t>(buf[pos + 2]) << 16 |
                 static_cast<uint32_t>(buf[pos + 3]) << 24;
    pos += 4;
    return v;
  }
  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::string str(size_t len) {
    if (pos + len > buf.size()) throw DataError("checkpoint truncated");
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), len);
    pos += len;
    return s;
  }
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
  uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = crc_table()[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void save_checkpoint(const std::vector<CheckpointEntry>& entries, const std::string& path) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_u32(buf, static_cast<uint32_t>(e.name.size()));
    buf.insert(buf.end(), e.name.begin(), e.name.end());
    put_u32(buf, static_cast<uint32_t>(e.shape.size()));
    size_t n = 1;
    for (Index d : e.shape) {
      put_u32(buf, static_cast<uint32_t>(d));
      n *= static_cast<size_t>(d);
    }
    if (n != e.values.size())
      throw DataError("checkpoint entry " + e.name + " has inconsistent value count");
    for (float v : e.values) put_f32(buf, v);
  }
  put_u32(buf, crc32(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path);
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16) throw DataError("checkpoint too small: " + path);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw DataError("bad checkpoint magic in " + path);

  const size_t body = buf.size() - 4;
  const uint32_t stored = static_cast<uint32_t>(buf[body]) |
                          static_cast<uint32_t>(buf[body + 1]) << 8 |
                          static_cast<uint32_t>(buf[body + 2]) << 16 |
                          static_cast<uint32_t>(buf[body + 3]) << 24;
  if (crc32(buf.data(), body) != stored) throw DataError("checkpoint CRC mismatch in " + path);

  Reader r{buf, 4};
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const uint32_t count = r.u32();
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const uint32_t name_len = r.u32();
    e.name = r.str(name_len);
    const uint32_t rank = r.u32();
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      e.shape.push_back(static_cast<Index>(r.u32()));
      n *= static_cast<size_t>(e.shape.back());
    }
    e.values.resize(n);
    for (size_t v = 0; v < n; ++v) e.values[v] = r.f32();
    entries.push_back(std::move(e));
  }
  if (r.pos != body) throw DataError("checkpoint has trailing bytes: " + path);
  return entries;
}

}  // namespace stego
