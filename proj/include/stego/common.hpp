#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stego {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using MapMat = Eigen::Map<MatRM<S>>;

template <typename S>
using MapConstMat = Eigen::Map<const MatRM<S>>;

/// Invalid shapes, sizes or axis arguments.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model/layout configuration (window tiling, head divisibility, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Message layout violations (capacity mismatch, divisibility).
class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed payload data (element out of range, bad magic, CRC mismatch).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values detected in checked mode, or optimizer state misuse.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d <= 0) throw DimensionError("shape dimensions must be positive");
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

/// When enabled, every op output is scanned for NaN/Inf and a NumericError
/// is thrown naming the offending op.
struct CheckedMode {
  static bool& flag() {
    static bool on = false;
    return on;
  }
  static bool enabled() { return flag(); }
  static void set(bool on) { flag() = on; }
};

struct CheckedModeGuard {
  bool prev;
  explicit CheckedModeGuard(bool on) : prev(CheckedMode::enabled()) { CheckedMode::set(on); }
  ~CheckedModeGuard() { CheckedMode::set(prev); }
};

/// Graph recording switch: with grad disabled, ops produce constant tensors.
struct GradMode {
  static bool& flag() {
    static thread_local bool on = true;
    return on;
  }
  static bool enabled() { return flag(); }
};

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(GradMode::flag()) { GradMode::flag() = false; }
  ~NoGradGuard() { GradMode::flag() = prev; }
};

}  // namespace stego
