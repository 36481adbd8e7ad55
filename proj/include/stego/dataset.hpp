#pragma once

#include "stego/image_io.hpp"

#include <string>
#include <vector>

namespace stego {

/// Directory of cover images. Files are taken in lexicographic name order;
/// undecodable files are logged and skipped, an empty result is fatal.
struct DatasetSpec {
  std::string directory;
  Index crop = 64;
  /// Accepted file extensions (lowercase, with dot).
  std::vector<std::string> extensions{".png", ".ppm"};
};

std::vector<std::string> list_dataset_files(const DatasetSpec& spec);

/// Decoded, center-cropped 8-bit images for every accepted file.
std::vector<ImageU8> load_dataset(const DatasetSpec& spec);

}  // namespace stego
