#include "stego/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

namespace stego {

namespace fs = std::filesystem;

std::vector<std::string> list_dataset_files(const DatasetSpec& spec) {
  if (!fs::is_directory(spec.directory))
    throw IoError("dataset directory not readable: " + spec.directory);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(spec.directory)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (std::find(spec.extensions.begin(), spec.extensions.end(), ext) != spec.extensions.end())
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<ImageU8> load_dataset(const DatasetSpec& spec) {
  std::vector<ImageU8> images;
  for (const std::string& path : list_dataset_files(spec)) {
    try {
      ImageU8 img = load_image(path);
      if (img.width < spec.crop || img.height < spec.crop) {
        std::cerr << "warning: skipping " << path << " (smaller than crop "
                  << spec.crop << ")\n";
        continue;
      }
      images.push_back(center_crop(img, spec.crop));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << path << " (" << e.what() << ")\n";
    }
  }
  if (images.empty()) throw DataError("no decodable images in " + spec.directory);
  return images;
}

}  // namespace stego
