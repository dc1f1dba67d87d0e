#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "daml/types.hpp"

namespace daml::data {

struct ImageSize {
  int height = 256;
  int width = 128;

  bool operator==(const ImageSize&) const = default;
};

// 8-bit RGB image stored interleaved (row, column, channel).
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0);

  ImageSize size() const { return {height, width}; }

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }

  bool operator==(const Image&) const = default;
};

Image resize(const Image& image, ImageSize size);

// Reads any format OpenCV understands and resizes to `size` when it differs.
Image load_image(const std::filesystem::path& path, ImageSize size);
void save_png(const Image& image, const std::filesystem::path& path);

// Per-channel normalization applied before images enter an encoder.
inline constexpr double kPixelMean = 0.5;
inline constexpr double kPixelStd = 0.25;

// One row per image in channel-major (C, H, W) order, normalized.
Matrix to_input(std::span<const Image> images);
Matrix to_input(const Image& image);

}  // namespace daml::data
