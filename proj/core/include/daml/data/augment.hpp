#pragma once

#include "daml/data/image.hpp"
#include "daml/types.hpp"

namespace daml::data {

struct AugmentPolicy {
  double flip_prob = 0.5;
  double erase_prob = 0.5;
  bool crop_enabled = false;
  ImageSize image_size{256, 128};

  // Random-erasing shape ranges (area fraction, aspect ratio).
  double erase_area_min = 0.02;
  double erase_area_max = 0.4;
  double erase_aspect_min = 0.3;

  static AugmentPolicy identity(ImageSize size) { return {0.0, 0.0, false, size}; }

  // Throws InvalidConfig when a probability leaves [0,1] or the size is empty.
  void validate() const;

  // Zero padding used before the random crop; 10px at 256x128 input.
  int crop_padding() const;
};

struct Rect {
  int y = 0;
  int x = 0;
  int height = 0;
  int width = 0;

  bool contains(int py, int px) const { return py >= y && py < y + height && px >= x && px < x + width; }
};

Image horizontal_flip(const Image& image);

// Overwrites a random rectangle with uniform noise and returns it.
Rect random_erase(Image& image, const AugmentPolicy& policy, Rng& rng);

Image pad_and_random_crop(const Image& image, int padding, Rng& rng);

Image augment(const Image& image, const AugmentPolicy& policy, Rng& rng);

}  // namespace daml::data
