#include "daml/data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "daml/error.hpp"

namespace daml::data {

void AugmentPolicy::validate() const {
  auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(is_prob(flip_prob) && is_prob(erase_prob), ErrorKind::InvalidConfig, "probabilities must lie in [0,1]");
  require(image_size.height > 0 && image_size.width > 0, ErrorKind::InvalidConfig, "image size must be positive");
  require(erase_area_min > 0.0 && erase_area_min <= erase_area_max && erase_area_max <= 1.0,
          ErrorKind::InvalidConfig, "bad erase area range");
  require(erase_aspect_min > 0.0 && erase_aspect_min <= 1.0, ErrorKind::InvalidConfig, "bad erase aspect range");
}

int AugmentPolicy::crop_padding() const {
  return std::max(1, static_cast<int>(std::lround(image_size.height * 10.0 / 256.0)));
}

Image horizontal_flip(const Image& image) {
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, image.width - 1 - x, c) = image.at(y, x, c);
  return out;
}

Rect random_erase(Image& image, const AugmentPolicy& policy, Rng& rng) {
  const double area = static_cast<double>(image.height) * image.width;
  std::uniform_real_distribution<double> area_frac(policy.erase_area_min, policy.erase_area_max);
  std::uniform_real_distribution<double> log_aspect(std::log(policy.erase_aspect_min),
                                                    -std::log(policy.erase_aspect_min));
  Rect rect;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double target = area * area_frac(rng);
    const double aspect = std::exp(log_aspect(rng));
    const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (h >= 1 && w >= 1 && h < image.height && w < image.width) {
      std::uniform_int_distribution<int> ys(0, image.height - h);
      std::uniform_int_distribution<int> xs(0, image.width - w);
      rect = {ys(rng), xs(rng), h, w};
      break;
    }
  }
  if (rect.height == 0) {
    // Tiny images: fall back to a single pixel.
    std::uniform_int_distribution<int> ys(0, image.height - 1);
    std::uniform_int_distribution<int> xs(0, image.width - 1);
    rect = {ys(rng), xs(rng), 1, 1};
  }
  std::uniform_int_distribution<int> value(0, 255);
  for (int y = rect.y; y < rect.y + rect.height; ++y)
    for (int x = rect.x; x < rect.x + rect.width; ++x)
      for (int c = 0; c < Image::kChannels; ++c) image.at(y, x, c) = static_cast<std::uint8_t>(value(rng));
  return rect;
}

Image pad_and_random_crop(const Image& image, int padding, Rng& rng) {
  std::uniform_int_distribution<int> offset(0, 2 * padding);
  const int oy = offset(rng) - padding;
  const int ox = offset(rng) - padding;
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    const int sy = y + oy;
    if (sy < 0 || sy >= image.height) continue;
    for (int x = 0; x < image.width; ++x) {
      const int sx = x + ox;
      if (sx < 0 || sx >= image.width) continue;
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

Image augment(const Image& image, const AugmentPolicy& policy, Rng& rng) {
  require(image.size() == policy.image_size, ErrorKind::ShapeMismatch, "image does not match policy size");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Image out = image;
  if (policy.crop_enabled) out = pad_and_random_crop(out, policy.crop_padding(), rng);
  if (coin(rng) < policy.flip_prob) out = horizontal_flip(out);
  if (coin(rng) < policy.erase_prob) random_erase(out, policy, rng);
  return out;
}

}  // namespace daml::data
