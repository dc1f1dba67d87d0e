#include "daml/data/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "daml/error.hpp"

namespace daml::data {

Image::Image(int h, int w, std::uint8_t fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * kChannels, fill) {}

namespace {

cv::Mat as_mat(const Image& image) {
  // OpenCV wants a mutable pointer even for read-only use.
  return cv::Mat(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
}

Image from_mat(const cv::Mat& mat) {
  Image out(mat.rows, mat.cols);
  cv::Mat dst(mat.rows, mat.cols, CV_8UC3, out.pixels.data());
  mat.copyTo(dst);
  return out;
}

}  // namespace

Image resize(const Image& image, ImageSize size) {
  if (image.size() == size) return image;
  cv::Mat resized;
  cv::resize(as_mat(image), resized, cv::Size(size.width, size.height), 0, 0, cv::INTER_LINEAR);
  return from_mat(resized);
}

Image load_image(const std::filesystem::path& path, ImageSize size) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) raise(ErrorKind::IoError, "cannot read image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return resize(from_mat(rgb), size);
}

void save_png(const Image& image, const std::filesystem::path& path) {
  cv::Mat bgr;
  cv::cvtColor(as_mat(image), bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) raise(ErrorKind::IoError, "cannot write image " + path.string());
}

Matrix to_input(std::span<const Image> images) {
  if (images.empty()) return Matrix(0, 0);
  const int h = images.front().height;
  const int w = images.front().width;
  const int plane = h * w;
  Matrix out(static_cast<Eigen::Index>(images.size()), Image::kChannels * plane);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = images[n];
    require(img.height == h && img.width == w, ErrorKind::ShapeMismatch, "images in a batch must share one size");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < Image::kChannels; ++c)
          out(static_cast<Eigen::Index>(n), c * plane + y * w + x) =
              (img.at(y, x, c) / 255.0 - kPixelMean) / kPixelStd;
  }
  return out;
}

Matrix to_input(const Image& image) { return to_input(std::span<const Image>(&image, 1)); }

}  // namespace daml::data
