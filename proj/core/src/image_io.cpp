// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#include "absgn/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace absgn {

Tensor<float> load_image_rgb(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot read image: " + path);
  const int h = bgr.rows, w = bgr.cols;
  Tensor<float> out(Shape{1, 3, h, w});
  for (int y = 0; y < h; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      out.at(0, 0, y, x) = row[x][2] / 255.0f;  // OpenCV loads BGR
      out.at(0, 1, y, x) = row[x][1] / 255.0f;
      out.at(0, 2, y, x) = row[x][0] / 255.0f;
    }
  }
  return out;
}

void save_image_rgb(const Tensor<float>& img, const std::string& path) {
  check(img.rank() == 4 && img.dim(0) == 1 && img.dim(1) == 3, "save_image_rgb: expected [1,3,H,W]");
  const int h = img.dim(2), w = img.dim(3);
  cv::Mat bgr(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v = std::min(1.0f, std::max(0.0f, img.at(0, c, y, x)));
        row[x][2 - c] = static_cast<uchar>(std::lround(v * 255.0f));
      }
    }
  }
  if (!cv::imwrite(path, bgr)) throw std::runtime_error("cannot write image: " + path);
}

}  // namespace absgn
