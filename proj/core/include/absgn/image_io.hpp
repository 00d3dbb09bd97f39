// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <string>

#include "absgn/tensor.hpp"

namespace absgn {

/// Read an 8-bit PNG/JPEG as [1,3,H,W] RGB in [0,1] (grayscale is expanded,
/// alpha dropped). Throws std::runtime_error on unreadable files.
Tensor<float> load_image_rgb(const std::string& path);

/// Clamp to [0,1], quantize to 8-bit and write PNG or JPEG by extension.
void save_image_rgb(const Tensor<float>& img, const std::string& path);

}  // namespace absgn
