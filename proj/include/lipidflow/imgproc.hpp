#pragma once

#include <span>
#include <vector>

#include "lipidflow/raster.hpp"

namespace lipidflow {

struct Frame;

RasterF to_float(const Frame& frame);
RasterF to_float(const RasterU8& img);
RasterU8 to_u8(const RasterF& img);

/// Normalized Gaussian taps truncated at +-3 sigma (radius = ceil(3 sigma)).
std::vector<float> gaussian_kernel(double sigma);

/// Separable correlation with edge-replicated borders.
RasterF convolve_separable(const RasterF& img, std::span<const float> kx, std::span<const float> ky);
RasterF gaussian_blur(const RasterF& img, double sigma);

/// Mean over a (2r+1)^2 window, edge replicated.
RasterF box_blur(const RasterF& img, int radius);

/// 5-tap binomial [1 4 6 4 1]/16 blur then keep even rows/columns.
RasterF pyr_down(const RasterF& img);
/// Zero-insertion upsample to (w, h) followed by the same kernel scaled by 4.
RasterF pyr_up(const RasterF& img, int w, int h);

/// Gaussian pyramid; level 0 is the input.
std::vector<RasterF> gaussian_pyramid(const RasterF& img, int levels);

}  // namespace lipidflow
