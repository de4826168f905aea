#pragma once

#include <array>
#include <vector>

#include "lipidflow/raster.hpp"
#include "lipidflow/segment.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

struct FeaturePoint {
    double x = 0.0;
    double y = 0.0;
    double score = 0.0;
};

struct FastParams {
    int threshold = 20;
    int arc = 9;
};

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
inline constexpr std::array<std::array<int, 2>, 16> kFastCircle = {{{0, -3}, {1, -3}, {2, -2}, {3, -1},
                                                                   {3, 0}, {3, 1}, {2, 2}, {1, 3},
                                                                   {0, 3}, {-1, 3}, {-2, 2}, {-3, 1},
                                                                   {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

/// Segment-test corners with 3x3 non-maximum suppression, sorted by (y, x).
std::vector<FeaturePoint> fast_detect(const RasterU8& image, int threshold = 20, int arc = 9);
inline std::vector<FeaturePoint> fast_detect(const Frame& frame, int threshold = 20, int arc = 9)
{
    return fast_detect(frame.image, threshold, arc);
}

/// Raw segment-test score at one pixel (0 if not a corner).
int fast_score(const RasterU8& image, int x, int y, int threshold, int arc);

/// Keeps in-mask points, then the best-scoring point in each of `columns` equal-width bands.
std::vector<FeaturePoint> select_seed_points(const std::vector<FeaturePoint>& points, const IrisMask& mask,
                                             int columns = 16);

}  // namespace lipidflow
