#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipidflow/features.hpp"
#include "lipidflow/raster.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

/// Dense displacement field, u rightward and v downward, in pixels.
struct FlowField {
    RasterF u;
    RasterF v;
    int width() const { return u.width; }
    int height() const { return u.height; }
};

struct LKParams {
    int window = 21;
    int levels = 3;
    int iters = 30;
    double eps = 0.01;
    double min_eig = 1e-4;  ///< on [0,1] intensities, divided by the window area
};

struct FarnebackParams {
    int levels = 3;
    double scale = 0.5;  ///< fixed: pyramid levels are 2x decimations
    int poly_n = 7;
    double poly_sigma = 1.5;
    int iters = 3;
    int blur = 15;
};

enum class TrackStatus { Ok, LostOutOfBounds, LostLowTexture, LostDiverged, LostFbCheckFailed };

inline bool is_ok(TrackStatus s) { return s == TrackStatus::Ok; }
/// "ok", "out-of-bounds", "low-texture", "diverged", "fb-check-failed".
std::string_view to_string(TrackStatus s);

struct LKResult {
    std::vector<Point2> points;
    std::vector<TrackStatus> status;
};

void validate(const LKParams& p);
void validate(const FarnebackParams& p);

/// Pyramidal Lucas-Kanade from `from` to `to` for each point.
LKResult lk_step(const RasterF& from, const RasterF& to, const std::vector<Point2>& points, const LKParams& params);
LKResult lk_step(const Frame& from, const Frame& to, const std::vector<FeaturePoint>& points, const LKParams& params);

/// Per-level quadratic polynomial expansion of a frame, reusable across frame pairs.
struct PolyExpansion {
    /// Per level, six coefficient planes: r1 + r2 x + r3 y + r4 x^2 + r5 y^2 + r6 xy.
    std::vector<std::array<RasterF, 6>> levels;
    int width = 0;
    int height = 0;
};

PolyExpansion poly_expand(const RasterF& image, const FarnebackParams& params);
FlowField farneback(const PolyExpansion& from, const PolyExpansion& to, const FarnebackParams& params);
FlowField farneback(const Frame& from, const Frame& to, const FarnebackParams& params);
FlowField farneback(const RasterF& from, const RasterF& to, const FarnebackParams& params);

/// Bilinear interpolation of the field; throws OutOfBounds outside [0, w-1] x [0, h-1].
std::pair<double, double> sample_flow(const FlowField& field, double x, double y);

/// "FLO1" | u32 width | u32 height | u32 planes(=2), then u then v as little-endian float32.
void save_flow_binary(const FlowField& field, const std::filesystem::path& path);
FlowField load_flow_binary(const std::filesystem::path& path);
std::string flow_to_csv(const FlowField& field);

}  // namespace lipidflow
