#pragma once

#include <vector>

#include "lipidflow/align.hpp"
#include "lipidflow/raster.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct SnakeParams {
    double alpha = 0.1;   ///< elasticity
    double beta = 0.05;   ///< rigidity
    double gamma = 2.0;   ///< image energy weight
    double step = 1.0;
    int iters = 200;      ///< per capture stage
    double tol = 0.1;     ///< px
    /// Smoothing of the external energy for successive stages, coarse to fine (0 = raw).
    std::vector<double> capture_sigmas = {16.0, 8.0, 4.0, 2.0};
};

/// Open polyline, x strictly increasing.
struct SnakeContour {
    std::vector<Point2> points;

    /// Linear interpolation of the contour height; NaN outside the x-range.
    double height_at(double x) const;
};

struct IrisMask {
    Mask mask;
    PupilCircle pupil;
    int eyelash_y = 0;
    SnakeContour bottom;
    double pupil_exclusion_r = 0.0;

    bool contains(int x, int y) const { return mask(x, y) != 0; }
    /// Vertical extent [eyelash_y, bottom(x)] of the region at column x.
    std::pair<double, double> y_extent(double x) const;
};

inline constexpr double kSnakeInitRadiusFactor = 2.2;
inline constexpr double kPupilExclusionFactor = 1.1;
inline constexpr int kSnakePoints = 100;
inline constexpr double kEdgeSigma = 2.0;

/// |grad| after a sigma=2 Gaussian blur; central differences, one-sided at the border.
RasterF gradient_magnitude(const Frame& frame);
RasterF gradient_magnitude(const RasterF& image, double blur_sigma = 2.0);
/// Positive part of the intensity derivative pointing away from the pupil center (dark inside, bright outside).
RasterF outward_edge_strength(const Frame& frame, const PupilCircle& pupil, double blur_sigma = 2.0);

/// Discrete energy sum a|v'|^2 + b|v''|^2 - g P(v) for a fixed external potential P.
double snake_energy(const SnakeContour& c, const RasterF& potential, const SnakeParams& params);

struct SnakeTrace {
    std::vector<double> energies;  ///< one per accepted iteration, starting with the initial state
    int iterations = 0;
};

/// One capture stage: semi-implicit descent on potential P (external energy -gamma P).
SnakeContour evolve_snake_fixed(const SnakeContour& init, const RasterF& potential, const SnakeParams& params,
                                SnakeTrace* trace = nullptr);

/// Full evolution on a gradient-magnitude raster: potential (|grad|/max)^2 relaxed coarse to fine.
SnakeContour evolve_snake(const SnakeContour& init, const RasterF& energy, const SnakeParams& params = {});

IrisMask build_iris_mask(const Frame& frame, const PupilCircle& pupil, const SnakeParams& params = {});

}  // namespace lipidflow
