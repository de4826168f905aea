#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lipidflow/enhance.hpp"
#include "lipidflow/features.hpp"
#include "lipidflow/flow.hpp"
#include "lipidflow/segment.hpp"

namespace lipidflow {

enum class FlowMethod { LucasKanade, Farneback };

struct VariantId {
    FlowMethod flow = FlowMethod::Farneback;
    EnhancementKind enhancement = EnhancementKind::LaplacianPyramid;
    bool operator==(const VariantId&) const = default;
};

/// "lk:clahe", "farneback:lappyr", ...
std::string to_string(VariantId id);
std::optional<VariantId> parse_variant(std::string_view text);
/// All ten (flow x enhancement) combinations, LK first.
std::vector<VariantId> all_variants();
inline constexpr VariantId kDefaultVariant{FlowMethod::Farneback, EnhancementKind::LaplacianPyramid};

struct Trajectory {
    std::vector<Point2> positions;  ///< forward time order, one per frame
    TrackStatus status = TrackStatus::Ok;
    FeaturePoint seed;
    int lost_at = -1;  ///< frame whose position could not be estimated; earlier positions are frozen copies
};

struct DisplacementSeries {
    std::vector<double> t;
    std::vector<double> dx;  ///< rightward-positive
    std::vector<double> dy;  ///< upward-positive
    std::vector<int> n_points;
};

struct TrackOptions {
    bool fb_check = true;
    double fb_threshold = 2.0;
};

struct FilterParams {
    double bottom_frac = 0.15;
    double top_frac = 0.25;
};

/// Tracks seeds from the last frame back to the first.
std::vector<Trajectory> track_backwards(const VideoSequence& frames, const std::vector<FeaturePoint>& seeds,
                                        FlowMethod method, const LKParams& lk = {}, const FarnebackParams& fb = {},
                                        const TrackOptions& options = {});

/// Keeps Ok trajectories starting near the bottom of the iris, then the highest ones in the last frame.
std::vector<Trajectory> filter_trajectories(const std::vector<Trajectory>& trajs, const IrisMask& mask,
                                            const FilterParams& params = {});

/// Per-frame medians of (y[0] - y[k]) and (x[k] - x[0]) over trajectories valid at frame 0.
DisplacementSeries aggregate_displacement(const std::vector<Trajectory>& trajs, double fps, bool absolute_dx = false);

std::string trajectories_to_csv(const std::vector<Trajectory>& trajs);
std::string displacement_to_csv(const DisplacementSeries& series);
DisplacementSeries displacement_from_csv(const std::string& text);

}  // namespace lipidflow
