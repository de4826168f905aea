#pragma once

#include <span>
#include <vector>

#include "lipidflow/raster.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

/// Per-pixel mean intensity over a set of frames.
struct MeanFrame {
    RasterD values;
    int width() const { return values.width; }
    int height() const { return values.height; }
};

struct DistanceSeries {
    std::vector<double> distance;
    double threshold = 0.0;
    std::vector<bool> blink_flags;
};

/// Inclusive frame range [start, end] with no blink frame inside, at most 5 s long.
struct InterBlink {
    int start = 0;
    int end = 0;
    double fps = 30.0;

    int frame_count() const { return end - start + 1; }
    double duration_s() const { return frame_count() / fps; }
};

inline constexpr double kMaxInterBlinkSeconds = 5.0;

struct BlinkParams {
    double k = 3.0;
    double min_interblink_s = 0.5;
    /// Recompute the mean over non-blink frames and detect again.
    bool two_pass = false;
};

MeanFrame mean_frame(const VideoSequence& video);
MeanFrame mean_frame(std::span<const Frame> frames);

/// Mean absolute per-pixel difference.
double frame_distance(const Frame& frame, const MeanFrame& mean);

/// threshold = median + k * MAD; short gaps (<= 2 frames) between blink frames are absorbed.
DistanceSeries detect_blinks(std::span<const double> distances, double k = 3.0);

std::vector<InterBlink> extract_interblinks(const VideoSequence& video, const std::vector<bool>& flags,
                                            double min_s = 0.5);

/// Inclusive [start, end] runs of flagged frames.
std::vector<std::pair<int, int>> flag_runs(const std::vector<bool>& flags, bool value = true);

struct BlinkAnalysis {
    DistanceSeries series;
    std::vector<std::pair<int, int>> blinks;
    std::vector<InterBlink> interblinks;
};

BlinkAnalysis analyze_blinks(const VideoSequence& video, const BlinkParams& params = {});

}  // namespace lipidflow
