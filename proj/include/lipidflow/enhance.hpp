#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lipidflow/align.hpp"
#include "lipidflow/blink.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

enum class EnhancementKind { Original, AvgSubtract, Unsharp, LaplacianPyramid, LocalHistEq };

inline constexpr EnhancementKind kAllEnhancements[] = {
    EnhancementKind::Original, EnhancementKind::AvgSubtract, EnhancementKind::Unsharp,
    EnhancementKind::LaplacianPyramid, EnhancementKind::LocalHistEq};

/// CLI names: original, avgsub, unsharp, lappyr, clahe.
std::string_view to_string(EnhancementKind kind);
std::optional<EnhancementKind> parse_enhancement(std::string_view name);

struct EnhanceParams {
    double unsharp_sigma = 2.0;
    double unsharp_amount = 1.5;
    int laplacian_level = 1;
    int clahe_tile = 64;
    double clahe_clip = 2.0;
};

/// clamp(frame - mean + 128).
Frame subtract_average(const Frame& frame, const MeanFrame& mean);
/// clamp(frame + amount * (frame - blur(frame, sigma))).
Frame unsharp(const Frame& frame, double sigma = 2.0, double amount = 1.5);
/// Band-pass level of the Laplacian pyramid, +128 biased, upsampled to full resolution.
Frame laplacian_level(const Frame& frame, int level = 1);
/// Contrast-limited adaptive histogram equalization.
Frame local_hist_eq(const Frame& frame, int tile = 64, double clip = 2.0);

Frame enhance_frame(const Frame& frame, EnhancementKind kind, const EnhanceParams& params,
                    const MeanFrame* mean = nullptr);
VideoSequence enhance_sequence(const VideoSequence& frames, EnhancementKind kind, const EnhanceParams& params = {});
inline VideoSequence enhance_interblink(const AlignedInterBlink& ib, EnhancementKind kind,
                                       const EnhanceParams& params = {})
{
    return enhance_sequence(ib.frames, kind, params);
}

}  // namespace lipidflow
