#include "lipidflow/enhance.hpp"

#include <array>
#include <cmath>

#include "lipidflow/error.hpp"
#include "lipidflow/imgproc.hpp"

namespace lipidflow {

namespace {

Frame with_image(const Frame& like, RasterU8 image)
{
    Frame f;
    f.image = std::move(image);
    f.index = like.index;
    f.timestamp_s = like.timestamp_s;
    return f;
}

}  // namespace

std::string_view to_string(EnhancementKind kind)
{
    switch (kind) {
    case EnhancementKind::Original: return "original";
    case EnhancementKind::AvgSubtract: return "avgsub";
    case EnhancementKind::Unsharp: return "unsharp";
    case EnhancementKind::LaplacianPyramid: return "lappyr";
    case EnhancementKind::LocalHistEq: return "clahe";
    }
    return "?";
}

std::optional<EnhancementKind> parse_enhancement(std::string_view name)
{
    for (EnhancementKind k : kAllEnhancements)
        if (to_string(k) == name) return k;
    return std::nullopt;
}

Frame subtract_average(const Frame& frame, const MeanFrame& mean)
{
    require(frame.image.same_shape(mean.values), "frame/mean dimension mismatch", ErrorCode::DimensionMismatch);
    RasterU8 out(frame.width(), frame.height());
    for (std::size_t p = 0; p < out.size(); ++p)
        out.data[p] = saturate_u8(frame.image.data[p] - mean.values.data[p] + 128.0);
    return with_image(frame, std::move(out));
}

Frame unsharp(const Frame& frame, double sigma, double amount)
{
    require(sigma > 0.0, "unsharp sigma must be positive");
    require(amount >= 0.0, "unsharp amount must be non-negative");
    if (amount == 0.0) return frame;
    const RasterF src = to_float(frame);
    const RasterF blurred = gaussian_blur(src, sigma);
    RasterU8 out(src.width, src.height);
    for (std::size_t p = 0; p < src.size(); ++p) {
        const double v = src.data[p];
        out.data[p] = saturate_u8(v + amount * (v - blurred.data[p]));
    }
    return with_image(frame, std::move(out));
}

Frame laplacian_level(const Frame& frame, int level)
{
    require(level >= 0, "laplacian level must be non-negative");
    const int min_side = 1 << (level + 2);
    if (frame.width() < min_side || frame.height() < min_side)
        fail(ErrorCode::InvalidArgument, "frame too small for laplacian level " + std::to_string(level) +
                                             " (needs at least " + std::to_string(min_side) + " px per side)");

    const auto pyr = gaussian_pyramid(to_float(frame), level + 2);
    const RasterF& g = pyr[level];
    RasterF band = pyr_up(pyr[level + 1], g.width, g.height);
    for (std::size_t p = 0; p < band.size(); ++p) band.data[p] = g.data[p] - band.data[p];
    for (int l = level - 1; l >= 0; --l) band = pyr_up(band, pyr[l].width, pyr[l].height);

    RasterU8 out(band.width, band.height);
    for (std::size_t p = 0; p < band.size(); ++p) out.data[p] = saturate_u8(band.data[p] + 128.0);
    return with_image(frame, std::move(out));
}

Frame local_hist_eq(const Frame& frame, int tile, double clip)
{
    require(tile >= 16, "CLAHE tile must be at least 16 px");
    require(clip >= 1.0, "CLAHE clip gain must be at least 1");
    const int w = frame.width(), h = frame.height();
    const int nx = std::max(1, (w + tile - 1) / tile);
    const int ny = std::max(1, (h + tile - 1) / tile);
    const double tw = static_cast<double>(w) / nx;
    const double th = static_cast<double>(h) / ny;

    // One 256-entry mapping per tile.
    std::vector<std::array<double, 256>> luts(static_cast<std::size_t>(nx) * ny);
    for (int ty = 0; ty < ny; ++ty)
        for (int tx = 0; tx < nx; ++tx) {
            const int x0 = static_cast<int>(std::lround(tx * tw)), x1 = static_cast<int>(std::lround((tx + 1) * tw));
            const int y0 = static_cast<int>(std::lround(ty * th)), y1 = static_cast<int>(std::lround((ty + 1) * th));
            std::array<double, 256> hist{};
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) hist[frame.image(x, y)] += 1.0;
            const double area = static_cast<double>((x1 - x0) * (y1 - y0));
            const double limit = clip * area / 256.0;
            double excess = 0.0;
            for (double& b : hist)
                if (b > limit) {
                    excess += b - limit;
                    b = limit;
                }
            const double bonus = excess / 256.0;
            auto& lut = luts[static_cast<std::size_t>(ty) * nx + tx];
            double cdf = 0.0;
            for (int v = 0; v < 256; ++v) {
                cdf += hist[v] + bonus;
                lut[v] = 255.0 * cdf / area;
            }
        }

    RasterU8 out(w, h);
    for (int y = 0; y < h; ++y) {
        const double fy = std::clamp((y + 0.5) / th - 0.5, 0.0, ny - 1.0);
        const int ty0 = static_cast<int>(fy);
        const int ty1 = std::min(ty0 + 1, ny - 1);
        const double ay = fy - ty0;
        for (int x = 0; x < w; ++x) {
            const double fx = std::clamp((x + 0.5) / tw - 0.5, 0.0, nx - 1.0);
            const int tx0 = static_cast<int>(fx);
            const int tx1 = std::min(tx0 + 1, nx - 1);
            const double ax = fx - tx0;
            const int v = frame.image(x, y);
            const double top = (1 - ax) * luts[ty0 * nx + tx0][v] + ax * luts[ty0 * nx + tx1][v];
            const double bot = (1 - ax) * luts[ty1 * nx + tx0][v] + ax * luts[ty1 * nx + tx1][v];
            out(x, y) = saturate_u8((1 - ay) * top + ay * bot);
        }
    }
    return with_image(frame, std::move(out));
}

Frame enhance_frame(const Frame& frame, EnhancementKind kind, const EnhanceParams& params, const MeanFrame* mean)
{
    switch (kind) {
    case EnhancementKind::Original: return frame;
    case EnhancementKind::AvgSubtract:
        require(mean != nullptr, "average subtraction needs the inter-blink mean");
        return subtract_average(frame, *mean);
    case EnhancementKind::Unsharp: return unsharp(frame, params.unsharp_sigma, params.unsharp_amount);
    case EnhancementKind::LaplacianPyramid: return laplacian_level(frame, params.laplacian_level);
    case EnhancementKind::LocalHistEq: return local_hist_eq(frame, params.clahe_tile, params.clahe_clip);
    }
    fail(ErrorCode::InvalidArgument, "unknown enhancement kind");
}

VideoSequence enhance_sequence(const VideoSequence& frames, EnhancementKind kind, const EnhanceParams& params)
{
    if (kind == EnhancementKind::Original) return frames;
    std::optional<MeanFrame> mean;
    if (kind == EnhancementKind::AvgSubtract) mean = mean_frame(frames);
    VideoSequence out;
    out.fps = frames.fps;
    out.source_id = frames.source_id;
    out.frames.reserve(frames.size());
    for (const Frame& f : frames.frames) out.frames.push_back(enhance_frame(f, kind, params, mean ? &*mean : nullptr));
    return out;
}

}  // namespace lipidflow
