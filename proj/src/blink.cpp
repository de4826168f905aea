#include "lipidflow/blink.hpp"

#include <algorithm>
#include <cmath>

#include "lipidflow/error.hpp"

namespace lipidflow {

namespace {

double median_of(std::vector<double> v)
{
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

MeanFrame mean_frame(std::span<const Frame> frames)
{
    require(!frames.empty(), "mean of an empty video", ErrorCode::EmptyInput);
    const int w = frames.front().width();
    const int h = frames.front().height();
    std::vector<std::uint64_t> sums(static_cast<std::size_t>(w) * h, 0);
    for (const Frame& f : frames) {
        require(f.image.same_shape(w, h), "frame dimensions differ", ErrorCode::DimensionMismatch);
        for (std::size_t p = 0; p < sums.size(); ++p) sums[p] += f.image.data[p];
    }
    MeanFrame m{RasterD(w, h)};
    const double n = static_cast<double>(frames.size());
    for (std::size_t p = 0; p < sums.size(); ++p) m.values.data[p] = static_cast<double>(sums[p]) / n;
    return m;
}

MeanFrame mean_frame(const VideoSequence& video) { return mean_frame(std::span<const Frame>(video.frames)); }

double frame_distance(const Frame& frame, const MeanFrame& mean)
{
    require(frame.image.same_shape(mean.values), "frame/mean dimension mismatch", ErrorCode::DimensionMismatch);
    require(!frame.image.empty(), "empty frame", ErrorCode::EmptyInput);
    double acc = 0.0;
    for (std::size_t p = 0; p < frame.image.size(); ++p) acc += std::abs(frame.image.data[p] - mean.values.data[p]);
    return acc / static_cast<double>(frame.image.size());
}

DistanceSeries detect_blinks(std::span<const double> distances, double k)
{
    require(distances.size() >= 3, "blink detection needs at least 3 frames", ErrorCode::InsufficientData);
    require(k > 0.0, "blink sensitivity k must be positive");

    DistanceSeries out;
    out.distance.assign(distances.begin(), distances.end());
    const double med = median_of(out.distance);
    std::vector<double> dev(out.distance.size());
    std::transform(out.distance.begin(), out.distance.end(), dev.begin(),
                   [med](double d) { return std::abs(d - med); });
    const double mad = median_of(dev);
    out.threshold = med + k * mad;

    const std::size_t n = out.distance.size();
    out.blink_flags.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.blink_flags[i] = out.distance[i] > out.threshold;

    // Absorb non-blink gaps of at most two frames that sit between blink frames.
    constexpr std::size_t kMaxGap = 2;
    std::size_t last_blink = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.blink_flags[i]) continue;
        if (last_blink != n && i - last_blink > 1 && i - last_blink - 1 <= kMaxGap)
            for (std::size_t j = last_blink + 1; j < i; ++j) out.blink_flags[j] = true;
        last_blink = i;
    }
    return out;
}

std::vector<std::pair<int, int>> flag_runs(const std::vector<bool>& flags, bool value)
{
    std::vector<std::pair<int, int>> runs;
    const int n = static_cast<int>(flags.size());
    for (int i = 0; i < n;) {
        if (flags[i] != value) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && flags[j + 1] == value) ++j;
        runs.emplace_back(i, j);
        i = j + 1;
    }
    return runs;
}

std::vector<InterBlink> extract_interblinks(const VideoSequence& video, const std::vector<bool>& flags, double min_s)
{
    require(min_s > 0.0, "minimum inter-blink duration must be positive");
    require(flags.size() == video.size(), "flag count does not match frame count", ErrorCode::DimensionMismatch);
    const double fps = video.fps;
    // Frame count representing exactly 5 s, guarded against fps rounding.
    const int max_frames = static_cast<int>(std::floor(kMaxInterBlinkSeconds * fps + 1e-9));

    std::vector<InterBlink> out;
    for (auto [s, e] : flag_runs(flags, false)) {
        const int len = e - s + 1;
        if (len / fps + 1e-12 < min_s) continue;
        out.push_back({s, s + std::min(len, max_frames) - 1, fps});
    }
    return out;
}

BlinkAnalysis analyze_blinks(const VideoSequence& video, const BlinkParams& params)
{
    require(!video.empty(), "empty video", ErrorCode::EmptyInput);
    auto distances_to = [&](const MeanFrame& m) {
        std::vector<double> d(video.size());
        for (std::size_t i = 0; i < video.size(); ++i) d[i] = frame_distance(video.frames[i], m);
        return d;
    };

    BlinkAnalysis out;
    out.series = detect_blinks(distances_to(mean_frame(video)), params.k);
    if (params.two_pass) {
        std::vector<Frame> open;
        for (std::size_t i = 0; i < video.size(); ++i)
            if (!out.series.blink_flags[i]) open.push_back(video.frames[i]);
        if (!open.empty()) out.series = detect_blinks(distances_to(mean_frame(open)), params.k);
    }
    out.blinks = flag_runs(out.series.blink_flags, true);
    out.interblinks = extract_interblinks(video, out.series.blink_flags, params.min_interblink_s);
    return out;
}

}  // namespace lipidflow
