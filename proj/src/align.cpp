#include "lipidflow/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lipidflow/error.hpp"
#include "lipidflow/imgproc.hpp"

namespace lipidflow {

namespace {

constexpr double kPupilBlurSigma = 3.0;
constexpr double kMinAreaFraction = 0.001;
constexpr double kMaxAreaFraction = 0.25;
constexpr double kMinContrast = 8.0;

Mask open3x3(const Mask& m)
{
    auto pass = [](const Mask& src, bool erode) {
        Mask dst(src.width, src.height);
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) {
                bool v = erode;
                for (int j = -1; j <= 1 && v == erode; ++j)
                    for (int i = -1; i <= 1; ++i) {
                        const bool s = src.clamped(x + i, y + j) != 0;
                        if (s != erode) {
                            v = !erode;
                            break;
                        }
                    }
                dst(x, y) = v ? 1 : 0;
            }
        return dst;
    };
    return pass(pass(m, true), false);
}

struct Component {
    std::vector<int> pixels;
    bool touches_border = false;
};

Component largest_component(const Mask& m)
{
    const int w = m.width, h = m.height;
    std::vector<int> label(m.size(), -1);
    Component best;
    std::vector<int> stack;
    for (int start = 0; start < static_cast<int>(m.size()); ++start) {
        if (!m.data[start] || label[start] >= 0) continue;
        Component comp;
        stack.assign(1, start);
        label[start] = start;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            comp.pixels.push_back(p);
            const int x = p % w, y = p / w;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) comp.touches_border = true;
            const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (auto [nx, ny] : nb) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const int q = ny * w + nx;
                if (m.data[q] && label[q] < 0) {
                    label[q] = start;
                    stack.push_back(q);
                }
            }
        }
        if (comp.pixels.size() > best.pixels.size()) best = std::move(comp);
    }
    return best;
}

Component dark_component(const RasterF& img, float threshold, bool strict)
{
    Mask m(img.width, img.height);
    for (std::size_t p = 0; p < img.size(); ++p)
        m.data[p] = (strict ? img.data[p] < threshold : img.data[p] <= threshold) ? 1 : 0;
    return largest_component(open3x3(m));
}

}  // namespace

PupilCircle locate_pupil(const Frame& frame, double dark_percentile)
{
    require(frame.width() >= 32 && frame.height() >= 32, "pupil search needs a frame of at least 32x32");
    require(dark_percentile > 0.0 && dark_percentile <= 0.25, "dark percentile must lie in (0, 0.25]");

    const RasterF blurred = gaussian_blur(to_float(frame), kPupilBlurSigma);
    const int w = blurred.width;
    const double n = static_cast<double>(blurred.size());

    std::vector<float> sorted = blurred.data;
    const auto qi = static_cast<std::size_t>(std::floor(dark_percentile * (n - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(qi), sorted.end());
    const float q = sorted[qi];

    // Strict comparison keeps a flat background out of the core; fall back when the core is flat itself.
    Component core = dark_component(blurred, q, true);
    if (core.pixels.empty()) core = dark_component(blurred, q, false);

    auto reject = [&](const Component& c) {
        return c.pixels.size() < kMinAreaFraction * n || c.pixels.size() > kMaxAreaFraction * n || c.touches_border;
    };
    auto not_found = [&](const std::string& why) -> PupilCircle {
        fail(ErrorCode::PupilNotFound, "pupil not found in frame " + std::to_string(frame.index) + ": " + why);
    };
    if (reject(core)) return not_found("no isolated dark component of plausible size");

    double sx = 0, sy = 0, dark = 0;
    for (int p : core.pixels) {
        sx += p % w;
        sy += p / w;
        dark += blurred.data[p];
    }
    const double area = static_cast<double>(core.pixels.size());
    const double cx0 = sx / area, cy0 = sy / area;
    const double r0 = std::sqrt(area / std::numbers::pi);
    dark /= area;

    double surround = 0;
    std::size_t ring = 0;
    const double rin = 1.25 * r0 + 2.0, rout = 1.6 * r0 + 4.0;
    for (int y = std::max(0, static_cast<int>(cy0 - rout)); y <= std::min(blurred.height - 1, static_cast<int>(cy0 + rout)); ++y)
        for (int x = std::max(0, static_cast<int>(cx0 - rout)); x <= std::min(w - 1, static_cast<int>(cx0 + rout)); ++x) {
            const double d = std::hypot(x - cx0, y - cy0);
            if (d >= rin && d <= rout) {
                surround += blurred(x, y);
                ++ring;
            }
        }
    if (ring == 0) return not_found("no surround around dark component");
    surround /= static_cast<double>(ring);
    if (surround - dark < kMinContrast) return not_found("dark component lacks contrast with its surround");

    const Component pupil = dark_component(blurred, static_cast<float>(0.5 * (dark + surround)), true);
    if (reject(pupil)) return not_found("refined component has implausible size");

    sx = sy = 0;
    for (int p : pupil.pixels) {
        sx += p % w;
        sy += p / w;
    }
    const double parea = static_cast<double>(pupil.pixels.size());
    return {sx / parea, sy / parea, std::sqrt(parea / std::numbers::pi)};
}

RasterU8 translate(const RasterU8& img, Offset offset)
{
    RasterU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out(x, y) = img.clamped(x - offset.dx, y - offset.dy);
    return out;
}

AlignedInterBlink align_interblink(const VideoSequence& video, const InterBlink& ib, double dark_percentile)
{
    require(ib.start >= 0 && ib.start <= ib.end && ib.end < static_cast<int>(video.size()),
            "inter-blink range outside the video", ErrorCode::OutOfBounds);

    AlignedInterBlink out;
    out.range = ib;
    std::vector<RasterU8> images;
    images.reserve(static_cast<std::size_t>(ib.frame_count()));
    for (int i = ib.start; i <= ib.end; ++i) {
        PupilCircle pc;
        try {
            pc = locate_pupil(video.frames[i], dark_percentile);
        } catch (const Error& e) {
            fail(ErrorCode::Alignment, "alignment failed at frame " + std::to_string(i) + ": " + e.what());
        }
        Offset off;
        if (!out.pupil.empty()) {
            off.dx = static_cast<int>(std::lround(out.pupil.front().cx - pc.cx));
            off.dy = static_cast<int>(std::lround(out.pupil.front().cy - pc.cy));
        }
        out.pupil.push_back(pc);
        out.offsets.push_back(off);
        images.push_back(off == Offset{} ? video.frames[i].image : translate(video.frames[i].image, off));
    }
    out.frames = make_sequence(std::move(images), video.fps, video.source_id);
    return out;
}

}  // namespace lipidflow
