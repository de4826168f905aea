#include "lipidflow/features.hpp"

#include <algorithm>
#include <limits>

#include "lipidflow/error.hpp"

namespace lipidflow {

int fast_score(const RasterU8& image, int x, int y, int threshold, int arc)
{
    const int p = image(x, y);
    int diff[16];
    int sign[16];  // +1 brighter, -1 darker, 0 similar
    for (int i = 0; i < 16; ++i) {
        const int v = image(x + kFastCircle[i][0], y + kFastCircle[i][1]);
        diff[i] = v - p;
        sign[i] = diff[i] > threshold ? 1 : (diff[i] < -threshold ? -1 : 0);
    }
    // Quick rejection on the compass points when the arc cannot fit between them.
    if (arc >= 9) {
        int bright = 0, dark = 0;
        for (int i = 0; i < 16; i += 4) {
            bright += sign[i] > 0;
            dark += sign[i] < 0;
        }
        if (bright < 2 && dark < 2) return 0;
    }

    // Start just after a break so each maximal run is seen once without wrapping.
    int start = -1;
    for (int i = 0; i < 16; ++i)
        if (sign[i] != sign[(i + 15) % 16]) {
            start = i;
            break;
        }
    if (start < 0) {
        // Uniform circle.
        if (sign[0] == 0 || arc > 16) return 0;
        int s = 0;
        for (int i = 0; i < 16; ++i) s += std::abs(diff[i]);
        return s;
    }

    int score = 0;
    int run = 0, run_sum = 0, run_sign = 0;
    for (int k = 0; k <= 16; ++k) {
        const int i = (start + k) % 16;
        if (k < 16 && run > 0 && sign[i] == run_sign) {
            ++run;
            run_sum += std::abs(diff[i]);
            continue;
        }
        if (run_sign != 0 && run >= arc) score += run_sum;
        if (k == 16) break;
        run = 1;
        run_sign = sign[i];
        run_sum = std::abs(diff[i]);
    }
    return score;
}

std::vector<FeaturePoint> fast_detect(const RasterU8& image, int threshold, int arc)
{
    require(threshold >= 1, "FAST threshold must be at least 1");
    require(arc >= 1 && arc <= 16, "FAST arc must lie in [1, 16]");
    const int w = image.width, h = image.height;
    constexpr int kBorder = 3;
    Raster<int> scores(w, h, 0);
    for (int y = kBorder; y < h - kBorder; ++y)
        for (int x = kBorder; x < w - kBorder; ++x) scores(x, y) = fast_score(image, x, y, threshold, arc);

    std::vector<FeaturePoint> out;
    for (int y = kBorder; y < h - kBorder; ++y)
        for (int x = kBorder; x < w - kBorder; ++x) {
            const int s = scores(x, y);
            if (s <= 0) continue;
            bool is_max = true;
            for (int j = -1; j <= 1 && is_max; ++j)
                for (int i = -1; i <= 1; ++i)
                    if ((i || j) && scores(x + i, y + j) > s) {
                        is_max = false;
                        break;
                    }
            if (is_max) out.push_back({static_cast<double>(x), static_cast<double>(y), static_cast<double>(s)});
        }
    return out;
}

std::vector<FeaturePoint> select_seed_points(const std::vector<FeaturePoint>& points, const IrisMask& mask,
                                             int columns)
{
    require(columns >= 1, "seed column count must be at least 1");
    int xmin = std::numeric_limits<int>::max(), xmax = -1;
    for (int y = 0; y < mask.mask.height; ++y)
        for (int x = 0; x < mask.mask.width; ++x)
            if (mask.mask(x, y)) {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
            }
    if (xmax < 0) fail(ErrorCode::NoSeeds, "iris mask is empty");

    const double span = static_cast<double>(xmax - xmin + 1);
    std::vector<const FeaturePoint*> best(columns, nullptr);
    for (const FeaturePoint& p : points) {
        const int px = static_cast<int>(std::lround(p.x)), py = static_cast<int>(std::lround(p.y));
        if (px < 0 || py < 0 || px >= mask.mask.width || py >= mask.mask.height || !mask.contains(px, py)) continue;
        const int band = std::clamp(static_cast<int>((p.x - xmin) / span * columns), 0, columns - 1);
        if (!best[band] || p.score > best[band]->score) best[band] = &p;
    }
    std::vector<FeaturePoint> out;
    for (const FeaturePoint* p : best)
        if (p) out.push_back(*p);
    if (out.empty()) fail(ErrorCode::NoSeeds, "no feature points inside the iris mask");
    return out;
}

}  // namespace lipidflow
