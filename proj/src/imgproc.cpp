#include "lipidflow/imgproc.hpp"

#include <array>
#include <cmath>

#include "lipidflow/error.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

namespace {

constexpr std::array<float, 5> kBinomial = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};

void correlate_rows(const RasterF& src, RasterF& dst, std::span<const float> k)
{
    const int r = static_cast<int>(k.size() / 2);
    for (int y = 0; y < src.height; ++y) {
        const float* row = &src.data[static_cast<std::size_t>(y) * src.width];
        float* out = &dst.data[static_cast<std::size_t>(y) * dst.width];
        for (int x = 0; x < src.width; ++x) {
            float acc = 0.f;
            if (x >= r && x + r < src.width) {
                for (int i = -r; i <= r; ++i) acc += k[i + r] * row[x + i];
            } else {
                for (int i = -r; i <= r; ++i) acc += k[i + r] * row[std::clamp(x + i, 0, src.width - 1)];
            }
            out[x] = acc;
        }
    }
}

void correlate_cols(const RasterF& src, RasterF& dst, std::span<const float> k)
{
    const int r = static_cast<int>(k.size() / 2);
    const int w = src.width;
    std::vector<float> acc(w);
    for (int y = 0; y < src.height; ++y) {
        std::fill(acc.begin(), acc.end(), 0.f);
        for (int i = -r; i <= r; ++i) {
            const int yy = std::clamp(y + i, 0, src.height - 1);
            const float* row = &src.data[static_cast<std::size_t>(yy) * w];
            const float kv = k[i + r];
            for (int x = 0; x < w; ++x) acc[x] += kv * row[x];
        }
        std::copy(acc.begin(), acc.end(), dst.data.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
}

// out[x] = sum over taps i with (x - i) even of 2 k[i] src[(x - i) / 2], coarse index clamped.
void upsample_1d(const float* src, int n_src, float* dst, int n_dst, std::ptrdiff_t src_stride,
                 std::ptrdiff_t dst_stride)
{
    for (int x = 0; x < n_dst; ++x) {
        float acc = 0.f;
        for (int i = -2; i <= 2; ++i) {
            const int p = x - i;
            if (p % 2 != 0) continue;
            const int j = std::clamp(p / 2, 0, n_src - 1);
            acc += 2.f * kBinomial[i + 2] * src[j * src_stride];
        }
        dst[x * dst_stride] = acc;
    }
}

}  // namespace

RasterF to_float(const RasterU8& img)
{
    RasterF out(img.width, img.height);
    std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                   [](std::uint8_t v) { return static_cast<float>(v); });
    return out;
}

RasterF to_float(const Frame& frame) { return to_float(frame.image); }

RasterU8 to_u8(const RasterF& img)
{
    RasterU8 out(img.width, img.height);
    std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                   [](float v) { return saturate_u8(v); });
    return out;
}

std::vector<float> gaussian_kernel(double sigma)
{
    require(sigma > 0.0, "gaussian sigma must be positive");
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + r];
    }
    std::vector<float> out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / sum);
    return out;
}

RasterF convolve_separable(const RasterF& img, std::span<const float> kx, std::span<const float> ky)
{
    RasterF tmp(img.width, img.height);
    RasterF out(img.width, img.height);
    correlate_rows(img, tmp, kx);
    correlate_cols(tmp, out, ky);
    return out;
}

RasterF gaussian_blur(const RasterF& img, double sigma)
{
    const auto k = gaussian_kernel(sigma);
    return convolve_separable(img, k, k);
}

RasterF box_blur(const RasterF& img, int radius)
{
    if (radius <= 0) return img;
    std::vector<float> k(2 * radius + 1, 1.f / static_cast<float>(2 * radius + 1));
    return convolve_separable(img, k, k);
}

RasterF pyr_down(const RasterF& img)
{
    const RasterF blurred = convolve_separable(img, kBinomial, kBinomial);
    const int w = (img.width + 1) / 2;
    const int h = (img.height + 1) / 2;
    RasterF out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = blurred(2 * x, 2 * y);
    return out;
}

RasterF pyr_up(const RasterF& img, int w, int h)
{
    RasterF rows(w, img.height);
    for (int y = 0; y < img.height; ++y)
        upsample_1d(&img.data[static_cast<std::size_t>(y) * img.width], img.width,
                    &rows.data[static_cast<std::size_t>(y) * w], w, 1, 1);
    RasterF out(w, h);
    for (int x = 0; x < w; ++x) upsample_1d(&rows.data[x], img.height, &out.data[x], h, w, w);
    return out;
}

std::vector<RasterF> gaussian_pyramid(const RasterF& img, int levels)
{
    std::vector<RasterF> pyr;
    pyr.reserve(levels);
    pyr.push_back(img);
    for (int i = 1; i < levels; ++i) pyr.push_back(pyr_down(pyr.back()));
    return pyr;
}

}  // namespace lipidflow
