#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace lipidflow {

/// Dense row-major 2-D array.
template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    /// Edge-replicated access.
    const T& clamped(int x, int y) const
    {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return (*this)(x, y);
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(int w, int h) const { return w == width && h == height; }
    template <typename U>
    bool same_shape(const Raster<U>& o) const { return o.width == width && o.height == height; }
};

using RasterF = Raster<float>;
using RasterD = Raster<double>;
using RasterU8 = Raster<std::uint8_t>;
using Mask = Raster<std::uint8_t>;

inline std::uint8_t saturate_u8(double v)
{
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

/// Bilinear sample with edge replication outside the raster.
template <typename T>
double bilinear(const Raster<T>& img, double x, double y)
{
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const double ax = x - fx;
    const double ay = y - fy;
    const double v00 = img.clamped(x0, y0);
    const double v10 = img.clamped(x0 + 1, y0);
    const double v01 = img.clamped(x0, y0 + 1);
    const double v11 = img.clamped(x0 + 1, y0 + 1);
    return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

}  // namespace lipidflow
