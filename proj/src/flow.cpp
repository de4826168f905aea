#include "lipidflow/flow.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lipidflow/error.hpp"
#include "lipidflow/imgproc.hpp"

namespace lipidflow {

namespace {

struct Gradients {
    RasterF gx;
    RasterF gy;
};

Gradients central_gradients(const RasterF& img)
{
    Gradients g{RasterF(img.width, img.height), RasterF(img.width, img.height)};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            g.gx(x, y) = 0.5f * (img.clamped(x + 1, y) - img.clamped(x - 1, y));
            g.gy(x, y) = 0.5f * (img.clamped(x, y + 1) - img.clamped(x, y - 1));
        }
    return g;
}

// Solves the 6x6 system in place (Gauss-Jordan with partial pivoting), returning the inverse.
std::array<std::array<double, 6>, 6> invert6(std::array<std::array<double, 6>, 6> m)
{
    std::array<std::array<double, 6>, 6> inv{};
    for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
    for (int c = 0; c < 6; ++c) {
        int piv = c;
        for (int r = c + 1; r < 6; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        if (std::abs(m[piv][c]) < 1e-15) fail(ErrorCode::Numerical, "singular polynomial-expansion basis");
        std::swap(m[c], m[piv]);
        std::swap(inv[c], inv[piv]);
        const double d = m[c][c];
        for (int j = 0; j < 6; ++j) {
            m[c][j] /= d;
            inv[c][j] /= d;
        }
        for (int r = 0; r < 6; ++r) {
            if (r == c) continue;
            const double f = m[r][c];
            if (f == 0.0) continue;
            for (int j = 0; j < 6; ++j) {
                m[r][j] -= f * m[c][j];
                inv[r][j] -= f * inv[c][j];
            }
        }
    }
    return inv;
}

std::array<RasterF, 6> expand_level(const RasterF& img, int radius, double sigma)
{
    const int w = img.width, h = img.height;
    std::vector<double> g(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) g[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));

    // Gram matrix of the basis [1 x y x^2 y^2 xy] under the applicability g(x)g(y).
    std::array<std::array<double, 6>, 6> gram{};
    for (int j = -radius; j <= radius; ++j)
        for (int i = -radius; i <= radius; ++i) {
            const double wgt = g[i + radius] * g[j + radius];
            const double b[6] = {1.0, double(i), double(j), double(i * i), double(j * j), double(i * j)};
            for (int p = 0; p < 6; ++p)
                for (int q = 0; q < 6; ++q) gram[p][q] += wgt * b[p] * b[q];
        }
    const auto ginv = invert6(gram);

    // Vertical pass: v0 = sum g f, v1 = sum g y f, v2 = sum g y^2 f.
    RasterF v0(w, h), v1(w, h), v2(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double a0 = 0, a1 = 0, a2 = 0;
            for (int j = -radius; j <= radius; ++j) {
                const double f = g[j + radius] * img.clamped(x, y + j);
                a0 += f;
                a1 += j * f;
                a2 += j * j * f;
            }
            v0(x, y) = static_cast<float>(a0);
            v1(x, y) = static_cast<float>(a1);
            v2(x, y) = static_cast<float>(a2);
        }

    std::array<RasterF, 6> r;
    for (auto& plane : r) plane = RasterF(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m[6] = {};  // moments of [1 x y x^2 y^2 xy]
            for (int i = -radius; i <= radius; ++i) {
                const double gi = g[i + radius];
                const int xx = std::clamp(x + i, 0, w - 1);
                const double a0 = v0(xx, y), a1 = v1(xx, y), a2 = v2(xx, y);
                m[0] += gi * a0;
                m[1] += gi * i * a0;
                m[2] += gi * a1;
                m[3] += gi * i * i * a0;
                m[4] += gi * a2;
                m[5] += gi * i * a1;
            }
            for (int p = 0; p < 6; ++p) {
                double acc = 0;
                for (int q = 0; q < 6; ++q) acc += ginv[p][q] * m[q];
                r[p](x, y) = static_cast<float>(acc);
            }
        }
    return r;
}

void farneback_level(const std::array<RasterF, 6>& r1, const std::array<RasterF, 6>& r2, RasterF& u, RasterF& v,
                     const FarnebackParams& params)
{
    const int w = u.width, h = u.height;
    const int blur_radius = params.blur / 2;
    std::array<RasterF, 5> mats;  // G11 G12 G22 h1 h2
    for (int it = 0; it < params.iters; ++it) {
        for (auto& m : mats) m = RasterF(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double dx = u(x, y), dy = v(x, y);
                const double sx = std::clamp(x + dx, 0.0, w - 1.0);
                const double sy = std::clamp(y + dy, 0.0, h - 1.0);
                const double b2x = bilinear(r2[1], sx, sy), b2y = bilinear(r2[2], sx, sy);
                const double a2xx = bilinear(r2[3], sx, sy), a2yy = bilinear(r2[4], sx, sy);
                const double a2xy = 0.5 * bilinear(r2[5], sx, sy);
                const double axx = 0.5 * (r1[3](x, y) + a2xx);
                const double ayy = 0.5 * (r1[4](x, y) + a2yy);
                const double axy = 0.5 * (0.5 * r1[5](x, y) + a2xy);
                const double dbx = -0.5 * (b2x - r1[1](x, y)) + axx * dx + axy * dy;
                const double dby = -0.5 * (b2y - r1[2](x, y)) + axy * dx + ayy * dy;
                mats[0](x, y) = static_cast<float>(axx * axx + axy * axy);
                mats[1](x, y) = static_cast<float>(axy * (axx + ayy));
                mats[2](x, y) = static_cast<float>(axy * axy + ayy * ayy);
                mats[3](x, y) = static_cast<float>(axx * dbx + axy * dby);
                mats[4](x, y) = static_cast<float>(axy * dbx + ayy * dby);
            }
        for (auto& m : mats) m = box_blur(m, blur_radius);
        for (std::size_t p = 0; p < u.size(); ++p) {
            const double g11 = mats[0].data[p], g12 = mats[1].data[p], g22 = mats[2].data[p];
            const double det = g11 * g22 - g12 * g12;
            if (!(det >= 1e-9)) continue;  // keep the prior estimate
            const double h1 = mats[3].data[p], h2 = mats[4].data[p];
            u.data[p] = static_cast<float>((g22 * h1 - g12 * h2) / det);
            v.data[p] = static_cast<float>((g11 * h2 - g12 * h1) / det);
        }
    }
}

}  // namespace

std::string_view to_string(TrackStatus s)
{
    switch (s) {
    case TrackStatus::Ok: return "ok";
    case TrackStatus::LostOutOfBounds: return "out-of-bounds";
    case TrackStatus::LostLowTexture: return "low-texture";
    case TrackStatus::LostDiverged: return "diverged";
    case TrackStatus::LostFbCheckFailed: return "fb-check-failed";
    }
    return "?";
}

void validate(const LKParams& p)
{
    require(p.window >= 5 && p.window % 2 == 1, "LK window must be odd and at least 5");
    require(p.levels >= 1, "LK needs at least one pyramid level");
    require(p.iters >= 1, "LK needs at least one iteration");
    require(p.eps > 0 && p.min_eig >= 0, "LK eps must be positive and min_eig non-negative");
}

void validate(const FarnebackParams& p)
{
    require(p.poly_n >= 5 && p.poly_n % 2 == 1, "Farneback poly_n must be odd and at least 5");
    require(p.levels >= 1, "Farneback needs at least one pyramid level");
    require(p.iters >= 1, "Farneback needs at least one iteration");
    require(p.poly_sigma > 0, "Farneback poly_sigma must be positive");
    require(p.blur >= 1, "Farneback blur window must be at least 1");
    require(p.scale == 0.5, "Farneback pyramid scale is fixed at 0.5");
}

LKResult lk_step(const RasterF& from, const RasterF& to, const std::vector<Point2>& points, const LKParams& params)
{
    validate(params);
    require(from.same_shape(to), "LK frames differ in size", ErrorCode::DimensionMismatch);
    const auto pyr_from = gaussian_pyramid(from, params.levels);
    const auto pyr_to = gaussian_pyramid(to, params.levels);
    std::vector<Gradients> grads;
    grads.reserve(pyr_from.size());
    for (const auto& lvl : pyr_from) grads.push_back(central_gradients(lvl));

    const int half = params.window / 2;
    const double area = static_cast<double>(params.window) * params.window;
    const std::size_t nwin = static_cast<std::size_t>(params.window) * params.window;
    std::vector<float> ix(nwin), iy(nwin), iv(nwin);
    std::vector<char> inside(nwin);

    LKResult out;
    out.points.reserve(points.size());
    out.status.reserve(points.size());
    for (const Point2& pt : points) {
        double gxp = 0.0, gyp = 0.0;  // guess at the current level
        TrackStatus status = TrackStatus::Ok;
        bool converged_fine = true;
        for (int level = params.levels - 1; level >= 0; --level) {
            const double s = std::ldexp(1.0, -level);
            const double px = pt.x * s, py = pt.y * s;
            const RasterF& I = pyr_from[level];
            const RasterF& J = pyr_to[level];
            double g11 = 0, g12 = 0, g22 = 0;
            std::size_t k = 0;
            const double wmax = I.width - 1, hmax = I.height - 1;
            for (int j = -half; j <= half; ++j)
                for (int i = -half; i <= half; ++i, ++k) {
                    inside[k] = px + i >= 0 && py + j >= 0 && px + i <= wmax && py + j <= hmax;
                    if (!inside[k]) continue;
                    ix[k] = static_cast<float>(bilinear(grads[level].gx, px + i, py + j));
                    iy[k] = static_cast<float>(bilinear(grads[level].gy, px + i, py + j));
                    iv[k] = static_cast<float>(bilinear(I, px + i, py + j));
                    g11 += double(ix[k]) * ix[k];
                    g12 += double(ix[k]) * iy[k];
                    g22 += double(iy[k]) * iy[k];
                }
            const double det = g11 * g22 - g12 * g12;
            const double tr = g11 + g22;
            const double min_eig = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
            const bool textured = min_eig / (area * 255.0 * 255.0) >= params.min_eig && det > 0;
            if (level == 0 && !textured) {
                status = TrackStatus::LostLowTexture;
                break;
            }
            double dx = 0, dy = 0;
            bool converged = !textured;
            if (textured) {
                for (int it = 0; it < params.iters; ++it) {
                    double b1 = 0, b2 = 0;
                    k = 0;
                    for (int j = -half; j <= half; ++j)
                        for (int i = -half; i <= half; ++i, ++k) {
                            if (!inside[k]) continue;
                            const double e = iv[k] - bilinear(J, px + gxp + dx + i, py + gyp + dy + j);
                            b1 += e * ix[k];
                            b2 += e * iy[k];
                        }
                    const double sx = (g22 * b1 - g12 * b2) / det;
                    const double sy = (g11 * b2 - g12 * b1) / det;
                    dx += sx;
                    dy += sy;
                    if (std::hypot(sx, sy) < params.eps) {
                        converged = true;
                        break;
                    }
                }
            }
            if (level > 0) {
                gxp = 2.0 * (gxp + dx);
                gyp = 2.0 * (gyp + dy);
            } else {
                gxp += dx;
                gyp += dy;
                converged_fine = converged;
            }
        }
        Point2 np{pt.x + gxp, pt.y + gyp};
        if (status == TrackStatus::Ok) {
            if (!std::isfinite(np.x) || !std::isfinite(np.y))
                status = TrackStatus::LostDiverged;
            else if (np.x < 0 || np.y < 0 || np.x > from.width - 1 || np.y > from.height - 1)
                status = TrackStatus::LostOutOfBounds;
            else if (!converged_fine && std::hypot(gxp, gyp) > params.window)
                status = TrackStatus::LostDiverged;
        }
        if (status != TrackStatus::Ok) np = pt;
        out.points.push_back(np);
        out.status.push_back(status);
    }
    return out;
}

LKResult lk_step(const Frame& from, const Frame& to, const std::vector<FeaturePoint>& points, const LKParams& params)
{
    require(from.image.same_shape(to.image), "LK frames differ in size", ErrorCode::DimensionMismatch);
    std::vector<Point2> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.push_back({p.x, p.y});
    return lk_step(to_float(from), to_float(to), pts, params);
}

PolyExpansion poly_expand(const RasterF& image, const FarnebackParams& params)
{
    validate(params);
    const int min_side = (1 << params.levels) * params.poly_n;
    if (image.width < min_side || image.height < min_side)
        fail(ErrorCode::InvalidArgument, "frame too small for Farneback with " + std::to_string(params.levels) +
                                             " levels (needs " + std::to_string(min_side) + " px per side)");
    RasterF norm = image;
    for (float& v : norm.data) v /= 255.f;
    const auto pyr = gaussian_pyramid(norm, params.levels);
    PolyExpansion out;
    out.width = image.width;
    out.height = image.height;
    for (const auto& lvl : pyr) out.levels.push_back(expand_level(lvl, params.poly_n / 2, params.poly_sigma));
    return out;
}

FlowField farneback(const PolyExpansion& from, const PolyExpansion& to, const FarnebackParams& params)
{
    validate(params);
    require(from.width == to.width && from.height == to.height && from.levels.size() == to.levels.size(),
            "Farneback frames differ in size", ErrorCode::DimensionMismatch);
    const int levels = static_cast<int>(from.levels.size());
    RasterF u, v;
    for (int level = levels - 1; level >= 0; --level) {
        const int w = from.levels[level][0].width, h = from.levels[level][0].height;
        if (u.empty()) {
            u = RasterF(w, h);
            v = RasterF(w, h);
        } else {
            u = pyr_up(u, w, h);
            v = pyr_up(v, w, h);
            for (float& x : u.data) x *= 2.f;
            for (float& x : v.data) x *= 2.f;
        }
        farneback_level(from.levels[level], to.levels[level], u, v, params);
    }
    return {std::move(u), std::move(v)};
}

FlowField farneback(const RasterF& from, const RasterF& to, const FarnebackParams& params)
{
    require(from.same_shape(to), "Farneback frames differ in size", ErrorCode::DimensionMismatch);
    return farneback(poly_expand(from, params), poly_expand(to, params), params);
}

FlowField farneback(const Frame& from, const Frame& to, const FarnebackParams& params)
{
    return farneback(to_float(from), to_float(to), params);
}

std::pair<double, double> sample_flow(const FlowField& field, double x, double y)
{
    if (!(x >= 0 && y >= 0 && x <= field.width() - 1 && y <= field.height() - 1))
        fail(ErrorCode::OutOfBounds, "flow sample outside the field");
    return {bilinear(field.u, x, y), bilinear(field.v, x, y)};
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) { return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24); }

}  // namespace

void save_flow_binary(const FlowField& field, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write("FLO1", 4);
    put_u32(out, static_cast<std::uint32_t>(field.width()));
    put_u32(out, static_cast<std::uint32_t>(field.height()));
    put_u32(out, 2);
    for (const RasterF* plane : {&field.u, &field.v})
        for (float f : plane->data) put_u32(out, std::bit_cast<std::uint32_t>(f));
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

FlowField load_flow_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    unsigned char hdr[16];
    if (!in.read(reinterpret_cast<char*>(hdr), 16) || std::memcmp(hdr, "FLO1", 4) != 0)
        fail(ErrorCode::Parse, path.string() + ": bad flow header at byte offset 0");
    const int w = static_cast<int>(get_u32(hdr + 4)), h = static_cast<int>(get_u32(hdr + 8));
    if (get_u32(hdr + 12) != 2) fail(ErrorCode::Parse, path.string() + ": expected 2 planes at byte offset 12");
    FlowField f{RasterF(w, h), RasterF(w, h)};
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 4);
    for (RasterF* plane : {&f.u, &f.v}) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            fail(ErrorCode::Truncated, path.string() + ": truncated flow payload");
        for (std::size_t i = 0; i < plane->size(); ++i) plane->data[i] = std::bit_cast<float>(get_u32(&buf[4 * i]));
    }
    return f;
}

std::string flow_to_csv(const FlowField& field)
{
    std::ostringstream os;
    os.precision(6);
    os << "x,y,u,v\n";
    for (int y = 0; y < field.height(); ++y)
        for (int x = 0; x < field.width(); ++x) os << x << ',' << y << ',' << field.u(x, y) << ',' << field.v(x, y) << '\n';
    return os.str();
}

}  // namespace lipidflow
