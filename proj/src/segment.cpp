#include "lipidflow/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lipidflow/error.hpp"
#include "lipidflow/imgproc.hpp"

namespace lipidflow {

namespace {

/// LU of a matrix with bandwidth 2, no pivoting (the snake systems are diagonally dominant).
class BandedLU {
public:
    explicit BandedLU(std::vector<std::vector<double>> a) : n_(static_cast<int>(a.size())), a_(std::move(a))
    {
        for (int k = 0; k < n_; ++k) {
            const double piv = a_[k][k];
            if (std::abs(piv) < 1e-12) fail(ErrorCode::Numerical, "singular snake system");
            for (int i = k + 1; i <= std::min(k + 2, n_ - 1); ++i) {
                const double f = a_[i][k] / piv;
                a_[i][k] = f;
                for (int j = k + 1; j <= std::min(k + 2, n_ - 1); ++j) a_[i][j] -= f * a_[k][j];
            }
        }
    }

    std::vector<double> solve(std::vector<double> b) const
    {
        for (int i = 0; i < n_; ++i)
            for (int k = std::max(0, i - 2); k < i; ++k) b[i] -= a_[i][k] * b[k];
        for (int i = n_ - 1; i >= 0; --i) {
            for (int j = i + 1; j <= std::min(i + 2, n_ - 1); ++j) b[i] -= a_[i][j] * b[j];
            b[i] /= a_[i][i];
        }
        return b;
    }

private:
    int n_;
    std::vector<std::vector<double>> a_;
};

/// Dense band of 2 (a L1'L1 + b L2'L2), the Hessian of the internal energy.
std::vector<std::vector<double>> internal_matrix(int n, double alpha, double beta)
{
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i + 1 < n; ++i) {
        const int idx[2] = {i, i + 1};
        const double c[2] = {-1.0, 1.0};
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) a[idx[p]][idx[q]] += 2.0 * alpha * c[p] * c[q];
    }
    for (int i = 0; i + 2 < n; ++i) {
        const int idx[3] = {i, i + 1, i + 2};
        const double c[3] = {1.0, -2.0, 1.0};
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) a[idx[p]][idx[q]] += 2.0 * beta * c[p] * c[q];
    }
    return a;
}

struct Systems {
    BandedLU x;  // endpoints pinned
    BandedLU y;
};

Systems make_systems(int n, const SnakeParams& p, double step)
{
    auto a = internal_matrix(n, p.alpha, p.beta);
    for (int i = 0; i < n; ++i) {
        for (double& v : a[i]) v *= step;
        a[i][i] += 1.0;
    }
    auto ax = a;
    for (int r : {0, n - 1}) {
        std::fill(ax[r].begin(), ax[r].end(), 0.0);
        ax[r][r] = 1.0;
    }
    return {BandedLU(std::move(ax)), BandedLU(std::move(a))};
}

void central_gradient(const RasterF& img, RasterF& gx, RasterF& gy)
{
    const int w = img.width, h = img.height;
    gx = RasterF(w, h);
    gy = RasterF(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (w > 1) {
                if (x == 0) gx(x, y) = img(1, y) - img(0, y);
                else if (x == w - 1) gx(x, y) = img(w - 1, y) - img(w - 2, y);
                else gx(x, y) = 0.5f * (img(x + 1, y) - img(x - 1, y));
            }
            if (h > 1) {
                if (y == 0) gy(x, y) = img(x, 1) - img(x, 0);
                else if (y == h - 1) gy(x, y) = img(x, h - 1) - img(x, h - 2);
                else gy(x, y) = 0.5f * (img(x, y + 1) - img(x, y - 1));
            }
        }
}

void validate(const SnakeContour& c, const SnakeParams& p)
{
    require(c.points.size() >= 3, "snake needs at least 3 points");
    for (std::size_t i = 1; i < c.points.size(); ++i)
        require(c.points[i].x > c.points[i - 1].x, "snake x coordinates must be strictly increasing");
    require(p.alpha >= 0 && p.beta >= 0 && p.gamma >= 0, "snake weights must be non-negative");
    require(p.iters >= 1, "snake needs at least one iteration");
    require(p.step > 0, "snake step must be positive");
}

void enforce_increasing_x(SnakeContour& c)
{
    std::stable_sort(c.points.begin(), c.points.end(), [](const Point2& a, const Point2& b) { return a.x < b.x; });
    for (std::size_t i = 1; i < c.points.size(); ++i)
        if (c.points[i].x <= c.points[i - 1].x)
            c.points[i].x = std::nextafter(c.points[i - 1].x, std::numeric_limits<double>::infinity());
}

}  // namespace

double SnakeContour::height_at(double x) const
{
    if (points.empty() || x < points.front().x || x > points.back().x) return std::numeric_limits<double>::quiet_NaN();
    auto it = std::lower_bound(points.begin(), points.end(), x, [](const Point2& p, double v) { return p.x < v; });
    if (it == points.begin()) return it->y;
    const Point2& b = *it;
    const Point2& a = *(it - 1);
    const double t = (x - a.x) / (b.x - a.x);
    return a.y + t * (b.y - a.y);
}

std::pair<double, double> IrisMask::y_extent(double x) const
{
    return {static_cast<double>(eyelash_y), bottom.height_at(x)};
}

RasterF gradient_magnitude(const RasterF& image, double blur_sigma)
{
    const RasterF b = blur_sigma > 0 ? gaussian_blur(image, blur_sigma) : image;
    RasterF gx, gy;
    central_gradient(b, gx, gy);
    RasterF out(b.width, b.height);
    for (std::size_t p = 0; p < out.size(); ++p) out.data[p] = std::hypot(gx.data[p], gy.data[p]);
    return out;
}

RasterF gradient_magnitude(const Frame& frame) { return gradient_magnitude(to_float(frame), kEdgeSigma); }

RasterF outward_edge_strength(const Frame& frame, const PupilCircle& pupil, double blur_sigma)
{
    const RasterF img = to_float(frame);
    const RasterF b = blur_sigma > 0 ? gaussian_blur(img, blur_sigma) : img;
    RasterF gx, gy;
    central_gradient(b, gx, gy);
    RasterF out(b.width, b.height);
    for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x) {
            const double dx = x - pupil.cx, dy = y - pupil.cy;
            const double r = std::hypot(dx, dy);
            if (r < 1e-9) continue;
            out(x, y) = static_cast<float>(std::max(0.0, (gx(x, y) * dx + gy(x, y) * dy) / r));
        }
    return out;
}

double snake_energy(const SnakeContour& c, const RasterF& potential, const SnakeParams& params)
{
    const auto& v = c.points;
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double dx = v[i + 1].x - v[i].x, dy = v[i + 1].y - v[i].y;
        e += params.alpha * (dx * dx + dy * dy);
    }
    for (std::size_t i = 0; i + 2 < v.size(); ++i) {
        const double dx = v[i].x - 2 * v[i + 1].x + v[i + 2].x;
        const double dy = v[i].y - 2 * v[i + 1].y + v[i + 2].y;
        e += params.beta * (dx * dx + dy * dy);
    }
    for (const Point2& p : v) e -= params.gamma * bilinear(potential, p.x, p.y);
    return e;
}

SnakeContour evolve_snake_fixed(const SnakeContour& init, const RasterF& potential, const SnakeParams& params,
                                SnakeTrace* trace)
{
    validate(init, params);
    const int n = static_cast<int>(init.points.size());
    RasterF gx, gy;
    central_gradient(potential, gx, gy);

    constexpr int kMaxHalvings = 12;
    std::vector<Systems> systems;  // systems[h] uses step / 2^h, built on demand
    auto system_for = [&](int h) -> const Systems& {
        while (static_cast<int>(systems.size()) <= h) systems.push_back(make_systems(n, params, params.step / std::ldexp(1.0, static_cast<int>(systems.size()))));
        return systems[h];
    };

    SnakeContour cur = init;
    double energy = snake_energy(cur, potential, params);
    if (trace) {
        trace->energies.assign(1, energy);
        trace->iterations = 0;
    }

    for (int it = 0; it < params.iters; ++it) {
        std::vector<double> fx(n), fy(n);
        for (int i = 0; i < n; ++i) {
            fx[i] = params.gamma * bilinear(gx, cur.points[i].x, cur.points[i].y);
            fy[i] = params.gamma * bilinear(gy, cur.points[i].x, cur.points[i].y);
        }
        bool accepted = false;
        double moved = 0.0;
        for (int h = 0; h <= kMaxHalvings && !accepted; ++h) {
            const double step = params.step / std::ldexp(1.0, h);
            const Systems& sys = system_for(h);
            std::vector<double> bx(n), by(n);
            for (int i = 0; i < n; ++i) {
                bx[i] = cur.points[i].x + step * fx[i];
                by[i] = cur.points[i].y + step * fy[i];
            }
            bx.front() = cur.points.front().x;
            bx.back() = cur.points.back().x;
            const auto nx = sys.x.solve(std::move(bx));
            const auto ny = sys.y.solve(std::move(by));

            SnakeContour cand;
            cand.points.resize(n);
            moved = 0.0;
            for (int i = 0; i < n; ++i) {
                cand.points[i] = {std::clamp(nx[i], 0.0, potential.width - 1.0),
                                  std::clamp(ny[i], 0.0, potential.height - 1.0)};
                moved = std::max(moved, std::hypot(cand.points[i].x - cur.points[i].x, cand.points[i].y - cur.points[i].y));
            }
            const double e = snake_energy(cand, potential, params);
            if (e <= energy + 1e-12 * std::max(1.0, std::abs(energy))) {
                accepted = true;
                cur = std::move(cand);
                energy = e;
            }
        }
        if (!accepted) break;
        if (trace) {
            trace->energies.push_back(energy);
            trace->iterations = it + 1;
        }
        if (moved < params.tol) break;
    }
    enforce_increasing_x(cur);
    return cur;
}

SnakeContour evolve_snake(const SnakeContour& init, const RasterF& energy, const SnakeParams& params)
{
    validate(init, params);
    float peak = 0.f;
    for (float v : energy.data) peak = std::max(peak, v);
    RasterF base(energy.width, energy.height);
    if (peak > 0.f)
        for (std::size_t p = 0; p < base.size(); ++p) {
            const float nrm = energy.data[p] / peak;
            base.data[p] = nrm * nrm;
        }

    SnakeContour cur = init;
    const std::vector<double> sigmas = params.capture_sigmas.empty() ? std::vector<double>{0.0} : params.capture_sigmas;
    for (double sigma : sigmas) {
        RasterF pot = sigma > 0 ? gaussian_blur(base, sigma) : base;
        float pmax = 0.f;
        for (float v : pot.data) pmax = std::max(pmax, v);
        if (pmax > 0.f)
            for (float& v : pot.data) v /= pmax;
        cur = evolve_snake_fixed(cur, pot, params);
    }
    return cur;
}

IrisMask build_iris_mask(const Frame& frame, const PupilCircle& pupil, const SnakeParams& params)
{
    const int w = frame.width(), h = frame.height();
    require(pupil.r > 0 && pupil.cx >= 0 && pupil.cy >= 0 && pupil.cx < w && pupil.cy < h,
            "pupil circle outside the frame");

    IrisMask out;
    out.pupil = pupil;
    out.eyelash_y = static_cast<int>(std::lround(pupil.cy - pupil.r));
    out.pupil_exclusion_r = kPupilExclusionFactor * pupil.r;

    const double r0 = kSnakeInitRadiusFactor * pupil.r;
    const double x0 = std::max(0.0, pupil.cx - r0);
    const double x1 = std::min(w - 1.0, pupil.cx + r0);
    require(x1 > x0, "degenerate snake initialization", ErrorCode::MaskTooSmall);
    SnakeContour init;
    init.points.reserve(kSnakePoints);
    for (int i = 0; i < kSnakePoints; ++i) {
        const double x = x0 + (x1 - x0) * i / (kSnakePoints - 1);
        const double dx = x - pupil.cx;
        const double y = pupil.cy + std::sqrt(std::max(0.0, r0 * r0 - dx * dx));
        init.points.push_back({x, std::clamp(y, 0.0, h - 1.0)});
    }
    // Coarse-to-fine: each stage measures edges on a smoother image so texture cancels out before the
    // boundary is approached.
    SnakeContour cur = init;
    const std::vector<double> sigmas = params.capture_sigmas.empty() ? std::vector<double>{0.0} : params.capture_sigmas;
    for (double sigma : sigmas) {
        RasterF pot = outward_edge_strength(frame, pupil, std::max(kEdgeSigma, sigma));
        float peak = 0.f;
        for (float v : pot.data) peak = std::max(peak, v);
        if (peak > 0.f)
            for (float& v : pot.data) v = (v / peak) * (v / peak);
        cur = evolve_snake_fixed(cur, pot, params);
    }
    out.bottom = cur;

    out.mask = Mask(w, h);
    std::size_t area = 0, below_pupil = 0;
    const double r2 = out.pupil_exclusion_r * out.pupil_exclusion_r;
    for (int x = 0; x < w; ++x) {
        const double bottom = out.bottom.height_at(x);
        if (std::isnan(bottom)) continue;
        for (int y = out.eyelash_y + 1; y < h && y < bottom; ++y) {
            if (y < 0) continue;
            const double dx = x - pupil.cx, dy = y - pupil.cy;
            if (dx * dx + dy * dy <= r2) continue;
            out.mask(x, y) = 255;
            ++area;
            if (y > pupil.cy + out.pupil_exclusion_r) ++below_pupil;
        }
    }
    const double min_area = 0.01 * w * h;
    if (area < min_area)
        fail(ErrorCode::MaskTooSmall, "iris mask covers only " + std::to_string(area) + " px");
    if (below_pupil < min_area)
        fail(ErrorCode::MaskTooSmall, "no visible iris below the pupil (" + std::to_string(below_pupil) + " px)");
    return out;
}

}  // namespace lipidflow
