#include "doctest.h"
#include "helpers.hpp"

#include "lipidflow/align.hpp"
#include "lipidflow/imgproc.hpp"
#include "lipidflow/segment.hpp"
#include "lipidflow/synth.hpp"

#include <algorithm>
#include <cmath>

using namespace lipidflow;
using namespace testutil;

namespace {

SnakeContour horizontal(double x0, double x1, double y, int n)
{
    SnakeContour c;
    for (int i = 0; i < n; ++i) c.points.push_back({x0 + (x1 - x0) * i / (n - 1), y});
    return c;
}

double rms_to_row(const SnakeContour& c, double row)
{
    double s = 0;
    for (const auto& p : c.points) s += (p.y - row) * (p.y - row);
    return std::sqrt(s / c.points.size());
}

SynthConfig small_eye()
{
    SynthConfig c;
    c.width = 128;
    c.height = 128;
    c.pupil_cx = 64;
    c.pupil_cy = 52;
    c.pupil_r = 18;
    c.iris_r = 50;
    c.band_height = 14;
    c.jitter_amp = 0;
    c.blink_intervals.clear();
    c.duration_s = 0.2;
    return c;
}

double limbus_row(const SynthConfig& c, double x)
{
    const double d = x - c.pupil_cx;
    return c.pupil_cy + std::sqrt(std::max(0.0, c.iris_r * c.iris_r - d * d));
}

}  // namespace

TEST_SUITE("segment")
{
    TEST_CASE("gradient of a constant frame is zero")
    {
        for (float v : gradient_magnitude(frame_of(filled(40, 30, 120))).data) CHECK(v == 0.0f);
    }

    TEST_CASE("vertical step responds at the edge column only")
    {
        const auto g = gradient_magnitude(frame_of(generated(60, 20, [](int x, int) { return x < 30 ? 40 : 200; })));
        for (int y = 0; y < 20; ++y) {
            int best = 0;
            for (int x = 1; x < 60; ++x)
                if (g(x, y) > g(best, y)) best = x;
            CHECK((best == 29 || best == 30));
            CHECK(g(3, y) < 1e-3f);
            CHECK(g(56, y) < 1e-3f);
        }
    }

    TEST_CASE("linear ramp gradient equals its slope in the interior")
    {
        const double s = 1.7;
        const auto g = gradient_magnitude(to_float(generated(64, 64, [&](int x, int) { return 10 + s * x; })));
        // Rounding to 8 bits adds at most half a level of jitter per pixel; the blur averages it out.
        for (int y = 10; y < 54; ++y)
            for (int x = 10; x < 54; ++x) CHECK(std::abs(g(x, y) - s) < 0.05);
    }

    TEST_CASE("a snake placed on a straight edge stays put")
    {
        const auto img = generated(120, 80, [](int, int y) { return y < 40 ? 40 : 200; });
        const auto energy = gradient_magnitude(frame_of(img));
        SnakeParams p;
        p.gamma = 5.0;
        const auto init = horizontal(10, 110, 39.5, 30);
        const auto out = evolve_snake(init, energy, p);
        REQUIRE(out.points.size() == init.points.size());
        for (std::size_t i = 0; i < out.points.size(); ++i) CHECK(std::abs(out.points[i].y - 39.5) < p.tol);
    }

    TEST_CASE("a snake ten pixels above a boundary converges onto it")
    {
        const auto img = generated(160, 120, [](int, int y) { return y < 70 ? 60 : 180; });
        const auto energy = gradient_magnitude(frame_of(img));
        const auto out = evolve_snake(horizontal(5, 155, 59.5, 40), energy, SnakeParams{});
        CHECK(rms_to_row(out, 69.5) < 1.0);
    }

    TEST_CASE("without image energy the snake relaxes toward the chord")
    {
        SnakeContour init;
        const int n = 25;
        for (int i = 0; i < n; ++i) {
            const double x = 10 + 4.0 * i;
            init.points.push_back({x, 50 + 15 * std::sin(3.14159265358979 * i / (n - 1))});
        }
        SnakeParams p;
        p.gamma = 0;
        p.alpha = 1.0;
        p.iters = 5000;
        p.tol = 1e-5;
        p.capture_sigmas = {0};
        const RasterF flat(120, 100, 0.f);
        const auto out = evolve_snake(init, flat, p);
        // Endpoints are pinned in x only, so the relaxed curve is the chord between its own end heights.
        const auto& a = out.points.front();
        const auto& b = out.points.back();
        double worst = 0;
        for (const auto& q : out.points) {
            const double chord = a.y + (b.y - a.y) * (q.x - a.x) / (b.x - a.x);
            worst = std::max(worst, std::abs(q.y - chord));
        }
        CHECK(worst < 0.5);
        CHECK(out.points.front().x == init.points.front().x);
        CHECK(out.points.back().x == init.points.back().x);
        for (std::size_t i = 1; i < out.points.size(); ++i) CHECK(out.points[i].x > out.points[i - 1].x);
    }

    TEST_CASE("snake energy does not increase on a fixed potential")
    {
        const auto img = generated(160, 120, [](int x, int y) { return y < 60 + 10 * std::sin(x / 25.0) ? 50 : 190; });
        auto pot = gradient_magnitude(to_float(img), 6.0);
        const float peak = *std::max_element(pot.data.begin(), pot.data.end());
        for (float& v : pot.data) v = (v / peak) * (v / peak);
        SnakeParams p;
        p.iters = 300;
        p.tol = 1e-4;
        SnakeTrace trace;
        evolve_snake_fixed(horizontal(5, 155, 45, 50), pot, p, &trace);
        REQUIRE(trace.energies.size() >= 2);
        for (std::size_t i = 1; i < trace.energies.size(); ++i) CHECK(trace.energies[i] <= trace.energies[i - 1] + 1e-6);
        CHECK(trace.energies.back() < trace.energies.front());
    }

    TEST_CASE("degenerate snake parameters are rejected")
    {
        SnakeParams p;
        p.alpha = -1;
        const RasterF flat(50, 50, 0.f);
        CHECK(error_code_of([&] { evolve_snake(horizontal(5, 45, 20, 10), flat, p); }) != 0);
        SnakeContour two = horizontal(5, 45, 20, 2);
        CHECK(error_code_of([&] { evolve_snake(two, flat, SnakeParams{}); }) != 0);
    }

    TEST_CASE("iris mask follows the lower limbus of the synthetic eye")
    {
        SynthConfig cfg;
        cfg.jitter_amp = 0;
        const auto [video, manifest] = generate(cfg);
        const Frame& last = video.frames.back();
        const auto mask = build_iris_mask(last, locate_pupil(last));
        CHECK(mask.eyelash_y == static_cast<int>(std::lround(mask.pupil.cy - mask.pupil.r)));
        CHECK(mask.bottom.points.size() == static_cast<std::size_t>(kSnakePoints));
        double se = 0;
        for (const auto& q : mask.bottom.points) {
            CHECK(std::abs(q.y - limbus_row(cfg, q.x)) <= 2.0);
            se += std::pow(q.y - limbus_row(cfg, q.x), 2);
        }
        CHECK(std::sqrt(se / mask.bottom.points.size()) < 1.0);
        for (int x = static_cast<int>(mask.bottom.points.front().x) + 1; x < mask.bottom.points.back().x; x += 7) {
            int lowest = -1, highest = -1;
            for (int y = 0; y < mask.mask.height; ++y)
                if (mask.contains(x, y)) {
                    if (highest < 0) highest = y;
                    lowest = y;
                }
            if (lowest < 0) continue;
            CHECK(highest > mask.eyelash_y);
            CHECK(std::abs(lowest - limbus_row(cfg, x)) <= 2.5);
        }
    }

    TEST_CASE("every mask pixel satisfies the geometric predicates")
    {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            auto cfg = small_eye();
            cfg.seed = seed;
            cfg.pupil_cx = 60 + 3.0 * seed;
            const auto video = generate(cfg).first;
            const auto& f = video.frames.back();
            const auto m = build_iris_mask(f, locate_pupil(f));
            REQUIRE(m.mask.same_shape(f.image));
            CHECK(m.pupil_exclusion_r == doctest::Approx(kPupilExclusionFactor * m.pupil.r));
            int count = 0;
            for (int y = 0; y < m.mask.height; ++y)
                for (int x = 0; x < m.mask.width; ++x) {
                    if (!m.contains(x, y)) continue;
                    ++count;
                    CHECK(y > m.eyelash_y);
                    CHECK(std::hypot(x - m.pupil.cx, y - m.pupil.cy) > m.pupil_exclusion_r);
                    CHECK(y < m.bottom.height_at(x));
                }
            CHECK(count >= 0.01 * m.mask.size());
        }
    }

    TEST_CASE("a pupil at the bottom edge leaves no room for a mask")
    {
        const auto img = generated(128, 128, [](int x, int y) { return std::hypot(x - 64, y - 112) <= 16 ? 20 : 170; });
        const auto f = frame_of(img);
        CHECK(error_code_of([&] { build_iris_mask(f, PupilCircle{64, 112, 16}); }) == code(ErrorCode::MaskTooSmall));
    }

    TEST_CASE("contour height interpolates and is undefined outside")
    {
        SnakeContour c;
        c.points = {{0, 10}, {10, 20}, {20, 0}};
        CHECK(c.height_at(5) == doctest::Approx(15));
        CHECK(c.height_at(15) == doctest::Approx(10));
        CHECK(std::isnan(c.height_at(-1)));
        CHECK(std::isnan(c.height_at(21)));
    }
}
