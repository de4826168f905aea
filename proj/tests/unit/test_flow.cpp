#include "doctest.h"
#include "helpers.hpp"

#include "lipidflow/flow.hpp"
#include "lipidflow/imgproc.hpp"
#include "lipidflow/synth.hpp"

#include <cmath>
#include <fstream>

using namespace lipidflow;
using namespace testutil;

namespace {

constexpr int kSize = 128;
constexpr int kMargin = 24;  // beyond the LK window and the Farneback smoothing support

std::vector<Point2> interior_grid(int step = 4)
{
    std::vector<Point2> pts;
    for (int y = kMargin; y < kSize - kMargin; y += step)
        for (int x = kMargin; x < kSize - kMargin; x += step) pts.push_back({double(x), double(y)});
    return pts;
}

RasterF texture(double sx, double sy, std::uint64_t seed) { return to_float(render_texture(kSize, kSize, sx, sy, seed)); }

double lk_epe(double sx, double sy, std::uint64_t seed)
{
    const auto pts = interior_grid();
    const auto r = lk_step(texture(0, 0, seed), texture(sx, sy, seed), pts, LKParams{});
    double e = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        e += std::hypot(r.points[i].x - pts[i].x - sx, r.points[i].y - pts[i].y - sy);
    return e / pts.size();
}

double fb_epe(double sx, double sy, std::uint64_t seed)
{
    const auto f = farneback(texture(0, 0, seed), texture(sx, sy, seed), FarnebackParams{});
    const auto pts = interior_grid(2);
    double e = 0;
    for (const auto& p : pts) {
        const auto [u, v] = sample_flow(f, p.x, p.y);
        e += std::hypot(u - sx, v - sy);
    }
    return e / pts.size();
}

FlowField field_from(int w, int h, float u, float v) { return {RasterF(w, h, u), RasterF(w, h, v)}; }

}  // namespace

TEST_SUITE("flow")
{
    TEST_CASE("lk leaves points in place between identical frames")
    {
        const auto img = texture(0, 0, 2);
        const auto pts = interior_grid(8);
        const auto r = lk_step(img, img, pts, LKParams{});
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(r.status[i] == TrackStatus::Ok);
            CHECK(std::abs(r.points[i].x - pts[i].x) < 1e-6);
            CHECK(std::abs(r.points[i].y - pts[i].y) < 1e-6);
        }
    }

    TEST_CASE("lk recovers a three pixel shift")
    {
        const auto pts = interior_grid(6);
        const auto r = lk_step(texture(0, 0, 3), texture(3, 0, 3), pts, LKParams{});
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(r.status[i] == TrackStatus::Ok);
            CHECK(std::abs(r.points[i].x - pts[i].x - 3.0) < 0.05);
            CHECK(std::abs(r.points[i].y - pts[i].y) < 0.05);
        }
    }

    TEST_CASE("lk in a flat patch loses texture")
    {
        auto img = render_texture(kSize, kSize, 0, 0, 5);
        for (int y = 30; y < 90; ++y)
            for (int x = 30; x < 90; ++x) img(x, y) = 128;
        const auto f = to_float(img);
        const auto r = lk_step(f, f, {{60.0, 60.0}, {10.0, 110.0}}, LKParams{});
        CHECK(r.status[0] == TrackStatus::LostLowTexture);
        CHECK(r.status[1] == TrackStatus::Ok);
        CHECK(r.points[0].x == 60.0);
    }

    TEST_CASE("lk marks points pushed out of the frame")
    {
        const auto r = lk_step(texture(0, 0, 6), texture(-6, 0, 6), {{3.0, 64.0}}, LKParams{});
        CHECK(r.status[0] == TrackStatus::LostOutOfBounds);
    }

    TEST_CASE("farneback between identical frames is near zero")
    {
        const auto img = texture(0, 0, 7);
        const auto f = farneback(img, img, FarnebackParams{});
        for (std::size_t i = 0; i < f.u.size(); ++i) {
            CHECK(std::abs(f.u.data[i]) < 0.05);
            CHECK(std::abs(f.v.data[i]) < 0.05);
        }
    }

    TEST_CASE("farneback recovers an upward shift of four pixels")
    {
        const auto f = farneback(texture(0, 0, 8), texture(0, -4, 8), FarnebackParams{});
        double mu = 0, mv = 0;
        const auto pts = interior_grid(1);
        for (const auto& p : pts) {
            const auto [u, v] = sample_flow(f, p.x, p.y);
            mu += u;
            mv += v;
        }
        CHECK(std::abs(mu / pts.size()) < 0.3);
        CHECK(std::abs(mv / pts.size() + 4.0) < 0.3);
    }

    TEST_CASE("farneback on constant frames stays at zero")
    {
        const RasterF flat(64, 64, 90.f);
        const auto f = farneback(flat, flat, FarnebackParams{});
        for (std::size_t i = 0; i < f.u.size(); ++i) {
            CHECK(std::isfinite(f.u.data[i]));
            CHECK(std::abs(f.u.data[i]) < 1e-6);
            CHECK(std::abs(f.v.data[i]) < 1e-6);
        }
    }

    TEST_CASE("integer shifts up to eight pixels meet the endpoint error budget")
    {
        for (std::uint64_t seed : {5u, 11u}) {
            for (double s : {1.0, 2.0, 4.0, 8.0})
                for (int dir = 0; dir < 4; ++dir) {
                    const double sx = dir == 0 ? s : dir == 1 ? -s : 0;
                    const double sy = dir == 2 ? s : dir == 3 ? -s : 0;
                    CAPTURE(seed);
                    CAPTURE(sx);
                    CAPTURE(sy);
                    CHECK(lk_epe(sx, sy, seed) < 0.1);
                    CHECK(fb_epe(sx, sy, seed) < 0.3);
                }
            CHECK(lk_epe(5, -3, seed) < 0.1);
            CHECK(fb_epe(5, -3, seed) < 0.3);
        }
    }

    TEST_CASE("half pixel shifts meet the subpixel budget")
    {
        for (std::uint64_t seed : {5u, 11u})
            for (auto [sx, sy] : {std::pair{0.5, 0.0}, std::pair{0.0, 0.5}, std::pair{-0.5, 0.5}}) {
                CHECK(lk_epe(sx, sy, seed) < 0.25);
                CHECK(fb_epe(sx, sy, seed) < 0.25);
            }
    }

    TEST_CASE("forward and backward farneback fields cancel")
    {
        const auto a = texture(0, 0, 13), b = texture(2, -3, 13);
        const auto fwd = farneback(a, b, FarnebackParams{}), bwd = farneback(b, a, FarnebackParams{});
        double e = 0;
        const auto pts = interior_grid(2);
        for (const auto& p : pts) {
            const auto [u1, v1] = sample_flow(fwd, p.x, p.y);
            const auto [u2, v2] = sample_flow(bwd, p.x, p.y);
            e += std::hypot(u1 + u2, v1 + v2);
        }
        CHECK(e / pts.size() < 0.3);
    }

    TEST_CASE("polynomial expansion reuse gives the same field")
    {
        const FarnebackParams p;
        const auto a = texture(0, 0, 2), b = texture(1, 1, 2);
        const auto direct = farneback(a, b, p);
        const auto reused = farneback(poly_expand(a, p), poly_expand(b, p), p);
        CHECK(direct.u.data == reused.u.data);
        CHECK(direct.v.data == reused.v.data);
    }

    TEST_CASE("flow sampling is bilinear")
    {
        const auto c = field_from(8, 6, 2.f, -1.f);
        const auto [cu, cv] = sample_flow(c, 3.3, 4.9);
        CHECK(cu == doctest::Approx(2.0));
        CHECK(cv == doctest::Approx(-1.0));

        FlowField ramp = field_from(11, 3, 0.f, 0.f);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 11; ++x) {
                ramp.u(x, y) = static_cast<float>(x);
                ramp.v(x, y) = static_cast<float>(10 * y + x);
            }
        CHECK(sample_flow(ramp, 5.0, 1.0).first == doctest::Approx(5.0));
        CHECK(sample_flow(ramp, 4.0, 2.0).second == doctest::Approx(24.0));

        FlowField tiny = field_from(2, 2, 0.f, 0.f);
        tiny.u.data = {1.f, 3.f, 7.f, -2.f};
        tiny.v.data = {0.5f, 0.f, 2.f, 4.f};
        for (double x : {0.0, 0.25, 0.6, 1.0})
            for (double y : {0.0, 0.3, 0.75, 1.0}) {
                const double eu = (1 - x) * (1 - y) * 1 + x * (1 - y) * 3 + (1 - x) * y * 7 + x * y * -2;
                const double ev = (1 - x) * (1 - y) * 0.5 + (1 - x) * y * 2 + x * y * 4;
                const auto [u, v] = sample_flow(tiny, x, y);
                CHECK(u == doctest::Approx(eu).epsilon(1e-12));
                CHECK(v == doctest::Approx(ev).epsilon(1e-12));
            }
        CHECK(error_code_of([&] { sample_flow(tiny, 1.5, 0.0); }) == code(ErrorCode::OutOfBounds));
        CHECK(error_code_of([&] { sample_flow(tiny, 0.0, -0.1); }) == code(ErrorCode::OutOfBounds));
    }

    TEST_CASE("size mismatch and bad parameters are rejected")
    {
        const RasterF a(64, 64, 0.f), b(64, 32, 0.f);
        CHECK(error_code_of([&] { farneback(a, b, FarnebackParams{}); }) == code(ErrorCode::DimensionMismatch));
        CHECK(error_code_of([&] { lk_step(a, b, {{1, 1}}, LKParams{}); }) == code(ErrorCode::DimensionMismatch));
        LKParams lk;
        lk.window = 8;
        CHECK(error_code_of([&] { lk_step(a, a, {{1, 1}}, lk); }) == code(ErrorCode::InvalidArgument));
        FarnebackParams fp;
        fp.poly_n = 4;
        CHECK(error_code_of([&] { farneback(a, a, fp); }) == code(ErrorCode::InvalidArgument));
        const RasterF tiny(12, 12, 0.f);
        CHECK(error_code_of([&] { farneback(tiny, tiny, FarnebackParams{}); }) != 0);
    }

    TEST_CASE("binary flow files round trip and reject bad headers")
    {
        TempDir dir;
        FlowField f = field_from(5, 4, 0.f, 0.f);
        for (std::size_t i = 0; i < f.u.size(); ++i) {
            f.u.data[i] = 0.25f * i - 1.f;
            f.v.data[i] = -0.5f * i;
        }
        save_flow_binary(f, dir / "f.flo");
        const auto g = load_flow_binary(dir / "f.flo");
        CHECK(g.u.data == f.u.data);
        CHECK(g.v.data == f.v.data);
        CHECK(fs::file_size(dir / "f.flo") == 16 + 2 * 4 * 20);
        {
            std::ofstream out(dir / "bad.flo", std::ios::binary);
            out << "NOPE";
        }
        CHECK(error_code_of([&] { load_flow_binary(dir / "bad.flo"); }) == code(ErrorCode::Parse));
        const std::string csv = flow_to_csv(f);
        CHECK(csv.rfind("x,y,u,v\n", 0) == 0);
    }

    TEST_CASE("status names")
    {
        CHECK(to_string(TrackStatus::Ok) == "ok");
        CHECK(to_string(TrackStatus::LostFbCheckFailed) == "fb-check-failed");
        CHECK(to_string(TrackStatus::LostLowTexture) == "low-texture");
    }
}
