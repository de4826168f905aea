#include "doctest.h"
#include "helpers.hpp"

#include "lipidflow/features.hpp"
#include "lipidflow/rng.hpp"
#include "lipidflow/synth.hpp"
#include "lipidflow/track.hpp"

#include <algorithm>
#include <cmath>

using namespace lipidflow;
using namespace testutil;

namespace {

constexpr int kW = 128, kH = 128;
constexpr double kFps = 30.0;

double rise(double t, double rho, double lambda) { return rho * (1.0 - std::exp(-t / lambda)); }

/// Whole-plane texture drifting right by dx(k) and up by dy(k).
VideoSequence drifting(int n, const std::function<double(int)>& dx, const std::function<double(int)>& dy,
                       std::uint64_t seed = 5)
{
    std::vector<RasterU8> imgs;
    for (int k = 0; k < n; ++k) imgs.push_back(render_texture(kW, kH, dx(k), -dy(k), seed));
    return make_sequence(std::move(imgs), kFps);
}

std::vector<FeaturePoint> central_seeds(const VideoSequence& v, int margin = 30)
{
    std::vector<FeaturePoint> out;
    for (const auto& p : fast_detect(v.frames.back()))
        if (p.x >= margin && p.y >= margin && p.x < kW - margin && p.y < kH - margin) out.push_back(p);
    return out;
}

Trajectory traj(std::vector<Point2> pos)
{
    Trajectory t;
    t.positions = std::move(pos);
    t.seed = {t.positions.back().x, t.positions.back().y, 1.0};
    return t;
}

IrisMask flat_mask(int top, int bottom)
{
    IrisMask m;
    m.mask = Mask(200, 200, 1);
    m.eyelash_y = top;
    for (int x = 0; x < 200; x += 10) m.bottom.points.push_back({double(x), double(bottom)});
    m.bottom.points.push_back({199, double(bottom)});
    return m;
}

VideoSequence mirrored(const VideoSequence& v)
{
    VideoSequence out = v;
    for (auto& f : out.frames)
        for (int y = 0; y < f.height(); ++y) std::reverse(f.image.data.begin() + y * f.width(), f.image.data.begin() + (y + 1) * f.width());
    return out;
}

}  // namespace

TEST_SUITE("track")
{
    TEST_CASE("variant names and the grid of ten")
    {
        const auto all = all_variants();
        REQUIRE(all.size() == 10);
        CHECK(all.front().flow == FlowMethod::LucasKanade);
        for (const auto& v : all) CHECK(parse_variant(to_string(v)) == v);
        CHECK(to_string(kDefaultVariant) == "farneback:lappyr");
        CHECK_FALSE(parse_variant("hs:original").has_value());
        CHECK_FALSE(parse_variant("lk").has_value());
    }

    TEST_CASE("a static sequence keeps every trajectory at its seed")
    {
        const auto v = drifting(8, [](int) { return 0.0; }, [](int) { return 0.0; });
        const auto seeds = central_seeds(v);
        REQUIRE(seeds.size() >= 5);
        for (auto m : {FlowMethod::LucasKanade, FlowMethod::Farneback}) {
            for (const auto& t : track_backwards(v, seeds, m)) {
                CHECK(t.status == TrackStatus::Ok);
                REQUIRE(t.positions.size() == 8);
                CHECK(t.positions.back().x == t.seed.x);
                CHECK(t.positions.back().y == t.seed.y);
                for (const auto& p : t.positions) {
                    CHECK(std::abs(p.x - t.seed.x) < 0.05);
                    CHECK(std::abs(p.y - t.seed.y) < 0.05);
                }
            }
        }
    }

    TEST_CASE("upward drift is traced back frame by frame")
    {
        const int n = 40;
        auto dy = [](int k) { return rise(k / kFps, 12.0, 0.6); };
        const auto v = drifting(n, [](int) { return 0.0; }, dy);
        const auto seeds = central_seeds(v);
        REQUIRE(seeds.size() >= 5);
        for (auto m : {FlowMethod::LucasKanade, FlowMethod::Farneback}) {
            int ok = 0;
            for (const auto& t : track_backwards(v, seeds, m)) {
                if (t.status != TrackStatus::Ok) continue;
                ++ok;
                for (int k = 1; k < n; ++k) {
                    const double step = t.positions[k - 1].y - t.positions[k].y;
                    CHECK(std::abs(step - (dy(k) - dy(k - 1))) < 0.3);
                }
            }
            CHECK(ok >= static_cast<int>(seeds.size()) / 2);
        }
    }

    TEST_CASE("seeds on flat ground are lost for lack of texture")
    {
        const std::vector<RasterU8> imgs(4, filled(64, 64, 100));
        const auto v = make_sequence(imgs, kFps);
        const auto t = track_backwards(v, {{32, 32, 10}}, FlowMethod::LucasKanade);
        REQUIRE(t.size() == 1);
        CHECK(t[0].status == TrackStatus::LostLowTexture);
        CHECK(t[0].lost_at == 2);
    }

    TEST_CASE("the forward-backward check flags round trips beyond its threshold")
    {
        const auto v = drifting(4, [](int k) { return 0.37 * k; }, [](int k) { return 0.61 * k; });
        const auto seeds = central_seeds(v);
        REQUIRE(!seeds.empty());
        for (auto m : {FlowMethod::LucasKanade, FlowMethod::Farneback}) {
            for (const auto& t : track_backwards(v, seeds, m)) CHECK(t.status == TrackStatus::Ok);
            TrackOptions strict;
            strict.fb_threshold = 1e-7;
            int failed = 0;
            for (const auto& t : track_backwards(v, seeds, m, {}, {}, strict)) {
                failed += t.status == TrackStatus::LostFbCheckFailed;
                if (t.status == TrackStatus::LostFbCheckFailed) CHECK(t.lost_at >= 0);
            }
            CHECK(failed > 0);
            TrackOptions off = strict;
            off.fb_check = false;
            for (const auto& t : track_backwards(v, seeds, m, {}, {}, off)) CHECK(t.status == TrackStatus::Ok);
        }
    }

    TEST_CASE("filter rejects trajectories that start high in the iris")
    {
        const auto m = flat_mask(10, 110);
        std::vector<Trajectory> ts;
        for (int i = 0; i < 5; ++i) ts.push_back(traj({{20.0 + 10 * i, 12}, {20.0 + 10 * i, 11}}));
        CHECK(error_code_of([&] { filter_trajectories(ts, m); }) == code(ErrorCode::NoTrajectories));
    }

    TEST_CASE("filter keeps the highest quarter of bottom starters")
    {
        const auto m = flat_mask(10, 110);
        std::vector<Trajectory> ts;
        Xorshift64Star rng(3);
        std::vector<double> last_y;
        for (int i = 0; i < 20; ++i) {
            const double y = 40 + 3.0 * ((i * 7) % 20) + 0.5 * rng.uniform();
            last_y.push_back(y);
            ts.push_back(traj({{10.0 + 8 * i, 100.0 + 0.4 * i}, {10.0 + 8 * i, y}}));
        }
        ts.push_back(traj({{50, 60}, {50, 5}}));  // starts too high
        auto lost = traj({{60, 105}, {60, 1}});
        lost.status = TrackStatus::LostDiverged;
        ts.push_back(lost);
        std::sort(last_y.begin(), last_y.end());
        const auto kept = filter_trajectories(ts, m, {0.15, 0.25});
        REQUIRE(kept.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(kept[i].positions.back().y == last_y[i]);
    }

    TEST_CASE("a single qualifying trajectory survives both filters")
    {
        const auto m = flat_mask(10, 110);
        const auto kept = filter_trajectories({traj({{50, 104}, {50, 70}}), traj({{80, 30}, {80, 20}})}, m);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].positions.front().y == 104);
    }

    TEST_CASE("aggregation of a steady riser and of a median")
    {
        std::vector<Point2> up;
        for (int k = 0; k < 6; ++k) up.push_back({10, 50.0 - k});
        const auto s = aggregate_displacement({traj(up)}, 30.0);
        for (int k = 0; k < 6; ++k) {
            CHECK(s.dy[k] == k);
            CHECK(s.dx[k] == 0);
            CHECK(s.t[k] == doctest::Approx(k / 30.0));
            CHECK(s.n_points[k] == 1);
        }
        const auto m = aggregate_displacement(
            {traj({{0, 50}, {0, 49}}), traj({{0, 50}, {0, 48}}), traj({{0, 50}, {0, 40}})}, 30.0);
        CHECK(m.dy[1] == 2.0);
    }

    TEST_CASE("aggregation ignores trajectories lost before the first frame")
    {
        auto lost = traj({{0, 50}, {0, 50}, {0, 0}});
        lost.status = TrackStatus::LostOutOfBounds;
        lost.lost_at = 1;
        const auto s = aggregate_displacement({traj({{0, 50}, {0, 49}, {0, 48}}), lost}, 30.0);
        CHECK(s.dy[2] == 2.0);
        CHECK(s.n_points[0] == 1);
    }

    TEST_CASE("median aggregation shrugs off three corrupted trajectories of seven")
    {
        std::vector<Trajectory> ts;
        for (int i = 0; i < 7; ++i) {
            std::vector<Point2> p;
            for (int k = 0; k < 10; ++k) {
                const bool bad = i < 3;
                const double corrupt = bad ? (i == 1 ? -40.0 : 35.0) * std::sin(k + i) : 0.0;
                p.push_back({20.0 + i + 0.5 * k + corrupt, 80.0 - 1.5 * k + corrupt});
            }
            ts.push_back(traj(p));
        }
        const auto s = aggregate_displacement(ts, 30.0);
        for (int k = 0; k < 10; ++k) {
            CHECK(std::abs(s.dy[k] - 1.5 * k) < 1e-9);
            CHECK(std::abs(s.dx[k] - 0.5 * k) < 1e-9);
        }
    }

    TEST_CASE("tracked exponential drift matches the closed form")
    {
        const int n = 90;
        auto dy = [](int k) { return rise(k / kFps, 14.0, 0.8); };
        auto dx = [](int k) { return rise(k / kFps, 4.0, 1.2); };
        const auto v = drifting(n, dx, dy, 9);
        const auto seeds = central_seeds(v);
        REQUIRE(seeds.size() >= 5);
        for (auto m : {FlowMethod::LucasKanade, FlowMethod::Farneback}) {
            std::vector<Trajectory> ok;
            for (auto& t : track_backwards(v, seeds, m))
                if (t.status == TrackStatus::Ok) ok.push_back(t);
            REQUIRE(!ok.empty());
            const auto s = aggregate_displacement(ok, kFps);
            for (int k = 0; k < n; ++k) {
                CHECK(std::abs(s.dy[k] - dy(k)) < 0.5);
                CHECK(std::abs(s.dx[k] - dx(k)) < 0.5);
            }
        }
    }

    TEST_CASE("mirroring the frames flips dx and keeps dy")
    {
        const int n = 20;
        auto dy = [](int k) { return 0.4 * k; };
        auto dx = [](int k) { return 0.25 * k; };
        const auto v = drifting(n, dx, dy, 4);
        const auto seeds = central_seeds(v);
        REQUIRE(seeds.size() >= 3);
        std::vector<FeaturePoint> flipped;
        for (auto p : seeds) {
            p.x = kW - 1 - p.x;
            flipped.push_back(p);
        }
        const auto mv = mirrored(v);
        for (auto m : {FlowMethod::LucasKanade, FlowMethod::Farneback}) {
            const auto a = track_backwards(v, seeds, m), b = track_backwards(mv, flipped, m);
            std::vector<Trajectory> ka, kb;
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i].status == TrackStatus::Ok && b[i].status == TrackStatus::Ok) {
                    ka.push_back(a[i]);
                    kb.push_back(b[i]);
                }
            REQUIRE(!ka.empty());
            const auto sa = aggregate_displacement(ka, kFps), sb = aggregate_displacement(kb, kFps);
            for (int k = 0; k < n; ++k) {
                CHECK(std::abs(sa.dy[k] - sb.dy[k]) < 0.02);
                CHECK(std::abs(sa.dx[k] + sb.dx[k]) < 0.02);
            }
        }
    }

    TEST_CASE("displacement csv round trip")
    {
        DisplacementSeries s;
        for (int k = 0; k < 5; ++k) {
            s.t.push_back(k / 30.0);
            s.dx.push_back(0.1 * k);
            s.dy.push_back(-0.7 * k);
            s.n_points.push_back(3);
        }
        const auto r = displacement_from_csv(displacement_to_csv(s));
        REQUIRE(r.t.size() == 5);
        for (int k = 0; k < 5; ++k) {
            CHECK(r.t[k] == doctest::Approx(s.t[k]).epsilon(1e-9));
            CHECK(r.dy[k] == doctest::Approx(s.dy[k]).epsilon(1e-9));
            CHECK(r.n_points[k] == 3);
        }
        const auto csv = trajectories_to_csv({traj({{1, 2}, {3, 4}})});
        CHECK(csv == "traj_id,frame,x,y,status\n0,0,1,2,ok\n0,1,3,4,ok\n");
    }
}
