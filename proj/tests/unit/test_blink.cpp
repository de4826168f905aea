#include "doctest.h"
#include "helpers.hpp"

#include "lipidflow/blink.hpp"
#include "lipidflow/rng.hpp"
#include "lipidflow/synth.hpp"

#include <algorithm>
#include <cmath>

using namespace lipidflow;
using namespace testutil;

namespace {

double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

VideoSequence video_of_values(const std::vector<int>& values, double fps = 30.0)
{
    std::vector<RasterU8> imgs;
    for (int v : values) imgs.push_back(filled(4, 4, static_cast<std::uint8_t>(v)));
    return make_sequence(imgs, fps);
}

VideoSequence blank_video(int n, double fps)
{
    return make_sequence(std::vector<RasterU8>(n, filled(2, 2, 0)), fps);
}

SynthConfig small_still_scene()
{
    SynthConfig c;
    c.width = 128;
    c.height = 128;
    c.pupil_cx = 64;
    c.pupil_cy = 56;
    c.pupil_r = 18;
    c.iris_r = 50;
    c.band_height = 14;
    c.rho_y = 0;
    c.rho_x = 0;
    c.jitter_amp = 0;
    c.noise_sigma = 0;
    c.blink_intervals.clear();
    c.duration_s = 3.0;
    return c;
}

}  // namespace

TEST_SUITE("blink")
{
    TEST_CASE("mean of a black and a 100 frame is 50")
    {
        const auto m = mean_frame(video_of_values({0, 100}));
        for (double v : m.values.data) CHECK(v == 50.0);
    }

    TEST_CASE("mean of one frame or repeated copies equals that frame")
    {
        const auto img = generated(5, 3, [](int x, int y) { return 17 * x + 40 * y; });
        const auto one = mean_frame(make_sequence({img}, 30));
        const auto many = mean_frame(make_sequence(std::vector<RasterU8>(7, img), 30));
        for (std::size_t i = 0; i < img.size(); ++i) {
            CHECK(one.values.data[i] == img.data[i]);
            CHECK(many.values.data[i] == img.data[i]);
        }
    }

    TEST_CASE("mean of an empty video is an error")
    {
        CHECK(error_code_of([] { mean_frame(VideoSequence{}); }) != 0);
    }

    TEST_CASE("frame distance is the mean absolute difference")
    {
        MeanFrame mean{RasterD(2, 2, 0.0)};
        CHECK(frame_distance(frame_of(filled(2, 2, 0)), mean) == 0.0);
        CHECK(frame_distance(frame_of(filled(2, 2, 10)), mean) == 10.0);
        RasterU8 img(2, 2);
        img.data = {0, 0, 10, 30};
        CHECK(frame_distance(frame_of(img), mean) == 10.0);
        CHECK(error_code_of([&] { frame_distance(frame_of(filled(3, 2, 0)), mean); }) ==
              code(ErrorCode::DimensionMismatch));
    }

    TEST_CASE("constant distances yield zero blinks")
    {
        const std::vector<double> d(40, 4.0);
        const auto s = detect_blinks(d);
        CHECK(s.threshold == 4.0);
        CHECK(std::none_of(s.blink_flags.begin(), s.blink_flags.end(), [](bool b) { return b; }));
    }

    TEST_CASE("a plateau is flagged against the median plus k MAD")
    {
        std::vector<double> d;
        for (int i = 0; i < 60; ++i) d.push_back(1.0 + 0.05 * std::sin(1.7 * i));
        for (int i = 20; i < 30; ++i) d[i] = 50.0;
        const double med = median_of(d);
        std::vector<double> dev;
        for (double x : d) dev.push_back(std::abs(x - med));
        const double thr = med + 3.0 * median_of(dev);
        const auto s = detect_blinks(d, 3.0);
        CHECK(s.threshold == doctest::Approx(thr).epsilon(1e-12));
        for (int i = 0; i < 60; ++i) CHECK(s.blink_flags[i] == (i >= 20 && i < 30));
    }

    TEST_CASE("short dips between blink frames are absorbed")
    {
        std::vector<double> d(40, 1.0);
        for (int i = 10; i < 14; ++i) d[i] = 50.0;
        d[14] = 1.0;
        for (int i = 15; i < 18; ++i) d[i] = 50.0;
        const auto s = detect_blinks(d);
        const auto runs = flag_runs(s.blink_flags);
        REQUIRE(runs.size() == 1);
        CHECK(runs[0] == std::pair{10, 17});
    }

    TEST_CASE("a three frame gap splits the blink")
    {
        std::vector<double> d(40, 1.0);
        for (int i : {10, 11, 15, 16}) d[i] = 50.0;
        CHECK(flag_runs(detect_blinks(d).blink_flags).size() == 2);
    }

    TEST_CASE("fewer than three frames or non-positive k is rejected")
    {
        const std::vector<double> two{1.0, 2.0};
        const std::vector<double> five(5, 1.0);
        CHECK(error_code_of([&] { detect_blinks(two); }) != 0);
        CHECK(error_code_of([&] { detect_blinks(five, 0.0); }) != 0);
    }

    TEST_CASE("detection is invariant under scaling the distances")
    {
        Xorshift64Star rng(5);
        std::vector<double> d;
        for (int i = 0; i < 90; ++i) d.push_back(rng.uniform() * (i % 23 < 4 ? 40.0 : 2.0));
        const auto base = detect_blinks(d);
        for (double s : {1e-3, 0.37, 2.0, 1e4}) {
            std::vector<double> scaled;
            for (double x : d) scaled.push_back(x * s);
            CHECK(detect_blinks(scaled).blink_flags == base.blink_flags);
        }
    }

    TEST_CASE("runs of 0.3 s, 2 s and 7 s give two inter-blinks with truncation")
    {
        // Blink frame, 9 open (0.3 s), blink, 60 open (2 s), blink, 210 open (7 s).
        std::vector<bool> flags;
        auto push = [&](bool v, int n) { flags.insert(flags.end(), n, v); };
        push(true, 1);
        push(false, 9);
        push(true, 1);
        push(false, 60);
        push(true, 1);
        push(false, 210);
        const auto video = blank_video(static_cast<int>(flags.size()), 30.0);
        const auto ibs = extract_interblinks(video, flags, 0.5);
        REQUIRE(ibs.size() == 2);
        CHECK(ibs[0].start == 11);
        CHECK(ibs[0].end == 70);
        CHECK(ibs[1].start == 72);
        CHECK(ibs[1].end == 72 + 149);
        CHECK(ibs[1].duration_s() == doctest::Approx(5.0));
    }

    TEST_CASE("no blinks give one inter-blink and all blinks give none")
    {
        const auto video = blank_video(120, 30.0);
        const auto all_open = extract_interblinks(video, std::vector<bool>(120, false));
        REQUIRE(all_open.size() == 1);
        CHECK(all_open[0].start == 0);
        CHECK(all_open[0].end == 119);
        CHECK(extract_interblinks(video, std::vector<bool>(120, true)).empty());
    }

    TEST_CASE("every inter-blink is at most five seconds and blink free")
    {
        Xorshift64Star rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            const double fps = 10.0 + 50.0 * rng.uniform();
            const int n = 20 + static_cast<int>(rng.uniform() * 600);
            std::vector<bool> flags(n);
            for (int i = 0; i < n; ++i) flags[i] = rng.uniform() < 0.01;
            for (const auto& ib : extract_interblinks(blank_video(n, fps), flags, 0.5)) {
                CHECK(ib.start <= ib.end);
                CHECK(ib.duration_s() <= kMaxInterBlinkSeconds + 1e-9);
                CHECK(ib.duration_s() >= 0.5 - 1e-9);
                for (int i = ib.start; i <= ib.end; ++i) CHECK_FALSE(flags[i]);
            }
        }
    }

    TEST_CASE("inserted occlusions of 3 to 15 frames are found within one frame")
    {
        for (int m = 3; m <= 15; ++m) {
            CAPTURE(m);
            auto cfg = small_still_scene();
            cfg.blink_intervals = {{1.0, m / cfg.fps}};
            const auto [video, manifest] = generate(cfg);
            REQUIRE(manifest.blink_frames.size() == static_cast<std::size_t>(m));
            const auto result = analyze_blinks(video);
            REQUIRE(result.blinks.size() == 1);
            CHECK(std::abs(result.blinks[0].first - manifest.blink_frames.front()) <= 1);
            CHECK(std::abs(result.blinks[0].second - manifest.blink_frames.back()) <= 1);
        }
    }
}
