#include "doctest.h"
#include "helpers.hpp"

#include "lipidflow/synth.hpp"

#include <fstream>
#include <iterator>

using namespace lipidflow;
using namespace testutil;

namespace {

void write_bytes(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("video_io")
{
    TEST_CASE("mono y4m decodes frames, fps and timestamps")
    {
        TempDir dir;
        std::string bytes = "YUV4MPEG2 W4 H2 F30:1 Ip A1:1 Cmono\n";
        bytes += "FRAME\n" + std::string("\x01\x02\x03\x04\x05\x06\x07\x08", 8);
        bytes += "FRAME\n" + std::string(8, '\x09');
        write_bytes(dir / "a.y4m", bytes);
        const auto v = load_y4m(dir / "a.y4m");
        REQUIRE(v.size() == 2);
        CHECK(v.fps == 30.0);
        CHECK(v.width() == 4);
        CHECK(v.height() == 2);
        CHECK(v.frames[0].timestamp_s == 0.0);
        CHECK(v.frames[1].timestamp_s == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
        CHECK(v.frames[0].image(3, 1) == 8);
        CHECK(v.frames[1].index == 1);
    }

    TEST_CASE("420 y4m keeps luma and skips chroma")
    {
        TempDir dir;
        std::string luma;
        for (int i = 0; i < 16; ++i) luma.push_back(static_cast<char>(10 * i));
        std::string bytes = "YUV4MPEG2 W4 H4 F25:1 C420jpeg\n";
        for (int f = 0; f < 2; ++f) bytes += "FRAME\n" + luma + std::string(8, '\x80');
        write_bytes(dir / "c.y4m", bytes);
        const auto v = load_y4m(dir / "c.y4m");
        REQUIRE(v.size() == 2);
        CHECK(v.fps == 25.0);
        for (int i = 0; i < 16; ++i) CHECK(v.frames[1].image.data[i] == 10 * i);
    }

    TEST_CASE("zero fps header is a parse error")
    {
        TempDir dir;
        write_bytes(dir / "z.y4m", "YUV4MPEG2 W4 H2 F0:1 Cmono\nFRAME\n" + std::string(8, '\0'));
        CHECK(error_code_of([&] { load_y4m(dir / "z.y4m"); }) == code(ErrorCode::Parse));
    }

    TEST_CASE("bad magic reports the byte offset")
    {
        TempDir dir;
        write_bytes(dir / "m.y4m", "YUV4MPEG3 W4 H2 F30:1\n");
        try {
            load_y4m(dir / "m.y4m");
            FAIL("expected a parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Parse);
            CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
        }
    }

    TEST_CASE("truncated payload names the frame")
    {
        TempDir dir;
        write_bytes(dir / "t.y4m", "YUV4MPEG2 W4 H2 F30:1 Cmono\nFRAME\n" + std::string(8, '\0') + "FRAME\n" +
                                      std::string(3, '\0'));
        try {
            load_y4m(dir / "t.y4m");
            FAIL("expected a truncation error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Truncated);
            CHECK(std::string(e.what()).find("1") != std::string::npos);
        }
    }

    TEST_CASE("pgm directory loads in lexicographic order")
    {
        TempDir dir;
        save_pgm(filled(8, 8, 7), dir / "001.pgm");
        save_pgm(filled(8, 8, 3), dir / "000.pgm");
        const auto v = load_image_sequence(dir.path(), 30.0);
        REQUIRE(v.size() == 2);
        CHECK(v.frames[0].image(0, 0) == 3);
        CHECK(v.frames[1].image(0, 0) == 7);
        CHECK(v.frames[1].timestamp_s == doctest::Approx(1.0 / 30.0));
    }

    TEST_CASE("pgm directory with mixed sizes names the offending file")
    {
        TempDir dir;
        save_pgm(filled(8, 8, 1), dir / "000.pgm");
        save_pgm(filled(4, 4, 1), dir / "001.pgm");
        try {
            load_image_sequence(dir.path(), 30.0);
            FAIL("expected a dimension mismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DimensionMismatch);
            CHECK(std::string(e.what()).find("001.pgm") != std::string::npos);
        }
    }

    TEST_CASE("empty pgm directory is an empty-input error")
    {
        TempDir dir;
        CHECK(error_code_of([&] { load_image_sequence(dir.path(), 30.0); }) == code(ErrorCode::EmptyInput));
    }

    TEST_CASE("pgm round trip is bit exact")
    {
        TempDir dir;
        const auto img = generated(8, 8, [](int x, int y) { return 30 * x + 3 * y; });
        save_pgm(img, dir / "g.pgm");
        CHECK(load_pgm(dir / "g.pgm").data == img.data);
    }

    TEST_CASE("all-zero frame writes 64 zero bytes after the header")
    {
        TempDir dir;
        save_pgm(filled(8, 8, 0), dir / "z.pgm");
        const std::string bytes = read_bytes(dir / "z.pgm");
        REQUIRE(bytes.size() > 64);
        CHECK(bytes.substr(0, 2) == "P5");
        CHECK(bytes.substr(bytes.size() - 64) == std::string(64, '\0'));
        CHECK(bytes.find("255") != std::string::npos);
    }

    TEST_CASE("unwritable path is an io error")
    {
        CHECK(error_code_of([] { save_pgm(filled(4, 4, 0), "/nonexistent_dir_lipidflow/x.pgm"); }) ==
              code(ErrorCode::Io));
    }

    TEST_CASE("y4m and pgm sequences reproduce generated luma byte for byte")
    {
        TempDir dir;
        SynthConfig cfg;
        cfg.width = 96;
        cfg.height = 96;
        cfg.pupil_cx = 48;
        cfg.pupil_cy = 44;
        cfg.pupil_r = 12;
        cfg.iris_r = 36;
        cfg.band_height = 10;
        cfg.duration_s = 0.3;
        const auto [video, manifest] = generate(cfg);
        save_y4m(video, dir / "v.y4m");
        save_image_sequence(video, dir / "seq");
        const auto y = load_y4m(dir / "v.y4m");
        const auto p = load_image_sequence(dir / "seq", video.fps);
        REQUIRE(y.size() == video.size());
        REQUIRE(p.size() == video.size());
        for (std::size_t i = 0; i < video.size(); ++i) {
            CHECK(y.frames[i].image.data == video.frames[i].image.data);
            CHECK(p.frames[i].image.data == video.frames[i].image.data);
            CHECK(std::abs(y.frames[i].timestamp_s - static_cast<double>(i) / video.fps) < 1e-9);
        }
    }

    TEST_CASE("slice renumbers frames from zero")
    {
        std::vector<RasterU8> imgs;
        for (int i = 0; i < 5; ++i) imgs.push_back(filled(4, 4, static_cast<std::uint8_t>(i)));
        const auto v = make_sequence(imgs, 10.0);
        const auto s = slice(v, 2, 4);
        REQUIRE(s.size() == 3);
        CHECK(s.frames[0].index == 0);
        CHECK(s.frames[0].image(0, 0) == 2);
        CHECK(s.frames[2].timestamp_s == doctest::Approx(0.2));
    }
}
