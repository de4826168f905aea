#include "lipidflow/video_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lipidflow/error.hpp"

namespace fs = std::filesystem;

namespace lipidflow {

namespace {

std::vector<char> read_all(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void parse_error(const fs::path& path, std::size_t offset, const std::string& what)
{
    fail(ErrorCode::Parse, path.string() + ": " + what + " at byte offset " + std::to_string(offset));
}

bool parse_int(std::string_view s, long long& out)
{
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

VideoSequence make_sequence(std::vector<RasterU8> images, double fps, std::string source_id)
{
    require(fps > 0.0, "fps must be positive");
    VideoSequence seq;
    seq.fps = fps;
    seq.source_id = std::move(source_id);
    seq.frames.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (i > 0)
            require(images[i].same_shape(images[0]), "frame " + std::to_string(i) + " has mismatched dimensions",
                    ErrorCode::DimensionMismatch);
        Frame f;
        f.image = std::move(images[i]);
        f.index = static_cast<int>(i);
        f.timestamp_s = static_cast<double>(i) / fps;
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

VideoSequence slice(const VideoSequence& video, std::size_t first, std::size_t last)
{
    require(first <= last && last < video.size(), "frame range out of bounds", ErrorCode::OutOfBounds);
    std::vector<RasterU8> images;
    images.reserve(last - first + 1);
    for (std::size_t i = first; i <= last; ++i) images.push_back(video.frames[i].image);
    return make_sequence(std::move(images), video.fps, video.source_id);
}

VideoSequence load_y4m(const fs::path& path)
{
    const std::vector<char> bytes = read_all(path);
    const std::string_view magic = "YUV4MPEG2 ";
    if (bytes.size() < magic.size() || !std::equal(magic.begin(), magic.end(), bytes.begin()))
        parse_error(path, 0, "missing YUV4MPEG2 magic");

    const auto header_end = std::find(bytes.begin(), bytes.end(), '\n');
    if (header_end == bytes.end()) parse_error(path, bytes.size(), "unterminated stream header");

    long long width = -1, height = -1, fps_num = -1, fps_den = -1;
    std::string chroma = "420jpeg";
    std::size_t pos = magic.size();
    const std::size_t end = static_cast<std::size_t>(header_end - bytes.begin());
    while (pos < end) {
        if (bytes[pos] == ' ') {
            ++pos;
            continue;
        }
        std::size_t tok_end = pos;
        while (tok_end < end && bytes[tok_end] != ' ') ++tok_end;
        const std::string_view tok(&bytes[pos], tok_end - pos);
        const char tag = tok[0];
        const std::string_view val = tok.substr(1);
        switch (tag) {
        case 'W':
            if (!parse_int(val, width) || width <= 0) parse_error(path, pos, "bad width tag");
            break;
        case 'H':
            if (!parse_int(val, height) || height <= 0) parse_error(path, pos, "bad height tag");
            break;
        case 'F': {
            const auto colon = val.find(':');
            if (colon == std::string_view::npos || !parse_int(val.substr(0, colon), fps_num) ||
                !parse_int(val.substr(colon + 1), fps_den) || fps_num <= 0 || fps_den <= 0)
                parse_error(path, pos, "bad frame-rate tag (fps must be a positive rational)");
            break;
        }
        case 'C':
            chroma = std::string(val);
            break;
        case 'I':
        case 'A':
        case 'X':
            break;
        default:
            parse_error(path, pos, "unknown header tag '" + std::string(1, tag) + "'");
        }
        pos = tok_end;
    }
    if (width <= 0 || height <= 0) parse_error(path, end, "header lacks W/H tags");
    if (fps_num <= 0) parse_error(path, end, "header lacks F tag");

    std::size_t chroma_bytes = 0;
    const std::size_t cw = static_cast<std::size_t>((width + 1) / 2);
    const std::size_t ch = static_cast<std::size_t>((height + 1) / 2);
    if (chroma.rfind("420", 0) == 0)
        chroma_bytes = 2 * cw * ch;
    else if (chroma != "mono")
        parse_error(path, 0, "unsupported colorspace C" + chroma + " (need 4:2:0 or mono)");

    const std::size_t luma_bytes = static_cast<std::size_t>(width * height);
    std::vector<RasterU8> images;
    pos = end + 1;
    while (pos < bytes.size()) {
        const std::string_view frame_magic = "FRAME";
        if (bytes.size() - pos < frame_magic.size() ||
            !std::equal(frame_magic.begin(), frame_magic.end(), bytes.begin() + static_cast<std::ptrdiff_t>(pos)))
            parse_error(path, pos, "expected FRAME marker");
        const auto nl = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), '\n');
        if (nl == bytes.end())
            fail(ErrorCode::Truncated, path.string() + ": truncated frame header in frame " +
                                           std::to_string(images.size()));
        pos = static_cast<std::size_t>(nl - bytes.begin()) + 1;
        if (bytes.size() - pos < luma_bytes + chroma_bytes)
            fail(ErrorCode::Truncated,
                 path.string() + ": truncated payload in frame " + std::to_string(images.size()));
        RasterU8 img(static_cast<int>(width), static_cast<int>(height));
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), luma_bytes,
                    reinterpret_cast<char*>(img.data.data()));
        images.push_back(std::move(img));
        pos += luma_bytes + chroma_bytes;
    }
    return make_sequence(std::move(images), static_cast<double>(fps_num) / static_cast<double>(fps_den),
                         path.stem().string());
}

void save_y4m(const VideoSequence& video, const fs::path& path)
{
    require(!video.empty(), "cannot write an empty video", ErrorCode::EmptyInput);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    // Integer rates are written exactly; others as a millihertz rational.
    long long num = std::llround(video.fps * 1000.0), den = 1000;
    if (std::abs(video.fps - std::round(video.fps)) < 1e-9) {
        num = std::llround(video.fps);
        den = 1;
    }
    out << "YUV4MPEG2 W" << video.width() << " H" << video.height() << " F" << num << ':' << den
        << " Ip A1:1 Cmono\n";
    for (const Frame& f : video.frames) {
        out << "FRAME\n";
        out.write(reinterpret_cast<const char*>(f.image.data.data()), static_cast<std::streamsize>(f.image.size()));
    }
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

RasterU8 load_pgm(const fs::path& path)
{
    const std::vector<char> bytes = read_all(path);
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_num = [&](const char* what) {
        skip_ws();
        const std::size_t start = pos;
        long long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > (1 << 24)) parse_error(path, start, std::string("oversized ") + what);
            ++pos;
        }
        if (pos == start) parse_error(path, start, std::string("expected ") + what);
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') parse_error(path, 0, "not a binary PGM (P5)");
    pos = 2;
    const long long w = read_num("width");
    const long long h = read_num("height");
    const long long maxval = read_num("maxval");
    if (w <= 0 || h <= 0) parse_error(path, pos, "non-positive dimensions");
    if (maxval != 255) parse_error(path, pos, "only maxval 255 is supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        parse_error(path, pos, "missing whitespace after header");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(w * h);
    if (bytes.size() - pos < n) fail(ErrorCode::Truncated, path.string() + ": truncated pixel data");
    RasterU8 img(static_cast<int>(w), static_cast<int>(h));
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), n, reinterpret_cast<char*>(img.data.data()));
    return img;
}

void save_pgm(const RasterU8& image, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.size()));
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

VideoSequence load_image_sequence(const fs::path& dir, double fps)
{
    require(fps > 0.0, "fps must be positive");
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) fail(ErrorCode::Io, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm") files.push_back(entry.path());
    }
    if (files.empty()) fail(ErrorCode::EmptyInput, "no PGM files in " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    std::vector<RasterU8> images;
    images.reserve(files.size());
    for (const auto& f : files) {
        RasterU8 img = load_pgm(f);
        if (!images.empty() && !img.same_shape(images.front()))
            fail(ErrorCode::DimensionMismatch, "dimension mismatch in " + f.string() + " (" +
                                                   std::to_string(img.width) + "x" + std::to_string(img.height) +
                                                   " vs " + std::to_string(images.front().width) + "x" +
                                                   std::to_string(images.front().height) + ")");
        images.push_back(std::move(img));
    }
    return make_sequence(std::move(images), fps, dir.filename().string());
}

void save_image_sequence(const VideoSequence& video, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
    for (const Frame& f : video.frames) {
        char name[32];
        std::snprintf(name, sizeof name, "%06d.pgm", f.index);
        save_pgm(f, dir / name);
    }
}

}  // namespace lipidflow
