#pragma once

#include "lipidflow/error.hpp"
#include "lipidflow/raster.hpp"
#include "lipidflow/video_io.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>

namespace testutil {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("lipidflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline lipidflow::RasterU8 filled(int w, int h, std::uint8_t v) { return lipidflow::RasterU8(w, h, v); }

inline lipidflow::RasterU8 generated(int w, int h, const std::function<double(int, int)>& f)
{
    lipidflow::RasterU8 img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img(x, y) = lipidflow::saturate_u8(f(x, y));
    return img;
}

inline lipidflow::Frame frame_of(lipidflow::RasterU8 img)
{
    lipidflow::Frame f;
    f.image = std::move(img);
    return f;
}

/// Runs `fn` and returns the error code it throws, or 0 if it does not throw a library error.
template <typename Fn>
int error_code_of(Fn&& fn)
{
    try {
        fn();
    } catch (const lipidflow::Error& e) {
        return static_cast<int>(e.code());
    }
    return 0;
}

inline int code(lipidflow::ErrorCode c) { return static_cast<int>(c); }

}  // namespace testutil
