#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lipidflow/raster.hpp"

namespace lipidflow {

/// One 8-bit grayscale frame. `timestamp_s` is index / fps of the owning sequence.
struct Frame {
    RasterU8 image;
    int index = 0;
    double timestamp_s = 0.0;

    int width() const { return image.width; }
    int height() const { return image.height; }
};

/// Equal-sized frames with consecutive indices from 0.
struct VideoSequence {
    std::vector<Frame> frames;
    double fps = 30.0;
    std::string source_id;

    bool empty() const { return frames.empty(); }
    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width(); }
    int height() const { return frames.empty() ? 0 : frames.front().height(); }
};

/// Builds a sequence from raw images, assigning indices and timestamps.
VideoSequence make_sequence(std::vector<RasterU8> images, double fps, std::string source_id = {});

/// Copies frames [first, last] and renumbers them from 0.
VideoSequence slice(const VideoSequence& video, std::size_t first, std::size_t last);

VideoSequence load_y4m(const std::filesystem::path& path);
void save_y4m(const VideoSequence& video, const std::filesystem::path& path);

RasterU8 load_pgm(const std::filesystem::path& path);
void save_pgm(const RasterU8& image, const std::filesystem::path& path);
inline void save_pgm(const Frame& frame, const std::filesystem::path& path) { save_pgm(frame.image, path); }

/// Loads every *.pgm in `dir` in lexicographic filename order.
VideoSequence load_image_sequence(const std::filesystem::path& dir, double fps);
/// Writes frames as dir/000000.pgm, dir/000001.pgm, ...
void save_image_sequence(const VideoSequence& video, const std::filesystem::path& dir);

}  // namespace lipidflow
