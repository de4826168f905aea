#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lipidflow/video_io.hpp"

namespace lipidflow {

struct BlinkInterval {
    double start_s = 0.0;
    double len_s = 0.0;
};

struct SynthConfig {
    int width = 256;
    int height = 256;
    double fps = 30.0;
    double duration_s = 5.0;
    double pupil_cx = 128.0;
    double pupil_cy = 112.0;
    double pupil_r = 38.0;
    double iris_r = 100.0;
    double lambda_y = 0.8;
    double rho_y = 25.0;
    double lambda_x = 1.5;
    double rho_x = 6.0;
    std::vector<BlinkInterval> blink_intervals = {{0.0, 0.3}};
    double jitter_amp = 2.0;
    double noise_sigma = 3.0;
    std::uint64_t seed = 1;

    // Scene appearance.
    double fringe_amplitude = 70.0;
    double band_height = 28.0;  ///< initial lipid band thickness above the lower limbus, px
};

struct GroundTruthManifest {
    std::vector<double> t;       ///< frame times, s
    std::vector<double> tau;     ///< time since the end of the last blink, s
    std::vector<double> dx;      ///< lateral texture displacement, px (rightward)
    std::vector<double> dy;      ///< upward texture displacement, px
    std::vector<int> jx;         ///< whole-frame jitter, px
    std::vector<int> jy;
    std::vector<int> blink_frames;
    SynthConfig config;
};

void validate(const SynthConfig& config);

std::pair<VideoSequence, GroundTruthManifest> generate(const SynthConfig& config);

/// Band-limited lipid texture in [-1, 1] at scene coordinates (x, y).
double fringe_texture(double x, double y, std::uint64_t seed);

/// Frame rendered with the lipid texture over the whole plane shifted by (sx, sy); for flow tests.
RasterU8 render_texture(int width, int height, double sx, double sy, std::uint64_t seed, double amplitude = 60.0,
                        double base = 128.0);

std::string to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);
std::string to_json(const GroundTruthManifest& manifest);

}  // namespace lipidflow
