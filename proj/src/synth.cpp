#include "lipidflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "lipidflow/error.hpp"
#include "lipidflow/rng.hpp"

namespace lipidflow {

namespace {

constexpr double kPi = std::numbers::pi;

// Fixed oriented sinusoids; phases come from the seed.
constexpr double kFringePeriods[4] = {11.0, 13.0, 16.0, 19.0};
constexpr double kFringeAngles[4] = {20.0, 65.0, 110.0, 155.0};
constexpr double kNoiseCell = 5.0;

constexpr double kScleraLevel = 190.0;
constexpr double kIrisLevel = 95.0;
constexpr double kPupilLevel = 25.0;
constexpr double kBandLift = 18.0;
constexpr double kSectorHalfWidth = 0.62;
constexpr double kLimbalWidth = 5.0;
constexpr double kLimbalDarkening = 30.0;
constexpr double kFreshContrast = 0.15;

double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed)
{
    const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B1ull +
                                                         static_cast<std::uint64_t>(iy) * 0x85EBCA77ull));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double cosine_mix(double a, double b, double t) { return a + (b - a) * 0.5 * (1.0 - std::cos(kPi * t)); }

double value_noise(double x, double y, std::uint64_t seed)
{
    const double gx = x / kNoiseCell, gy = y / kNoiseCell;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = gx - fx, ty = gy - fy;
    const double top = cosine_mix(lattice_value(ix, iy, seed), lattice_value(ix + 1, iy, seed), tx);
    const double bot = cosine_mix(lattice_value(ix, iy + 1, seed), lattice_value(ix + 1, iy + 1, seed), tx);
    return cosine_mix(top, bot, ty);
}

/// 0 below -w/2, 1 above +w/2, linear in between.
double ramp(double v, double width = 1.5) { return std::clamp(v / width + 0.5, 0.0, 1.0); }

struct Phases {
    double p[4];
};

Phases fringe_phases(std::uint64_t seed)
{
    Xorshift64Star rng(seed ^ 0xF00DF00Dull);
    Phases ph{};
    for (double& v : ph.p) v = 2.0 * kPi * rng.uniform();
    return ph;
}

double fringe_with(const Phases& ph, double x, double y, std::uint64_t seed)
{
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double a = kFringeAngles[i] * kPi / 180.0;
        const double k = 2.0 * kPi / kFringePeriods[i];
        s += 0.25 * std::sin(k * (x * std::cos(a) + y * std::sin(a)) + ph.p[i]);
    }
    // Soft saturation sharpens blob edges into corner-like structure while staying smooth.
    return std::tanh(1.8 * (s + 0.6 * value_noise(x, y, seed)));
}

}  // namespace

double fringe_texture(double x, double y, std::uint64_t seed) { return fringe_with(fringe_phases(seed), x, y, seed); }

RasterU8 render_texture(int width, int height, double sx, double sy, std::uint64_t seed, double amplitude,
                        double base)
{
    const Phases ph = fringe_phases(seed);
    RasterU8 img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) img(x, y) = saturate_u8(base + amplitude * fringe_with(ph, x - sx, y - sy, seed));
    return img;
}

void validate(const SynthConfig& c)
{
    require(c.width >= 32 && c.height >= 32, "synthetic frames must be at least 32x32");
    require(c.fps > 0 && c.duration_s > 0, "fps and duration must be positive");
    require(c.pupil_r > 0 && c.iris_r > c.pupil_r, "iris radius must exceed the pupil radius");
    require(c.pupil_cx >= 0 && c.pupil_cy >= 0 && c.pupil_cx < c.width && c.pupil_cy < c.height,
            "pupil center must lie inside the frame");
    require(c.lambda_y > 0 && c.lambda_x > 0, "decay times must be positive");
    require(c.jitter_amp >= 0 && c.noise_sigma >= 0, "jitter and noise must be non-negative");
    require(c.band_height >= 0 && c.fringe_amplitude >= 0, "band height and fringe amplitude must be non-negative");
    for (const auto& b : c.blink_intervals) require(b.start_s >= 0 && b.len_s > 0, "blink intervals must be positive");
}

std::pair<VideoSequence, GroundTruthManifest> generate(const SynthConfig& cfg)
{
    validate(cfg);
    const int n = std::max(1, static_cast<int>(std::lround(cfg.duration_s * cfg.fps)));
    GroundTruthManifest man;
    man.config = cfg;

    Xorshift64Star jrng(cfg.seed ^ 0x1177E5ull);
    const double phx = 2.0 * kPi * jrng.uniform();
    const double phy = 2.0 * kPi * jrng.uniform();
    const Phases ph = fringe_phases(cfg.seed);

    const double cx = cfg.pupil_cx, cy = cfg.pupil_cy, rp = cfg.pupil_r, ri = cfg.iris_r;
    auto limbus_y = [&](double x) {
        const double d = x - cx;
        return cy + std::sqrt(std::max(0.0, ri * ri - d * d));
    };

    std::vector<RasterU8> images;
    images.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = i / cfg.fps;
        bool blink = false;
        double last_end = 0.0;
        for (const auto& b : cfg.blink_intervals) {
            if (t >= b.start_s - 1e-12 && t < b.start_s + b.len_s - 1e-12) blink = true;
            if (b.start_s + b.len_s <= t + 1e-12) last_end = std::max(last_end, b.start_s + b.len_s);
        }
        const double tau = blink ? 0.0 : std::max(0.0, t - last_end);
        const double dy = cfg.rho_y * (1.0 - std::exp(-tau / cfg.lambda_y));
        const double dx = cfg.rho_x * (1.0 - std::exp(-tau / cfg.lambda_x));
        const int jx = static_cast<int>(std::lround(cfg.jitter_amp * std::sin(2.0 * kPi * t / 2.3 + phx)));
        const int jy = static_cast<int>(std::lround(cfg.jitter_amp * std::sin(2.0 * kPi * t / 1.7 + phy)));
        man.t.push_back(t);
        man.tau.push_back(tau);
        man.dx.push_back(dx);
        man.dy.push_back(dy);
        man.jx.push_back(jx);
        man.jy.push_back(jy);
        if (blink) man.blink_frames.push_back(i);

        Xorshift64Star nrng(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(i) + 0xB10Cull));
        RasterU8 img(cfg.width, cfg.height);
        const double lid_y = cy + ri + 10.0;
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                const double X = x - jx, Y = y - jy;
                double v;
                if (blink) {
                    v = kScleraLevel;
                    if (Y < lid_y) v = 45.0 + 50.0 * std::clamp(Y / lid_y, 0.0, 1.0);
                    v += 4.0 * value_noise(X, Y, cfg.seed ^ 0x11D);
                } else {
                    const double r = std::hypot(X - cx, Y - cy);
                    const double theta = std::atan2(Y - cy, X - cx);
                    const double in_iris = ramp(ri - r);
                    const double in_pupil = ramp(rp - r);
                    // Dark limbal ring along the outer iris edge.
                    const double iris = kIrisLevel + 4.0 * std::cos(18.0 * theta) * ramp(r - rp - 4.0, 8.0) -
                                        kLimbalDarkening * ramp(r - (ri - kLimbalWidth), 3.0);
                    v = kScleraLevel + (iris - kScleraLevel) * in_iris;
                    // Lipid band: texture coordinates move with the spread; the iris window is static.
                    const double x0 = X - dx, y0 = Y + dy;
                    // The spread is confined to a central sector of the lower iris.
                    const double sector = ramp(kSectorHalfWidth * ri - std::abs(X - cx), 8.0);
                    const double band = ramp(y0 - (limbus_y(x0) - cfg.band_height), 2.0) * in_iris * sector *
                                        ramp(r - rp - 3.0, 4.0);
                    // Fringes fade out over the limbal ring so the iris boundary keeps its contrast.
                    const double fade = ramp(ri - r - kLimbalWidth, 3.0);
                    // Lipid that enters from behind the lower lid later carries faint fringes only.
                    const double fresh = 1.0 - (1.0 - kFreshContrast) * ramp(y0 - limbus_y(x0), 4.0);
                    if (band > 0.0)
                        v += band * (kBandLift + fade * fresh * cfg.fringe_amplitude * fringe_with(ph, x0, y0, cfg.seed));
                    v = v + (kPupilLevel - v) * in_pupil;
                }
                if (cfg.noise_sigma > 0) v += cfg.noise_sigma * nrng.gaussian();
                img(x, y) = saturate_u8(v);
            }
        images.push_back(std::move(img));
    }
    return {make_sequence(std::move(images), cfg.fps, "synth-" + std::to_string(cfg.seed)), std::move(man)};
}

using nlohmann::json;

namespace {

json config_json(const SynthConfig& c)
{
    json blinks = json::array();
    for (const auto& b : c.blink_intervals) blinks.push_back({b.start_s, b.len_s});
    return {{"width", c.width},
            {"height", c.height},
            {"fps", c.fps},
            {"duration_s", c.duration_s},
            {"pupil", {c.pupil_cx, c.pupil_cy, c.pupil_r}},
            {"iris_r", c.iris_r},
            {"lambda_y", c.lambda_y},
            {"rho_y", c.rho_y},
            {"lambda_x", c.lambda_x},
            {"rho_x", c.rho_x},
            {"blink_intervals", blinks},
            {"jitter_amp", c.jitter_amp},
            {"noise_sigma", c.noise_sigma},
            {"seed", c.seed},
            {"fringe_amplitude", c.fringe_amplitude},
            {"band_height", c.band_height}};
}

}  // namespace

std::string to_json(const SynthConfig& config) { return config_json(config).dump(2); }

SynthConfig synth_config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, std::string("synth config: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::Parse, "synth config must be a JSON object");
    SynthConfig c;
    try {
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        c.fps = j.value("fps", c.fps);
        c.duration_s = j.value("duration_s", c.duration_s);
        if (j.contains("pupil")) {
            const auto& p = j.at("pupil");
            if (!p.is_array() || p.size() != 3) fail(ErrorCode::Parse, "synth config: pupil must be [cx, cy, r]");
            c.pupil_cx = p[0].get<double>();
            c.pupil_cy = p[1].get<double>();
            c.pupil_r = p[2].get<double>();
        }
        c.iris_r = j.value("iris_r", c.iris_r);
        c.lambda_y = j.value("lambda_y", c.lambda_y);
        c.rho_y = j.value("rho_y", c.rho_y);
        c.lambda_x = j.value("lambda_x", c.lambda_x);
        c.rho_x = j.value("rho_x", c.rho_x);
        if (j.contains("blink_intervals")) {
            c.blink_intervals.clear();
            for (const auto& b : j.at("blink_intervals")) {
                if (!b.is_array() || b.size() != 2)
                    fail(ErrorCode::Parse, "synth config: blink intervals must be [start_s, len_s]");
                c.blink_intervals.push_back({b[0].get<double>(), b[1].get<double>()});
            }
        }
        c.jitter_amp = j.value("jitter_amp", c.jitter_amp);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.seed = j.value("seed", c.seed);
        c.fringe_amplitude = j.value("fringe_amplitude", c.fringe_amplitude);
        c.band_height = j.value("band_height", c.band_height);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("synth config: ") + e.what());
    }
    validate(c);
    return c;
}

std::string to_json(const GroundTruthManifest& m)
{
    json frames = json::array();
    for (std::size_t i = 0; i < m.t.size(); ++i)
        frames.push_back({{"frame", i}, {"t", m.t[i]}, {"tau", m.tau[i]}, {"dx", m.dx[i]}, {"dy", m.dy[i]},
                          {"jx", m.jx[i]}, {"jy", m.jy[i]}});
    return json{{"config", config_json(m.config)}, {"blink_frames", m.blink_frames}, {"frames", frames}}.dump(2);
}

}  // namespace lipidflow
