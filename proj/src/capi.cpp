#include "lipidflow/lipidflow.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lipidflow/error.hpp"
#include "lipidflow/imgproc.hpp"
#include "lipidflow/report.hpp"
#include "lipidflow/synth.hpp"

using namespace lipidflow;
using nlohmann::json;

struct lf_video {
    VideoSequence seq;
};

struct lf_flow_field {
    FlowField field;
};

namespace {

thread_local std::string g_last_error;

lf_status set_error(lf_status status, const std::string& message)
{
    g_last_error = message;
    return status;
}

template <typename F>
lf_status guard(F&& body)
{
    try {
        body();
        g_last_error.clear();
        return LF_OK;
    } catch (const Error& e) {
        return set_error(static_cast<lf_status>(static_cast<int>(e.code())), e.what());
    } catch (const json::exception& e) {
        return set_error(LF_ERR_PARSE, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(LF_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(LF_ERR_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put(char** out, const std::string& s)
{
    if (out) *out = dup_string(s);
}

void need(const void* p, const char* name)
{
    if (!p) fail(ErrorCode::InvalidArgument, std::string(name) + " is null");
}

const Frame& frame_at(const lf_video* video, int index)
{
    need(video, "video");
    if (index < 0 || index >= static_cast<int>(video->seq.size()))
        fail(ErrorCode::OutOfBounds, "frame " + std::to_string(index) + " out of range");
    return video->seq.frames[static_cast<std::size_t>(index)];
}

json parse_or_empty(const char* text)
{
    if (!text || !*text) return json::object();
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("options JSON: ") + e.what());
    }
}

/// Section options are validated through the pipeline config so every entry point accepts the same keys.
PipelineConfig section_config(const char* params_json, const char* section)
{
    json j = parse_or_empty(params_json);
    if (j.empty()) return {};
    return config_from_json(json{{section, j}});
}

lf_video* wrap(VideoSequence seq) { return new lf_video{std::move(seq)}; }

VariantId variant_or_default(const char* text)
{
    if (!text || !*text) return kDefaultVariant;
    const auto v = parse_variant(text);
    if (!v) fail(ErrorCode::InvalidArgument, std::string("unknown variant '") + text + "'");
    return *v;
}

}  // namespace

extern "C" {

const char* lf_version(void) { return kToolVersion; }

const char* lf_status_name(lf_status status)
{
    switch (status) {
    case LF_OK: return "ok";
    case LF_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case LF_ERR_IO: return "io";
    case LF_ERR_PARSE: return "parse";
    case LF_ERR_TRUNCATED: return "truncated";
    case LF_ERR_EMPTY_INPUT: return "empty-input";
    case LF_ERR_DIMENSION_MISMATCH: return "dimension-mismatch";
    case LF_ERR_PUPIL_NOT_FOUND: return "pupil-not-found";
    case LF_ERR_ALIGNMENT: return "alignment";
    case LF_ERR_NUMERICAL: return "numerical";
    case LF_ERR_MASK_TOO_SMALL: return "mask-too-small";
    case LF_ERR_NO_SEEDS: return "no-seeds";
    case LF_ERR_NO_TRAJECTORIES: return "no-trajectories";
    case LF_ERR_NO_INTERBLINKS: return "no-interblinks";
    case LF_ERR_INSUFFICIENT_DATA: return "insufficient-data";
    case LF_ERR_OUT_OF_BOUNDS: return "out-of-bounds";
    case LF_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* lf_last_error_message(void) { return g_last_error.c_str(); }

void lf_free_string(char* s) { std::free(s); }

lf_status lf_video_load_y4m(const char* path, lf_video** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = wrap(load_y4m(path));
    });
}

lf_status lf_video_load_pgm_dir(const char* dir, double fps, lf_video** out)
{
    return guard([&] {
        need(dir, "dir");
        need(out, "out");
        *out = wrap(load_image_sequence(dir, fps > 0 ? fps : 30.0));
    });
}

lf_status lf_video_load(const char* path, double fps, lf_video** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        const std::filesystem::path p(path);
        VideoSequence seq;
        if (std::filesystem::is_directory(p)) {
            seq = load_image_sequence(p, fps > 0 ? fps : 30.0);
        } else if (p.extension() == ".pgm") {
            std::vector<RasterU8> one{load_pgm(p)};
            seq = make_sequence(std::move(one), fps > 0 ? fps : 30.0, p.filename().string());
        } else {
            seq = load_y4m(p);
            if (fps > 0) seq = make_sequence([&] {
                std::vector<RasterU8> imgs;
                for (auto& f : seq.frames) imgs.push_back(std::move(f.image));
                return imgs;
            }(), fps, seq.source_id);
        }
        *out = wrap(std::move(seq));
    });
}

lf_status lf_video_create(int width, int height, int frames, const uint8_t* data, double fps, lf_video** out)
{
    return guard([&] {
        need(data, "data");
        need(out, "out");
        require(width > 0 && height > 0 && frames > 0, "video dimensions must be positive");
        const std::size_t plane = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
        std::vector<RasterU8> imgs;
        for (int i = 0; i < frames; ++i) {
            RasterU8 img(width, height);
            std::memcpy(img.data.data(), data + plane * static_cast<std::size_t>(i), plane);
            imgs.push_back(std::move(img));
        }
        *out = wrap(make_sequence(std::move(imgs), fps, "memory"));
    });
}

void lf_video_free(lf_video* video) { delete video; }

lf_status lf_video_info(const lf_video* video, int* width, int* height, int* frames, double* fps)
{
    return guard([&] {
        need(video, "video");
        if (width) *width = video->seq.width();
        if (height) *height = video->seq.height();
        if (frames) *frames = static_cast<int>(video->seq.size());
        if (fps) *fps = video->seq.fps;
    });
}

lf_status lf_video_frame(const lf_video* video, int index, uint8_t* buffer, size_t buffer_size)
{
    return guard([&] {
        const Frame& f = frame_at(video, index);
        need(buffer, "buffer");
        if (buffer_size < f.image.data.size()) fail(ErrorCode::InvalidArgument, "buffer too small");
        std::memcpy(buffer, f.image.data.data(), f.image.data.size());
    });
}

lf_status lf_video_slice(const lf_video* video, int first, int last, lf_video** out)
{
    return guard([&] {
        need(video, "video");
        need(out, "out");
        require(first >= 0 && last >= first, "invalid frame range", ErrorCode::OutOfBounds);
        *out = wrap(slice(video->seq, static_cast<std::size_t>(first), static_cast<std::size_t>(last)));
    });
}

lf_status lf_video_save_pgm_dir(const lf_video* video, const char* dir)
{
    return guard([&] {
        need(video, "video");
        need(dir, "dir");
        save_image_sequence(video->seq, dir);
    });
}

lf_status lf_video_save_y4m(const lf_video* video, const char* path)
{
    return guard([&] {
        need(video, "video");
        need(path, "path");
        save_y4m(video->seq, path);
    });
}

lf_status lf_video_save_pgm(const lf_video* video, int index, const char* path)
{
    return guard([&] {
        need(path, "path");
        save_pgm(frame_at(video, index), path);
    });
}

lf_status lf_synth_generate(const char* config_json, lf_video** video, char** manifest_json)
{
    return guard([&] {
        need(video, "video");
        auto [seq, manifest] = generate(synth_config_from_json(config_json && *config_json ? config_json : "{}"));
        put(manifest_json, to_json(manifest));
        *video = wrap(std::move(seq));
    });
}

lf_status lf_detect_blinks(const lf_video* video, double k, double min_interblink_s, char** json_out)
{
    return guard([&] {
        need(video, "video");
        need(json_out, "json_out");
        BlinkParams p;
        p.k = k;
        p.min_interblink_s = min_interblink_s;
        const BlinkAnalysis a = analyze_blinks(video->seq, p);
        json blinks = json::array(), ibs = json::array();
        for (auto [s, e] : a.blinks) blinks.push_back({s, e});
        for (const auto& ib : a.interblinks) ibs.push_back({ib.start, ib.end});
        put(json_out, json{{"blinks", blinks}, {"interblinks", ibs}}.dump());
    });
}

lf_status lf_align_interblink(const lf_video* video, int interblink, double k, double min_interblink_s,
                              lf_video** aligned, char** offsets_csv)
{
    return guard([&] {
        need(video, "video");
        need(aligned, "aligned");
        BlinkParams p;
        p.k = k;
        p.min_interblink_s = min_interblink_s;
        const BlinkAnalysis a = analyze_blinks(video->seq, p);
        if (a.interblinks.empty()) fail(ErrorCode::NoInterBlinks, "no inter-blink period found");
        if (interblink < 0 || interblink >= static_cast<int>(a.interblinks.size()))
            fail(ErrorCode::OutOfBounds, "inter-blink " + std::to_string(interblink) + " out of range (found " +
                                             std::to_string(a.interblinks.size()) + ")");
        const InterBlink& ib = a.interblinks[static_cast<std::size_t>(interblink)];
        AlignedInterBlink al = align_interblink(video->seq, ib);
        std::ostringstream os;
        os << "frame,dx,dy\n";
        for (std::size_t i = 0; i < al.offsets.size(); ++i)
            os << ib.start + static_cast<int>(i) << ',' << al.offsets[i].dx << ',' << al.offsets[i].dy << '\n';
        put(offsets_csv, os.str());
        *aligned = wrap(std::move(al.frames));
    });
}

lf_status lf_enhance(const lf_video* video, const char* kind, const char* params_json, lf_video** out)
{
    return guard([&] {
        need(video, "video");
        need(kind, "kind");
        need(out, "out");
        const auto k = parse_enhancement(kind);
        if (!k) fail(ErrorCode::InvalidArgument, std::string("unknown enhancement '") + kind + "'");
        const PipelineConfig c = section_config(params_json, "enhance");
        *out = wrap(enhance_sequence(video->seq, *k, c.enhance));
    });
}

lf_status lf_build_mask(const lf_video* video, int frame, const double* pupil, const char* params_json,
                        lf_video** mask, char** contour_csv)
{
    return guard([&] {
        const Frame& f = frame_at(video, frame);
        need(mask, "mask");
        const PipelineConfig c = section_config(params_json, "snake");
        const PupilCircle pc = pupil ? PupilCircle{pupil[0], pupil[1], pupil[2]} : locate_pupil(f, c.dark_percentile);
        const IrisMask m = build_iris_mask(f, pc, c.snake);
        RasterU8 img(m.mask.width, m.mask.height);
        for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = m.mask.data[i] ? 255 : 0;
        std::ostringstream os;
        os.precision(10);
        os << "x,y\n";
        for (const auto& p : m.bottom.points) os << p.x << ',' << p.y << '\n';
        put(contour_csv, os.str());
        *mask = wrap(make_sequence({std::move(img)}, video->seq.fps, "mask"));
    });
}

lf_status lf_detect_features(const lf_video* video, int frame, int threshold, int arc, char** csv)
{
    return guard([&] {
        const Frame& f = frame_at(video, frame);
        need(csv, "csv");
        std::ostringstream os;
        os << "x,y,score\n";
        for (const auto& p : fast_detect(f, threshold, arc)) os << p.x << ',' << p.y << ',' << p.score << '\n';
        put(csv, os.str());
    });
}

lf_status lf_flow_farneback(const lf_video* from, const lf_video* to, const char* params_json, lf_flow_field** out)
{
    return guard([&] {
        const Frame& a = frame_at(from, 0);
        const Frame& b = frame_at(to, 0);
        need(out, "out");
        const PipelineConfig c = section_config(params_json, "farneback");
        *out = new lf_flow_field{farneback(a, b, c.farneback)};
    });
}

lf_status lf_flow_lk(const lf_video* from, const lf_video* to, int grid_step, const char* params_json, char** csv)
{
    return guard([&] {
        const Frame& a = frame_at(from, 0);
        const Frame& b = frame_at(to, 0);
        need(csv, "csv");
        require(grid_step > 0, "grid step must be positive");
        const PipelineConfig c = section_config(params_json, "lk");
        std::vector<Point2> pts;
        for (int y = grid_step / 2; y < a.height(); y += grid_step)
            for (int x = grid_step / 2; x < a.width(); x += grid_step) pts.push_back({double(x), double(y)});
        const LKResult r = lk_step(to_float(a), to_float(b), pts, c.lk);
        std::ostringstream os;
        os.precision(8);
        os << "x,y,u,v,status\n";
        for (std::size_t i = 0; i < pts.size(); ++i)
            os << pts[i].x << ',' << pts[i].y << ',' << r.points[i].x - pts[i].x << ',' << r.points[i].y - pts[i].y
               << ',' << to_string(r.status[i]) << '\n';
        put(csv, os.str());
    });
}

void lf_flow_field_free(lf_flow_field* field) { delete field; }

lf_status lf_flow_field_info(const lf_flow_field* field, int* width, int* height)
{
    return guard([&] {
        need(field, "field");
        if (width) *width = field->field.u.width;
        if (height) *height = field->field.u.height;
    });
}

lf_status lf_flow_field_sample(const lf_flow_field* field, double x, double y, double* u, double* v)
{
    return guard([&] {
        need(field, "field");
        const auto [su, sv] = sample_flow(field->field, x, y);
        if (u) *u = su;
        if (v) *v = sv;
    });
}

lf_status lf_flow_field_save(const lf_flow_field* field, const char* path, const char* format)
{
    return guard([&] {
        need(field, "field");
        need(path, "path");
        const std::string fmt = format ? format : "bin";
        if (fmt == "bin") {
            save_flow_binary(field->field, path);
        } else if (fmt == "csv") {
            std::ofstream out(path);
            if (!out) fail(ErrorCode::Io, std::string("cannot write ") + path);
            out << flow_to_csv(field->field);
        } else {
            fail(ErrorCode::InvalidArgument, "flow format must be csv or bin");
        }
    });
}

lf_status lf_track(const lf_video* aligned, const char* variant, const char* config_json, char** trajectories_csv,
                   char** displacement_csv)
{
    return guard([&] {
        need(aligned, "aligned");
        const VariantId id = variant_or_default(variant);
        const PipelineConfig c = config_from_json(parse_or_empty(config_json));
        const VideoSequence& seq = aligned->seq;
        require(seq.size() >= 2, "tracking needs at least two frames", ErrorCode::InsufficientData);
        const Frame& last = seq.frames.back();
        const IrisMask mask = build_iris_mask(last, locate_pupil(last, c.dark_percentile), c.snake);
        const VideoSequence enhanced = enhance_sequence(seq, id.enhancement, c.enhance);
        const auto seeds = select_seed_points(fast_detect(enhanced.frames.back(), c.fast.threshold, c.fast.arc), mask,
                                              c.seed_columns);
        const auto trajs = track_backwards(enhanced, seeds, id.flow, c.lk, c.farneback, c.track);
        put(trajectories_csv, trajectories_to_csv(trajs));
        const auto kept = filter_trajectories(trajs, mask, c.filter);
        put(displacement_csv, displacement_to_csv(aggregate_displacement(kept, seq.fps, c.absolute_dx)));
    });
}

lf_status lf_fit_exponential(const double* t, const double* d, size_t n, lf_fit_result* out)
{
    return guard([&] {
        need(t, "t");
        need(d, "d");
        need(out, "out");
        const DecayFit f = fit_exponential({t, n}, {d, n});
        *out = {f.rho, f.lambda_s, f.c, f.rmse, f.n, f.degenerate ? 1 : 0};
    });
}

lf_status lf_fit_series_csv(const char* csv_text, const char* axis, char** json_out)
{
    return guard([&] {
        need(csv_text, "csv_text");
        need(json_out, "json_out");
        const std::string ax = axis ? axis : "y";
        require(ax == "x" || ax == "y", "axis must be x or y");
        const DisplacementSeries s = displacement_from_csv(csv_text);
        const DecayFit f = fit_exponential(s.t, ax == "y" ? s.dy : s.dx);
        put(json_out, json{{"rho", f.rho}, {"lambda_s", f.lambda_s}, {"c", f.c}, {"rmse", f.rmse},
                           {"degenerate", f.degenerate}}
                          .dump());
    });
}

lf_status lf_pearson(const double* x, const double* y, size_t n, lf_correlation* out)
{
    return guard([&] {
        need(x, "x");
        need(y, "y");
        need(out, "out");
        const CorrelationResult r = pearson({x, n}, {y, n});
        *out = {r.r, r.slope, r.intercept, r.n};
    });
}

lf_status lf_compare(const char* annotations_json, const char* report_json, const char* variant, char** csv,
                     char** json_out)
{
    return guard([&] {
        need(annotations_json, "annotations_json");
        need(report_json, "report_json");
        const auto rows = compare_report(parse_annotations(annotations_json), parse_report(report_json),
                                         variant_or_default(variant));
        put(csv, comparison_to_csv(rows));
        put(json_out, comparison_to_json(rows).dump(2));
    });
}

lf_status lf_analyze(const lf_video* video, const char* config_json, char** report_json, char** trajectories_csv)
{
    return guard([&] {
        need(video, "video");
        need(report_json, "report_json");
        const AnalysisReport r = run_pipeline(video->seq, config_from_json(parse_or_empty(config_json)));
        put(report_json, report_to_string(r));
        put(trajectories_csv, lipidflow::trajectories_csv(r));
    });
}

lf_status lf_correlate(const char* const* report_jsons, size_t n_reports, const char* meta_csv, const char* field,
                       const char* axis, const char* variant, int per_interblink, char** json_out, char** svg)
{
    return guard([&] {
        need(report_jsons, "report_jsons");
        need(meta_csv, "meta_csv");
        need(json_out, "json_out");
        const std::string f = field ? field : "osdi";
        MetaField mf;
        if (f == "osdi") mf = MetaField::Osdi;
        else if (f == "thinning_time") mf = MetaField::ThinningTime;
        else fail(ErrorCode::InvalidArgument, "field must be osdi or thinning_time");
        const std::string ax = axis ? axis : "y";
        require(ax == "x" || ax == "y", "axis must be x or y");
        std::vector<ReportSummary> reports;
        for (std::size_t i = 0; i < n_reports; ++i) {
            need(report_jsons[i], "report");
            reports.push_back(parse_report(report_jsons[i]));
        }
        const CohortCorrelation c =
            correlate_cohort(reports, parse_subject_meta(meta_csv), mf, ax[0], variant_or_default(variant),
                             per_interblink != 0);
        json pts = json::array();
        for (std::size_t i = 0; i < c.points.size(); ++i)
            pts.push_back({{"subject_id", c.subjects[i]}, {"value", c.points[i].first}, {"lambda_s", c.points[i].second}});
        put(json_out, json{{"r", c.fit.r}, {"n", c.fit.n}, {"slope", c.fit.slope}, {"intercept", c.fit.intercept},
                           {"field", f}, {"axis", ax}, {"points", pts}}
                          .dump(2));
        if (svg) {
            const std::string x_label = mf == MetaField::Osdi ? "OSDI" : "thinning time (s)";
            *svg = dup_string(emit_scatter_svg(c.points, x_label, "lambda_" + ax + " (s)", c.fit));
        }
    });
}

}
