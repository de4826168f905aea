#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lipidflow/lipidflow.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliFailure {
    lf_status status;
};

void check(lf_status s)
{
    if (s != LF_OK) {
        std::cerr << "lipidflow: " << lf_status_name(s) << ": " << lf_last_error_message() << '\n';
        throw CliFailure{s};
    }
}

struct VideoDeleter {
    void operator()(lf_video* v) const { lf_video_free(v); }
};
using Video = std::unique_ptr<lf_video, VideoDeleter>;

struct FlowDeleter {
    void operator()(lf_flow_field* f) const { lf_flow_field_free(f); }
};

class OwnedString {
public:
    OwnedString() = default;
    OwnedString(const OwnedString&) = delete;
    OwnedString& operator=(const OwnedString&) = delete;
    ~OwnedString() { lf_free_string(p_); }
    char** out() { return &p_; }
    std::string str() const { return p_ ? p_ : ""; }

private:
    char* p_ = nullptr;
};

Video load_video(const std::string& path, double fps)
{
    lf_video* v = nullptr;
    check(lf_video_load(path.c_str(), fps, &v));
    return Video(v);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "lipidflow: io: cannot open " << path << '\n';
        throw CliFailure{LF_ERR_IO};
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "lipidflow: io: cannot write " << path << '\n';
        throw CliFailure{LF_ERR_IO};
    }
    out << text;
}

void save_video(const lf_video* v, const std::string& out)
{
    if (fs::path(out).extension() == ".y4m")
        check(lf_video_save_y4m(v, out.c_str()));
    else
        check(lf_video_save_pgm_dir(v, out.c_str()));
}

int last_frame(const lf_video* v)
{
    int n = 0;
    check(lf_video_info(v, nullptr, nullptr, &n, nullptr));
    return n - 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tear-film lipid layer spread tracking"};
    app.set_version_flag("--version", std::string(lf_version()));
    app.require_subcommand(1);

    std::string input, out, config_path;
    double fps = 0.0;

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Run the full pipeline on a video");
    bool fast = false, no_fb = false;
    std::vector<std::string> variants;
    std::string traj_csv;
    std::optional<std::uint64_t> seed;
    analyze->add_option("--input", input, "Y4M file or PGM directory")->required();
    analyze->add_option("--fps", fps, "Frame rate override (required for PGM input without 30 fps)");
    analyze->add_flag("--fast", fast, "Only the default variant (farneback:lappyr)");
    analyze->add_option("--variant", variants, "Restrict to these variants (repeatable)");
    analyze->add_option("--out", out, "Report JSON path (stdout if omitted)");
    analyze->add_option("--trajectories-csv", traj_csv, "Write every tracked trajectory as CSV");
    analyze->add_option("--seed", seed, "Seed recorded in the report");
    analyze->add_option("--config", config_path, "Pipeline configuration JSON");
    analyze->add_flag("--no-fb-check", no_fb, "Disable the forward-backward tracking check");

    // blinks
    auto* blinks = app.add_subcommand("blinks", "Detect blinks and inter-blink periods");
    double k = 3.0, min_ib = 0.5;
    blinks->add_option("--input", input)->required();
    blinks->add_option("--fps", fps);
    blinks->add_option("--k", k, "MAD multiplier")->capture_default_str();
    blinks->add_option("--min-interblink", min_ib, "Shortest inter-blink in seconds")->capture_default_str();
    blinks->add_option("--out", out);

    // align
    auto* align = app.add_subcommand("align", "Pupil-align one inter-blink");
    int interblink = 0;
    align->add_option("--input", input)->required();
    align->add_option("--fps", fps);
    align->add_option("--interblink", interblink)->capture_default_str();
    align->add_option("--k", k)->capture_default_str();
    align->add_option("--min-interblink", min_ib)->capture_default_str();
    align->add_option("--out", out, "Output directory (frames plus offsets.csv) or .y4m file")->required();

    // enhance
    auto* enhance = app.add_subcommand("enhance", "Apply one enhancement to every frame");
    std::string kind = "lappyr";
    double unsharp_sigma = 2.0, unsharp_amount = 1.5, clahe_clip = 2.0;
    int lap_level = 1, clahe_tile = 64;
    enhance->add_option("--input", input)->required();
    enhance->add_option("--fps", fps);
    enhance->add_option("--kind", kind)
        ->check(CLI::IsMember({"original", "avgsub", "unsharp", "lappyr", "clahe"}))
        ->capture_default_str();
    enhance->add_option("--unsharp-sigma", unsharp_sigma)->capture_default_str();
    enhance->add_option("--unsharp-amount", unsharp_amount)->capture_default_str();
    enhance->add_option("--level", lap_level, "Laplacian pyramid level")->capture_default_str();
    enhance->add_option("--tile", clahe_tile, "Histogram equalization tile size")->capture_default_str();
    enhance->add_option("--clip", clahe_clip, "Histogram equalization clip limit")->capture_default_str();
    enhance->add_option("--out", out, "Output directory or .y4m file")->required();

    // mask
    auto* mask = app.add_subcommand("mask", "Iris mask of one frame");
    int frame = -1;
    std::vector<double> pupil;
    std::string contour_out;
    double alpha = 0.1, beta = 0.05, gamma = 2.0, step = 1.0, tol = 0.1;
    int iters = 200;
    mask->add_option("--input", input)->required();
    mask->add_option("--fps", fps);
    mask->add_option("--frame", frame, "Frame index (default: last)");
    mask->add_option("--pupil", pupil, "cx cy r (default: located automatically)")->expected(3);
    mask->add_option("--alpha", alpha)->capture_default_str();
    mask->add_option("--beta", beta)->capture_default_str();
    mask->add_option("--gamma", gamma)->capture_default_str();
    mask->add_option("--step", step)->capture_default_str();
    mask->add_option("--iters", iters)->capture_default_str();
    mask->add_option("--tol", tol)->capture_default_str();
    mask->add_option("--out", out, "Mask PGM path")->required();
    mask->add_option("--contour", contour_out, "Contour CSV path (stdout if omitted)");

    // features
    auto* features = app.add_subcommand("features", "FAST corners of one frame");
    int threshold = 20, arc = 9;
    features->add_option("--input", input)->required();
    features->add_option("--fps", fps);
    features->add_option("--frame", frame, "Frame index (default: last)");
    features->add_option("--threshold", threshold)->capture_default_str();
    features->add_option("--arc", arc)->capture_default_str();
    features->add_option("--out", out);

    // flow
    auto* flow = app.add_subcommand("flow", "Optical flow between two images");
    std::string method = "farneback", from, to, format = "csv";
    int grid = 8;
    flow->add_option("--method", method)->check(CLI::IsMember({"lk", "farneback"}))->capture_default_str();
    flow->add_option("--from", from)->required();
    flow->add_option("--to", to)->required();
    flow->add_option("--format", format, "csv or bin (farneback only)")
        ->check(CLI::IsMember({"csv", "bin"}))
        ->capture_default_str();
    flow->add_option("--grid", grid, "LK grid spacing in pixels")->capture_default_str();
    flow->add_option("--config", config_path, "Method parameters JSON");
    flow->add_option("--out", out);

    // track
    auto* track = app.add_subcommand("track", "Track one variant through an aligned inter-blink");
    std::string variant = "farneback:lappyr", disp_out;
    track->add_option("--input", input, "Aligned inter-blink (Y4M or PGM directory)")->required();
    track->add_option("--fps", fps);
    track->add_option("--variant", variant)->capture_default_str();
    track->add_option("--config", config_path, "Pipeline configuration JSON");
    track->add_flag("--no-fb-check", no_fb);
    track->add_option("--trajectories", traj_csv, "Trajectories CSV path")->required();
    track->add_option("--displacement", disp_out, "Displacement CSV path (stdout if omitted)");

    // fit
    auto* fit = app.add_subcommand("fit", "Exponential fit of a displacement series");
    std::string series, axis = "y";
    fit->add_option("--series", series, "Displacement CSV")->required();
    fit->add_option("--axis", axis)->check(CLI::IsMember({"x", "y"}))->capture_default_str();
    fit->add_option("--out", out);

    // compare
    auto* compare = app.add_subcommand("compare", "Compare a report against manual annotations");
    std::string annotations, report, json_out;
    compare->add_option("--annotations", annotations)->required();
    compare->add_option("--report", report)->required();
    compare->add_option("--variant", variant)->capture_default_str();
    compare->add_option("--csv", out, "CSV output (stdout if omitted)");
    compare->add_option("--json", json_out, "JSON output");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic eye video");
    synth->add_option("--config", config_path, "Synthetic configuration JSON (defaults if omitted)");
    synth->add_option("--out", out, "Output directory (PGM frames plus manifest.json) or .y4m file")->required();

    // correlate
    auto* correlate = app.add_subcommand("correlate", "Correlate characteristic times with subject metadata");
    std::vector<std::string> reports;
    std::string meta, field = "osdi", svg_out;
    bool per_ib = false;
    correlate->add_option("--reports", reports, "Report JSON files")->required();
    correlate->add_option("--meta", meta, "CSV with subject_id,osdi,thinning_time_s")->required();
    correlate->add_option("--field", field)->check(CLI::IsMember({"osdi", "thinning_time"}))->capture_default_str();
    correlate->add_option("--axis", axis)->check(CLI::IsMember({"x", "y"}))->capture_default_str();
    correlate->add_option("--variant", variant)->capture_default_str();
    correlate->add_flag("--per-interblink", per_ib, "One point per inter-blink instead of per subject");
    correlate->add_option("--out", out, "Result JSON (stdout if omitted)");
    correlate->add_option("--svg", svg_out, "Scatter plot SVG");

    CLI11_PARSE(app, argc, argv);

    auto pipeline_config = [&]() {
        json c = config_path.empty() ? json::object() : json::parse(read_file(config_path));
        if (no_fb) c["track"]["fb_check"] = false;
        return c;
    };

    try {
        if (*analyze) {
            json c = pipeline_config();
            if (fast) c["fast"] = true;
            if (!variants.empty()) c["variants"] = variants;
            if (seed) c["seed"] = *seed;
            Video v = load_video(input, fps);
            OwnedString rep, traj;
            check(lf_analyze(v.get(), c.dump().c_str(), rep.out(), traj_csv.empty() ? nullptr : traj.out()));
            write_output(out, rep.str());
            if (!traj_csv.empty()) write_output(traj_csv, traj.str());
        } else if (*blinks) {
            Video v = load_video(input, fps);
            OwnedString j;
            check(lf_detect_blinks(v.get(), k, min_ib, j.out()));
            write_output(out, j.str());
        } else if (*align) {
            Video v = load_video(input, fps);
            lf_video* aligned = nullptr;
            OwnedString offsets;
            check(lf_align_interblink(v.get(), interblink, k, min_ib, &aligned, offsets.out()));
            Video a(aligned);
            save_video(a.get(), out);
            const fs::path dir = fs::path(out).extension() == ".y4m" ? fs::path(out).parent_path() : fs::path(out);
            write_output((dir / "offsets.csv").string(), offsets.str());
        } else if (*enhance) {
            Video v = load_video(input, fps);
            const json p = {{"unsharp_sigma", unsharp_sigma},
                            {"unsharp_amount", unsharp_amount},
                            {"laplacian_level", lap_level},
                            {"clahe_tile", clahe_tile},
                            {"clahe_clip", clahe_clip}};
            lf_video* e = nullptr;
            check(lf_enhance(v.get(), kind.c_str(), p.dump().c_str(), &e));
            Video ev(e);
            save_video(ev.get(), out);
        } else if (*mask) {
            Video v = load_video(input, fps);
            const int f = frame < 0 ? last_frame(v.get()) : frame;
            const json p = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma},
                            {"step", step},   {"iters", iters}, {"tol", tol}};
            lf_video* m = nullptr;
            OwnedString contour;
            check(lf_build_mask(v.get(), f, pupil.size() == 3 ? pupil.data() : nullptr, p.dump().c_str(), &m,
                                contour.out()));
            Video mv(m);
            check(lf_video_save_pgm(mv.get(), 0, out.c_str()));
            write_output(contour_out, contour.str());
        } else if (*features) {
            Video v = load_video(input, fps);
            const int f = frame < 0 ? last_frame(v.get()) : frame;
            OwnedString csv;
            check(lf_detect_features(v.get(), f, threshold, arc, csv.out()));
            write_output(out, csv.str());
        } else if (*flow) {
            Video a = load_video(from, 0.0), b = load_video(to, 0.0);
            const std::string params = config_path.empty() ? "{}" : read_file(config_path);
            if (method == "lk") {
                OwnedString csv;
                check(lf_flow_lk(a.get(), b.get(), grid, params.c_str(), csv.out()));
                write_output(out, csv.str());
            } else {
                lf_flow_field* f = nullptr;
                check(lf_flow_farneback(a.get(), b.get(), params.c_str(), &f));
                std::unique_ptr<lf_flow_field, FlowDeleter> field(f);
                if (out.empty()) {
                    if (format == "bin") {
                        std::cerr << "lipidflow: binary flow needs --out\n";
                        return LF_ERR_INVALID_ARGUMENT;
                    }
                    out = "/dev/stdout";
                }
                check(lf_flow_field_save(field.get(), out.c_str(), format.c_str()));
            }
        } else if (*track) {
            Video v = load_video(input, fps);
            OwnedString traj, disp;
            check(lf_track(v.get(), variant.c_str(), pipeline_config().dump().c_str(), traj.out(), disp.out()));
            write_output(traj_csv, traj.str());
            write_output(disp_out, disp.str());
        } else if (*fit) {
            OwnedString j;
            check(lf_fit_series_csv(read_file(series).c_str(), axis.c_str(), j.out()));
            write_output(out, j.str());
        } else if (*compare) {
            OwnedString csv, j;
            check(lf_compare(read_file(annotations).c_str(), read_file(report).c_str(), variant.c_str(), csv.out(),
                             j.out()));
            write_output(out, csv.str());
            if (!json_out.empty()) write_output(json_out, j.str());
        } else if (*synth) {
            const std::string cfg = config_path.empty() ? "{}" : read_file(config_path);
            lf_video* v = nullptr;
            OwnedString manifest;
            check(lf_synth_generate(cfg.c_str(), &v, manifest.out()));
            Video sv(v);
            save_video(sv.get(), out);
            const fs::path dir = fs::path(out).extension() == ".y4m" ? fs::path(out).parent_path() : fs::path(out);
            write_output((dir / "manifest.json").string(), manifest.str());
        } else if (*correlate) {
            std::vector<std::string> texts;
            for (const auto& r : reports) texts.push_back(read_file(r));
            std::vector<const char*> ptrs;
            for (const auto& t : texts) ptrs.push_back(t.c_str());
            OwnedString j, svg;
            check(lf_correlate(ptrs.data(), ptrs.size(), read_file(meta).c_str(), field.c_str(), axis.c_str(),
                               variant.c_str(), per_ib ? 1 : 0, j.out(), svg_out.empty() ? nullptr : svg.out()));
            write_output(out, j.str());
            if (!svg_out.empty()) write_output(svg_out, svg.str());
        }
    } catch (const CliFailure& f) {
        return static_cast<int>(f.status);
    } catch (const json::exception& e) {
        std::cerr << "lipidflow: parse: " << e.what() << '\n';
        return LF_ERR_PARSE;
    }
    return 0;
}
