#include "lipidflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "lipidflow/error.hpp"

namespace lipidflow {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) fail(ErrorCode::Parse, where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) fail(ErrorCode::Parse, "unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

json fit_json(const DecayFit& f)
{
    return {{"rho", f.rho}, {"lambda_s", f.lambda_s}, {"c", f.c}, {"rmse", f.rmse}, {"n", f.n},
            {"degenerate", f.degenerate}};
}

DecayFit fit_from_json(const json& j)
{
    DecayFit f;
    f.rho = j.at("rho").get<double>();
    f.lambda_s = j.at("lambda_s").get<double>();
    f.c = j.at("c").get<double>();
    f.rmse = j.at("rmse").get<double>();
    f.n = j.at("n").get<int>();
    f.degenerate = j.at("degenerate").get<bool>();
    return f;
}

std::string fmt(double v, const char* spec = "%.6g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

std::vector<VariantId> PipelineConfig::selected_variants() const
{
    if (!variants.empty()) return variants;
    if (fast_mode) return {kDefaultVariant};
    return all_variants();
}

json to_json(const PipelineConfig& c)
{
    json variants = json::array();
    for (const auto& v : c.variants) variants.push_back(to_string(v));
    return {
        {"blink", {{"k", c.blink.k}, {"min_interblink_s", c.blink.min_interblink_s}, {"two_pass", c.blink.two_pass}}},
        {"pupil", {{"dark_percentile", c.dark_percentile}}},
        {"enhance",
         {{"unsharp_sigma", c.enhance.unsharp_sigma},
          {"unsharp_amount", c.enhance.unsharp_amount},
          {"laplacian_level", c.enhance.laplacian_level},
          {"clahe_tile", c.enhance.clahe_tile},
          {"clahe_clip", c.enhance.clahe_clip}}},
        {"snake",
         {{"alpha", c.snake.alpha},
          {"beta", c.snake.beta},
          {"gamma", c.snake.gamma},
          {"step", c.snake.step},
          {"iters", c.snake.iters},
          {"tol", c.snake.tol},
          {"capture_sigmas", c.snake.capture_sigmas}}},
        {"features",
         {{"fast_threshold", c.fast.threshold}, {"fast_arc", c.fast.arc}, {"seed_columns", c.seed_columns}}},
        {"lk",
         {{"window", c.lk.window},
          {"levels", c.lk.levels},
          {"iters", c.lk.iters},
          {"eps", c.lk.eps},
          {"min_eig", c.lk.min_eig}}},
        {"farneback",
         {{"levels", c.farneback.levels},
          {"scale", c.farneback.scale},
          {"poly_n", c.farneback.poly_n},
          {"poly_sigma", c.farneback.poly_sigma},
          {"iters", c.farneback.iters},
          {"blur", c.farneback.blur}}},
        {"track",
         {{"fb_check", c.track.fb_check},
          {"fb_threshold", c.track.fb_threshold},
          {"bottom_frac", c.filter.bottom_frac},
          {"top_frac", c.filter.top_frac},
          {"absolute_dx", c.absolute_dx}}},
        {"variants", variants},
        {"fast", c.fast_mode},
        {"seed", c.seed},
    };
}

PipelineConfig config_from_json(const json& j)
{
    PipelineConfig c;
    try {
        check_keys(j, {"blink", "pupil", "enhance", "snake", "features", "lk", "farneback", "track", "variants", "fast", "seed"},
                   "pipeline config");
        if (j.contains("blink")) {
            const auto& b = j.at("blink");
            check_keys(b, {"k", "min_interblink_s", "two_pass"}, "blink");
            read(b, "k", c.blink.k);
            read(b, "min_interblink_s", c.blink.min_interblink_s);
            read(b, "two_pass", c.blink.two_pass);
        }
        if (j.contains("pupil")) {
            check_keys(j.at("pupil"), {"dark_percentile"}, "pupil");
            read(j.at("pupil"), "dark_percentile", c.dark_percentile);
        }
        if (j.contains("enhance")) {
            const auto& e = j.at("enhance");
            check_keys(e, {"unsharp_sigma", "unsharp_amount", "laplacian_level", "clahe_tile", "clahe_clip"}, "enhance");
            read(e, "unsharp_sigma", c.enhance.unsharp_sigma);
            read(e, "unsharp_amount", c.enhance.unsharp_amount);
            read(e, "laplacian_level", c.enhance.laplacian_level);
            read(e, "clahe_tile", c.enhance.clahe_tile);
            read(e, "clahe_clip", c.enhance.clahe_clip);
        }
        if (j.contains("snake")) {
            const auto& s = j.at("snake");
            check_keys(s, {"alpha", "beta", "gamma", "step", "iters", "tol", "capture_sigmas"}, "snake");
            read(s, "alpha", c.snake.alpha);
            read(s, "beta", c.snake.beta);
            read(s, "gamma", c.snake.gamma);
            read(s, "step", c.snake.step);
            read(s, "iters", c.snake.iters);
            read(s, "tol", c.snake.tol);
            read(s, "capture_sigmas", c.snake.capture_sigmas);
        }
        if (j.contains("features")) {
            const auto& f = j.at("features");
            check_keys(f, {"fast_threshold", "fast_arc", "seed_columns"}, "features");
            read(f, "fast_threshold", c.fast.threshold);
            read(f, "fast_arc", c.fast.arc);
            read(f, "seed_columns", c.seed_columns);
        }
        if (j.contains("lk")) {
            const auto& l = j.at("lk");
            check_keys(l, {"window", "levels", "iters", "eps", "min_eig"}, "lk");
            read(l, "window", c.lk.window);
            read(l, "levels", c.lk.levels);
            read(l, "iters", c.lk.iters);
            read(l, "eps", c.lk.eps);
            read(l, "min_eig", c.lk.min_eig);
        }
        if (j.contains("farneback")) {
            const auto& f = j.at("farneback");
            check_keys(f, {"levels", "scale", "poly_n", "poly_sigma", "iters", "blur"}, "farneback");
            read(f, "levels", c.farneback.levels);
            read(f, "scale", c.farneback.scale);
            read(f, "poly_n", c.farneback.poly_n);
            read(f, "poly_sigma", c.farneback.poly_sigma);
            read(f, "iters", c.farneback.iters);
            read(f, "blur", c.farneback.blur);
        }
        if (j.contains("track")) {
            const auto& t = j.at("track");
            check_keys(t, {"fb_check", "fb_threshold", "bottom_frac", "top_frac", "absolute_dx"}, "track");
            read(t, "fb_check", c.track.fb_check);
            read(t, "fb_threshold", c.track.fb_threshold);
            read(t, "bottom_frac", c.filter.bottom_frac);
            read(t, "top_frac", c.filter.top_frac);
            read(t, "absolute_dx", c.absolute_dx);
        }
        if (j.contains("variants"))
            for (const auto& v : j.at("variants")) {
                const auto id = parse_variant(v.get<std::string>());
                if (!id) fail(ErrorCode::Parse, "unknown variant '" + v.get<std::string>() + "'");
                c.variants.push_back(*id);
            }
        read(j, "fast", c.fast_mode);
        read(j, "seed", c.seed);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("pipeline config: ") + e.what());
    }
    validate(c.lk);
    validate(c.farneback);
    return c;
}

bool InterBlinkResult::all_failed() const
{
    return std::none_of(variants.begin(), variants.end(), [](const VariantResult& v) { return v.ok; });
}

PupilCircle aligned_last_pupil(const AlignedInterBlink& ib)
{
    PupilCircle p = ib.pupil.back();
    p.cx += ib.offsets.back().dx;
    p.cy += ib.offsets.back().dy;
    return p;
}

VariantResult run_variant(const VideoSequence& aligned, const IrisMask& mask, VariantId variant,
                          const PipelineConfig& config, const VideoSequence* enhanced)
{
    VariantResult r;
    r.variant = variant;
    try {
        VideoSequence local;
        if (!enhanced) {
            local = enhance_sequence(aligned, variant.enhancement, config.enhance);
            enhanced = &local;
        }
        const auto corners = fast_detect(enhanced->frames.back(), config.fast.threshold, config.fast.arc);
        const auto seeds = select_seed_points(corners, mask, config.seed_columns);
        r.n_seeds = static_cast<int>(seeds.size());
        r.trajectories = track_backwards(*enhanced, seeds, variant.flow, config.lk, config.farneback, config.track);
        r.n_tracked = static_cast<int>(std::count_if(r.trajectories.begin(), r.trajectories.end(),
                                                     [](const Trajectory& t) { return is_ok(t.status); }));
        const auto kept = filter_trajectories(r.trajectories, mask, config.filter);
        r.n_trajectories = static_cast<int>(kept.size());
        r.series = aggregate_displacement(kept, aligned.fps, config.absolute_dx);
        r.fit_y = fit_exponential(r.series.t, r.series.dy);
        r.fit_x = fit_exponential(r.series.t, r.series.dx);
        r.ok = true;
    } catch (const Error& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

AnalysisReport run_pipeline(const VideoSequence& video, const PipelineConfig& config)
{
    require(!video.empty(), "empty video", ErrorCode::EmptyInput);
    AnalysisReport report;
    report.source_id = video.source_id;
    report.fps = video.fps;
    report.frame_count = static_cast<int>(video.size());
    report.config = config;

    const BlinkAnalysis blinks = analyze_blinks(video, config.blink);
    report.blinks = blinks.blinks;
    if (blinks.interblinks.empty()) fail(ErrorCode::NoInterBlinks, "no inter-blink period found");

    const auto variants = config.selected_variants();
    for (std::size_t i = 0; i < blinks.interblinks.size(); ++i) {
        InterBlinkResult ibr;
        ibr.index = static_cast<int>(i);
        ibr.range = blinks.interblinks[i];
        auto fail_all = [&](const std::string& why) {
            for (const auto& v : variants) {
                VariantResult vr;
                vr.variant = v;
                vr.error = why;
                ibr.variants.push_back(std::move(vr));
            }
        };
        try {
            const AlignedInterBlink aligned = align_interblink(video, ibr.range, config.dark_percentile);
            ibr.offsets = aligned.offsets;
            const IrisMask mask = build_iris_mask(aligned.frames.frames.back(), aligned_last_pupil(aligned), config.snake);
            std::map<EnhancementKind, VideoSequence> enhanced;
            for (const auto& v : variants) {
                auto it = enhanced.find(v.enhancement);
                if (it == enhanced.end()) {
                    try {
                        it = enhanced.emplace(v.enhancement, enhance_sequence(aligned.frames, v.enhancement, config.enhance)).first;
                    } catch (const Error& e) {
                        VariantResult vr;
                        vr.variant = v;
                        vr.error = e.what();
                        ibr.variants.push_back(std::move(vr));
                        continue;
                    }
                }
                ibr.variants.push_back(run_variant(aligned.frames, mask, v, config, &it->second));
            }
        } catch (const Error& e) {
            ibr.variants.clear();
            fail_all(e.what());
        }
        report.interblinks.push_back(std::move(ibr));
    }
    return report;
}

json to_json(const AnalysisReport& report)
{
    json ibs = json::array();
    for (const auto& ib : report.interblinks) {
        json entries = json::array();
        json failures = json::array();
        for (const auto& v : ib.variants) {
            PipelineConfig ledger = report.config;
            ledger.variants = {v.variant};
            ledger.fast_mode = false;
            json e = {{"variant", to_string(v.variant)},
                      {"n_seeds", v.n_seeds},
                      {"n_tracked", v.n_tracked},
                      {"n_trajectories", v.n_trajectories},
                      {"params", to_json(ledger)}};
            if (v.ok) {
                e["fit_x"] = fit_json(v.fit_x);
                e["fit_y"] = fit_json(v.fit_y);
                e["series"] = {{"t", v.series.t}, {"dx", v.series.dx}, {"dy", v.series.dy}, {"n_points", v.series.n_points}};
                entries.push_back(std::move(e));
            } else {
                e["error"] = v.error;
                failures.push_back(std::move(e));
            }
        }
        json offsets = json::array();
        for (const auto& o : ib.offsets) offsets.push_back({o.dx, o.dy});
        ibs.push_back({{"index", ib.index},
                       {"start", ib.range.start},
                       {"end", ib.range.end},
                       {"duration_s", ib.range.duration_s()},
                       {"offsets", offsets},
                       {"all_failed", ib.all_failed()},
                       {"entries", entries},
                       {"failures", failures}});
    }
    json blinks = json::array();
    for (auto [s, e] : report.blinks) blinks.push_back({s, e});
    return {{"schema", kReportSchema},
            {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
            {"seed", report.config.seed},
            {"source_id", report.source_id},
            {"fps", report.fps},
            {"frame_count", report.frame_count},
            {"default_variant", to_string(kDefaultVariant)},
            {"blinks", blinks},
            {"interblinks", ibs}};
}

std::string report_to_string(const AnalysisReport& report) { return to_json(report).dump(2) + "\n"; }

std::string trajectories_csv(const AnalysisReport& report)
{
    std::ostringstream os;
    os.precision(10);
    os << "interblink,variant,traj_id,frame,x,y,status\n";
    for (const auto& ib : report.interblinks)
        for (const auto& v : ib.variants)
            for (std::size_t i = 0; i < v.trajectories.size(); ++i) {
                const auto& t = v.trajectories[i];
                for (std::size_t k = 0; k < t.positions.size(); ++k)
                    os << ib.index << ',' << to_string(v.variant) << ',' << i << ',' << k << ',' << t.positions[k].x
                       << ',' << t.positions[k].y << ','
                       << (t.lost_at < static_cast<int>(k) ? "ok" : to_string(t.status)) << '\n';
            }
    return os.str();
}

ReportSummary parse_report(const std::string& text)
{
    ReportSummary s;
    try {
        const json j = json::parse(text);
        if (j.value("schema", 0) != kReportSchema) fail(ErrorCode::Parse, "unsupported report schema");
        s.source_id = j.at("source_id").get<std::string>();
        for (const auto& ib : j.at("interblinks")) {
            for (const auto& e : ib.at("entries")) {
                ReportSummaryEntry r;
                r.interblink = ib.at("index").get<int>();
                r.variant = e.at("variant").get<std::string>();
                r.ok = true;
                r.params = e.at("params");
                r.fit_x = fit_from_json(e.at("fit_x"));
                r.fit_y = fit_from_json(e.at("fit_y"));
                s.entries.push_back(std::move(r));
            }
            for (const auto& e : ib.value("failures", json::array())) {
                ReportSummaryEntry r;
                r.interblink = ib.at("index").get<int>();
                r.variant = e.at("variant").get<std::string>();
                r.params = e.at("params");
                s.entries.push_back(std::move(r));
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("report: ") + e.what());
    }
    return s;
}

ReportSummary load_report(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return parse_report({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::vector<ComparisonEntry> compare_report(const AnnotationSet& annotations, const ReportSummary& report,
                                            VariantId variant)
{
    const std::string name = to_string(variant);
    const ReportSummaryEntry* entry = nullptr;
    for (const auto& e : report.entries)
        if (e.interblink == annotations.interblink_id && e.variant == name) entry = &e;
    if (!entry)
        fail(ErrorCode::InvalidArgument, "report has no " + name + " entry for inter-blink " +
                                             std::to_string(annotations.interblink_id));
    if (!entry->ok)
        fail(ErrorCode::InsufficientData, "report entry " + name + " for inter-blink " +
                                              std::to_string(annotations.interblink_id) + " failed");

    const DisplacementSeries ann = annotation_displacement(truncate(annotations, kMaxInterBlinkSeconds));
    const DecayFit ann_y = fit_exponential(ann.t, ann.dy);
    const DecayFit ann_x = fit_exponential(ann.t, ann.dx);
    return {{annotations.interblink_id, 'y', compare_with_annotation(entry->fit_y, ann_y)},
            {annotations.interblink_id, 'x', compare_with_annotation(entry->fit_x, ann_x)}};
}

std::string comparison_to_csv(const std::vector<ComparisonEntry>& rows)
{
    std::ostringstream os;
    os << "interblink,axis,lambda_computed,lambda_annotation,abs_diff,rel_diff,flagged\n";
    for (const auto& r : rows)
        os << r.interblink << ',' << r.axis << ',' << fmt(r.row.lambda_computed) << ',' << fmt(r.row.lambda_annotation)
           << ',' << fmt(r.row.abs_diff) << ',' << (r.row.rel_diff ? fmt(*r.row.rel_diff) : "") << ','
           << (r.row.flagged ? "true" : "false") << '\n';
    return os.str();
}

json comparison_to_json(const std::vector<ComparisonEntry>& rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        json e = {{"interblink", r.interblink},
                  {"axis", std::string(1, r.axis)},
                  {"lambda_computed", r.row.lambda_computed},
                  {"lambda_annotation", r.row.lambda_annotation},
                  {"abs_diff", r.row.abs_diff},
                  {"flagged", r.row.flagged}};
        e["rel_diff"] = r.row.rel_diff ? json(*r.row.rel_diff) : json(nullptr);
        out.push_back(std::move(e));
    }
    return {{"rows", out}};
}

std::vector<SubjectMeta> parse_subject_meta(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::Parse, "metadata CSV is empty");
    std::vector<SubjectMeta> out;
    int lineno = 1;
    auto number = [&](const std::string& cell) -> std::optional<double> {
        if (cell.empty()) return std::nullopt;
        try {
            return std::stod(cell);
        } catch (const std::exception&) {
            fail(ErrorCode::Parse, "metadata CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
        }
    };
    while (std::getline(is, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        while (cells.size() < 3) cells.emplace_back();
        SubjectMeta m{cells[0], number(cells[1]), number(cells[2])};
        if (m.osdi && (*m.osdi < 0 || *m.osdi > 100))
            fail(ErrorCode::Parse, "metadata CSV line " + std::to_string(lineno) + ": OSDI outside [0, 100]");
        out.push_back(std::move(m));
    }
    return out;
}

CohortCorrelation correlate_cohort(const std::vector<ReportSummary>& reports, const std::vector<SubjectMeta>& meta,
                                   MetaField field, char axis, VariantId variant, bool per_interblink)
{
    require(axis == 'x' || axis == 'y', "axis must be x or y");
    const std::string name = to_string(variant);
    std::map<std::string, std::vector<double>> lambdas;
    for (const auto& r : reports)
        for (const auto& e : r.entries) {
            if (!e.ok || e.variant != name) continue;
            const DecayFit& f = axis == 'y' ? e.fit_y : e.fit_x;
            if (!f.degenerate) lambdas[r.source_id].push_back(f.lambda_s);
        }

    CohortCorrelation out;
    std::vector<double> xs, ys;
    auto add = [&](const std::string& id, double value, double lambda) {
        out.subjects.push_back(id);
        out.points.emplace_back(value, lambda);
        xs.push_back(value);
        ys.push_back(lambda);
    };
    for (const auto& m : meta) {
        const auto value = field == MetaField::Osdi ? m.osdi : m.thinning_time_s;
        const auto it = lambdas.find(m.subject_id);
        if (!value || it == lambdas.end()) continue;
        if (per_interblink) {
            for (double l : it->second) add(m.subject_id, *value, l);
        } else {
            double sum = 0.0;
            for (double l : it->second) sum += l;
            add(m.subject_id, *value, sum / it->second.size());
        }
    }
    if (xs.size() < 2) fail(ErrorCode::InsufficientData, "fewer than two subjects with both lambda and metadata");
    out.fit = pearson(xs, ys);
    return out;
}

std::string emit_scatter_svg(const std::vector<std::pair<double, double>>& points, const std::string& x_label,
                             const std::string& y_label, const CorrelationResult& fit)
{
    require(!points.empty(), "scatter plot needs at least one point", ErrorCode::EmptyInput);
    constexpr double W = 480, H = 360, L = 60, R = 20, T = 20, B = 50;
    double x0 = points[0].first, x1 = x0, y0 = points[0].second, y1 = y0;
    for (auto [x, y] : points) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    auto pad = [](double& lo, double& hi) {
        const double span = hi - lo;
        const double p = span > 0 ? 0.05 * span : std::max(0.5, 0.05 * std::abs(lo));
        lo -= p;
        hi += p;
    };
    pad(x0, x1);
    pad(y0, y1);
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<path d=\"M" << L << ' ' << T << " V" << H - B << " H" << W - R << "\" stroke=\"black\" fill=\"none\"/>\n";
    constexpr int kTicks = 5;
    std::string tick_path;
    for (int i = 0; i < kTicks; ++i) {
        const double xv = x0 + (x1 - x0) * i / (kTicks - 1);
        const double yv = y0 + (y1 - y0) * i / (kTicks - 1);
        tick_path += "M" + fmt(px(xv), "%.2f") + ' ' + fmt(H - B, "%.2f") + " v5 ";
        tick_path += "M" + fmt(L, "%.2f") + ' ' + fmt(py(yv), "%.2f") + " h-5 ";
        os << "<text x=\"" << fmt(px(xv), "%.2f") << "\" y=\"" << H - B + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xv, "%.3g") << "</text>\n";
        os << "<text x=\"" << L - 8 << "\" y=\"" << fmt(py(yv) + 4, "%.2f")
           << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yv, "%.3g") << "</text>\n";
    }
    os << "<path d=\"" << tick_path << "\" stroke=\"black\" fill=\"none\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"13\" text-anchor=\"middle\">"
       << xml_escape(x_label) << "</text>\n";
    os << "<text x=\"15\" y=\"" << (T + H - B) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
       << (T + H - B) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    for (auto [x, y] : points)
        os << "<circle cx=\"" << fmt(px(x), "%.2f") << "\" cy=\"" << fmt(py(y), "%.2f")
           << "\" r=\"4\" fill=\"steelblue\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << fmt(px(x0), "%.2f") << "\" y1=\"" << fmt(py(fit.slope * x0 + fit.intercept), "%.2f")
       << "\" x2=\"" << fmt(px(x1), "%.2f") << "\" y2=\"" << fmt(py(fit.slope * x1 + fit.intercept), "%.2f")
       << "\" stroke=\"firebrick\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 << "\" font-size=\"13\">r=" << fmt(fit.r, "%.3f")
       << " (n=" << fit.n << ")</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace lipidflow
