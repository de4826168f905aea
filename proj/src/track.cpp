#include "lipidflow/track.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lipidflow/error.hpp"
#include "lipidflow/imgproc.hpp"

namespace lipidflow {

namespace {

double median_inplace(std::vector<double>& v)
{
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

bool inside(const Point2& p, int w, int h) { return p.x >= 0 && p.y >= 0 && p.x <= w - 1 && p.y <= h - 1; }

}  // namespace

std::string to_string(VariantId id)
{
    return std::string(id.flow == FlowMethod::LucasKanade ? "lk" : "farneback") + ":" +
           std::string(to_string(id.enhancement));
}

std::optional<VariantId> parse_variant(std::string_view text)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    const std::string_view flow = text.substr(0, colon);
    VariantId id;
    if (flow == "lk") id.flow = FlowMethod::LucasKanade;
    else if (flow == "farneback") id.flow = FlowMethod::Farneback;
    else return std::nullopt;
    const auto kind = parse_enhancement(text.substr(colon + 1));
    if (!kind) return std::nullopt;
    id.enhancement = *kind;
    return id;
}

std::vector<VariantId> all_variants()
{
    std::vector<VariantId> out;
    for (FlowMethod m : {FlowMethod::LucasKanade, FlowMethod::Farneback})
        for (EnhancementKind k : kAllEnhancements) out.push_back({m, k});
    return out;
}

std::vector<Trajectory> track_backwards(const VideoSequence& frames, const std::vector<FeaturePoint>& seeds,
                                        FlowMethod method, const LKParams& lk, const FarnebackParams& fb,
                                        const TrackOptions& options)
{
    require(frames.size() >= 2, "tracking needs at least two frames", ErrorCode::InsufficientData);
    require(!seeds.empty(), "tracking needs at least one seed", ErrorCode::NoSeeds);
    const int n = static_cast<int>(frames.size());
    const int w = frames.width(), h = frames.height();

    std::vector<Trajectory> trajs(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        trajs[i].seed = seeds[i];
        trajs[i].positions.assign(n, Point2{seeds[i].x, seeds[i].y});
    }
    auto lose = [](Trajectory& t, TrackStatus why, int frame) {
        t.status = why;
        t.lost_at = frame;
    };

    std::optional<PolyExpansion> exp_next;  // expansion of frame k
    RasterF img_next = to_float(frames.frames[n - 1]);
    if (method == FlowMethod::Farneback) exp_next = poly_expand(img_next, fb);

    for (int k = n - 1; k >= 1; --k) {
        RasterF img_prev = to_float(frames.frames[k - 1]);
        std::vector<std::size_t> live;
        std::vector<Point2> pts;
        for (std::size_t i = 0; i < trajs.size(); ++i)
            if (is_ok(trajs[i].status)) {
                live.push_back(i);
                pts.push_back(trajs[i].positions[k]);
            }

        std::vector<Point2> moved(pts.size());
        std::vector<TrackStatus> status(pts.size(), TrackStatus::Ok);
        std::optional<PolyExpansion> exp_prev;
        if (method == FlowMethod::LucasKanade) {
            if (!pts.empty()) {
                auto r = lk_step(img_next, img_prev, pts, lk);
                moved = std::move(r.points);
                status = std::move(r.status);
                if (options.fb_check) {
                    std::vector<std::size_t> ok;
                    std::vector<Point2> fwd_in;
                    for (std::size_t j = 0; j < pts.size(); ++j)
                        if (is_ok(status[j])) {
                            ok.push_back(j);
                            fwd_in.push_back(moved[j]);
                        }
                    if (!fwd_in.empty()) {
                        const auto back = lk_step(img_prev, img_next, fwd_in, lk);
                        for (std::size_t m = 0; m < ok.size(); ++m) {
                            const std::size_t j = ok[m];
                            if (!is_ok(back.status[m]) || std::hypot(back.points[m].x - pts[j].x,
                                                                     back.points[m].y - pts[j].y) > options.fb_threshold)
                                status[j] = TrackStatus::LostFbCheckFailed;
                        }
                    }
                }
            }
        } else {
            exp_prev = poly_expand(img_prev, fb);
            if (!pts.empty()) {
                const FlowField field = farneback(*exp_next, *exp_prev, fb);
                std::optional<FlowField> fwd;
                if (options.fb_check) fwd = farneback(*exp_prev, *exp_next, fb);
                for (std::size_t j = 0; j < pts.size(); ++j) {
                    const auto [u, v] = sample_flow(field, pts[j].x, pts[j].y);
                    moved[j] = {pts[j].x + u, pts[j].y + v};
                    if (!inside(moved[j], w, h)) {
                        status[j] = TrackStatus::LostOutOfBounds;
                        continue;
                    }
                    if (fwd) {
                        const auto [fu, fv] = sample_flow(*fwd, moved[j].x, moved[j].y);
                        if (std::hypot(moved[j].x + fu - pts[j].x, moved[j].y + fv - pts[j].y) > options.fb_threshold)
                            status[j] = TrackStatus::LostFbCheckFailed;
                    }
                }
            }
        }

        for (std::size_t j = 0; j < live.size(); ++j) {
            Trajectory& t = trajs[live[j]];
            if (is_ok(status[j])) {
                t.positions[k - 1] = moved[j];
            } else {
                lose(t, status[j], k - 1);
                for (int f = k - 1; f >= 0; --f) t.positions[f] = t.positions[k];
            }
        }
        img_next = std::move(img_prev);
        if (exp_prev) exp_next = std::move(exp_prev);
    }
    return trajs;
}

std::vector<Trajectory> filter_trajectories(const std::vector<Trajectory>& trajs, const IrisMask& mask,
                                            const FilterParams& params)
{
    require(params.bottom_frac > 0 && params.bottom_frac <= 1, "bottom fraction must lie in (0, 1]");
    require(params.top_frac > 0 && params.top_frac <= 1, "top fraction must lie in (0, 1]");

    std::vector<const Trajectory*> bottom;
    for (const Trajectory& t : trajs) {
        if (!is_ok(t.status) || t.positions.empty()) continue;
        const Point2& p0 = t.positions.front();
        const auto [top_y, bottom_y] = mask.y_extent(p0.x);
        if (std::isnan(bottom_y) || bottom_y <= top_y) continue;
        const double band_top = bottom_y - params.bottom_frac * (bottom_y - top_y);
        if (p0.y >= band_top && p0.y <= bottom_y) bottom.push_back(&t);
    }
    if (bottom.empty()) fail(ErrorCode::NoTrajectories, "no trajectory starts near the bottom of the iris");

    std::stable_sort(bottom.begin(), bottom.end(), [](const Trajectory* a, const Trajectory* b) {
        return a->positions.back().y < b->positions.back().y;
    });
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.top_frac * static_cast<double>(bottom.size()) - 1e-9)));
    std::vector<Trajectory> out;
    for (std::size_t i = 0; i < keep && i < bottom.size(); ++i) out.push_back(*bottom[i]);
    return out;
}

DisplacementSeries aggregate_displacement(const std::vector<Trajectory>& trajs, double fps, bool absolute_dx)
{
    require(fps > 0, "fps must be positive");
    std::vector<const Trajectory*> valid;
    for (const Trajectory& t : trajs)
        if (t.lost_at < 0 && !t.positions.empty()) valid.push_back(&t);
    require(!valid.empty(), "aggregation needs at least one trajectory valid at frame 0", ErrorCode::NoTrajectories);
    const std::size_t n = valid.front()->positions.size();
    for (const Trajectory* t : valid)
        require(t->positions.size() == n, "trajectories differ in length", ErrorCode::DimensionMismatch);

    DisplacementSeries s;
    std::vector<double> ys, xs;
    for (std::size_t k = 0; k < n; ++k) {
        ys.clear();
        xs.clear();
        for (const Trajectory* t : valid) {
            ys.push_back(t->positions[0].y - t->positions[k].y);
            const double dx = t->positions[k].x - t->positions[0].x;
            xs.push_back(absolute_dx ? std::abs(dx) : dx);
        }
        s.t.push_back(static_cast<double>(k) / fps);
        s.dy.push_back(median_inplace(ys));
        s.dx.push_back(median_inplace(xs));
        s.n_points.push_back(static_cast<int>(valid.size()));
    }
    return s;
}

std::string trajectories_to_csv(const std::vector<Trajectory>& trajs)
{
    std::ostringstream os;
    os.precision(10);
    os << "traj_id,frame,x,y,status\n";
    for (std::size_t i = 0; i < trajs.size(); ++i)
        for (std::size_t k = 0; k < trajs[i].positions.size(); ++k) {
            const bool valid = trajs[i].lost_at < static_cast<int>(k);
            os << i << ',' << k << ',' << trajs[i].positions[k].x << ',' << trajs[i].positions[k].y << ','
               << (valid ? "ok" : to_string(trajs[i].status)) << '\n';
        }
    return os.str();
}

std::string displacement_to_csv(const DisplacementSeries& s)
{
    std::ostringstream os;
    os.precision(12);
    os << "t,dx,dy,n_points\n";
    for (std::size_t k = 0; k < s.t.size(); ++k) os << s.t[k] << ',' << s.dx[k] << ',' << s.dy[k] << ',' << s.n_points[k] << '\n';
    return os.str();
}

DisplacementSeries displacement_from_csv(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::Parse, "displacement CSV is empty");
    // Header names select columns so hand-written two-column files (t,d) also load.
    std::vector<std::string> cols;
    {
        std::stringstream hs(line);
        std::string c;
        while (std::getline(hs, c, ',')) {
            while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
            cols.push_back(c);
        }
    }
    auto col = [&](std::initializer_list<const char*> names) -> int {
        for (const char* nm : names)
            for (std::size_t i = 0; i < cols.size(); ++i)
                if (cols[i] == nm) return static_cast<int>(i);
        return -1;
    };
    const int ct = col({"t"}), cdx = col({"dx"}), cdy = col({"dy", "d"}), cn = col({"n_points"});
    if (ct < 0 || cdy < 0) fail(ErrorCode::Parse, "displacement CSV needs t and dy (or d) columns");

    DisplacementSeries s;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<double> vals;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail(ErrorCode::Parse, "displacement CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (vals.size() < cols.size())
            fail(ErrorCode::Parse, "displacement CSV line " + std::to_string(lineno) + ": too few columns");
        s.t.push_back(vals[ct]);
        s.dy.push_back(vals[cdy]);
        s.dx.push_back(cdx >= 0 ? vals[cdx] : 0.0);
        s.n_points.push_back(cn >= 0 ? static_cast<int>(vals[cn]) : 0);
    }
    return s;
}

}  // namespace lipidflow
