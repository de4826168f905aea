#include "lipidflow/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "lipidflow/error.hpp"

namespace lipidflow {

using nlohmann::json;

AnnotationSet parse_annotations(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, std::string("annotations: ") + e.what());
    }
    AnnotationSet set;
    try {
        if (!j.is_object()) fail(ErrorCode::Parse, "annotations: top level must be an object");
        set.interblink_id = j.value("interblink", 0);
        set.fps = j.value("fps", 30.0);
        if (!(set.fps > 0)) fail(ErrorCode::Parse, "annotations: fps must be positive");
        if (!j.contains("tracks") || !j.at("tracks").is_array())
            fail(ErrorCode::Parse, "annotations: missing tracks array");
        const auto& tracks = j.at("tracks");
        if (tracks.empty()) fail(ErrorCode::Parse, "annotations: tracks array is empty");
        for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
            const auto where = "annotations: track " + std::to_string(ti);
            const auto& tr = tracks[ti];
            if (!tr.is_object() || !tr.contains("points") || !tr.at("points").is_array())
                fail(ErrorCode::Parse, where + " lacks a points array");
            AnnotationTrack track;
            for (const auto& p : tr.at("points")) {
                if (!p.is_array() || p.size() != 3) fail(ErrorCode::Parse, where + ": points must be [frame, x, y]");
                const Keyframe k{p[0].get<int>(), p[1].get<double>(), p[2].get<double>()};
                if (k.frame < 0) fail(ErrorCode::Parse, where + ": negative frame index");
                if (!track.keyframes.empty() && k.frame <= track.keyframes.back().frame)
                    fail(ErrorCode::Parse, where + ": keyframes must have strictly increasing frames");
                track.keyframes.push_back(k);
            }
            if (track.keyframes.size() < 2) fail(ErrorCode::Parse, where + ": needs at least 2 keyframes");
            set.tracks.push_back(std::move(track));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("annotations: ") + e.what());
    }
    return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return parse_annotations({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::vector<Point2> densify(const AnnotationTrack& track, int first, int last)
{
    const auto& kf = track.keyframes;
    require(kf.size() >= 2, "track needs at least 2 keyframes", ErrorCode::InsufficientData);
    require(first <= last, "empty densify range");
    if (first < kf.front().frame || last > kf.back().frame)
        fail(ErrorCode::OutOfBounds, "densify range [" + std::to_string(first) + ", " + std::to_string(last) +
                                         "] outside keyframe span [" + std::to_string(kf.front().frame) + ", " +
                                         std::to_string(kf.back().frame) + "]");
    std::vector<Point2> out;
    out.reserve(static_cast<std::size_t>(last - first + 1));
    std::size_t seg = 0;
    for (int f = first; f <= last; ++f) {
        while (seg + 1 < kf.size() && kf[seg + 1].frame < f) ++seg;
        const Keyframe& a = kf[seg];
        const Keyframe& b = kf[std::min(seg + 1, kf.size() - 1)];
        if (f == a.frame) {
            out.push_back({a.x, a.y});
        } else if (f == b.frame) {
            out.push_back({b.x, b.y});
        } else {
            const double s = static_cast<double>(f - a.frame) / (b.frame - a.frame);
            out.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
        }
    }
    return out;
}

std::pair<int, int> common_span(const AnnotationSet& set)
{
    require(!set.tracks.empty(), "annotation set has no tracks", ErrorCode::EmptyInput);
    int first = 0, last = std::numeric_limits<int>::max();
    for (const auto& t : set.tracks) {
        first = std::max(first, t.keyframes.front().frame);
        last = std::min(last, t.keyframes.back().frame);
    }
    require(first < last, "annotation tracks share no common frame span", ErrorCode::InsufficientData);
    return {first, last};
}

AnnotationSet truncate(const AnnotationSet& set, double max_s)
{
    const auto [first, last] = common_span(set);
    const int limit = first + static_cast<int>(std::floor(max_s * set.fps + 1e-9)) - 1;
    if (limit >= last) return set;
    AnnotationSet out = set;
    for (auto& t : out.tracks) {
        const auto dense = densify(t, limit, limit);
        std::vector<Keyframe> kept;
        for (const auto& k : t.keyframes)
            if (k.frame < limit) kept.push_back(k);
        kept.push_back({limit, dense.front().x, dense.front().y});
        t.keyframes = std::move(kept);
    }
    return out;
}

DisplacementSeries annotation_displacement(const AnnotationSet& set)
{
    const auto [first, last] = common_span(set);
    std::vector<Trajectory> trajs;
    for (const auto& t : set.tracks) {
        Trajectory tr;
        tr.positions = densify(t, first, last);
        trajs.push_back(std::move(tr));
    }
    return aggregate_displacement(trajs, set.fps);
}

}  // namespace lipidflow
