#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lipidflow/segment.hpp"
#include "lipidflow/track.hpp"

namespace lipidflow {

struct Keyframe {
    int frame = 0;
    double x = 0.0;
    double y = 0.0;
};

/// Sparse manual track; frames are inter-blink-relative and strictly increasing.
struct AnnotationTrack {
    std::vector<Keyframe> keyframes;
};

struct AnnotationSet {
    std::vector<AnnotationTrack> tracks;
    int interblink_id = 0;
    double fps = 30.0;
};

/// {"interblink": id, "fps": f, "tracks": [{"points": [[frame, x, y], ...]}, ...]}
AnnotationSet parse_annotations(const std::string& json_text);
AnnotationSet load_annotations(const std::filesystem::path& path);

/// Linear interpolation over frames [first, last]; no extrapolation.
std::vector<Point2> densify(const AnnotationTrack& track, int first, int last);

/// Frame span shared by every track.
std::pair<int, int> common_span(const AnnotationSet& set);

/// Drops keyframes beyond `max_s` seconds from the span start, interpolating a closing keyframe.
AnnotationSet truncate(const AnnotationSet& set, double max_s);

/// Densified tracks aggregated like computed trajectories (median, upward-positive dy).
DisplacementSeries annotation_displacement(const AnnotationSet& set);

}  // namespace lipidflow
