#pragma once

#include <vector>

#include "lipidflow/blink.hpp"
#include "lipidflow/video_io.hpp"

namespace lipidflow {

struct PupilCircle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
};

struct Offset {
    int dx = 0;
    int dy = 0;
    bool operator==(const Offset&) const = default;
};

struct AlignedInterBlink {
    InterBlink range;
    VideoSequence frames;
    std::vector<Offset> offsets;
    std::vector<PupilCircle> pupil;
};

/// Darkest large blob: blur, dark-quantile core, 3x3 open, largest 4-connected component,
/// then a re-threshold halfway between the core and its surround. Throws PupilNotFound.
PupilCircle locate_pupil(const Frame& frame, double dark_percentile = 0.05);

/// Integer shift with edge replication: out(x, y) = in(x - dx, y - dy).
RasterU8 translate(const RasterU8& img, Offset offset);

/// Aligns every frame of `ib` to the pupil center of its first frame.
AlignedInterBlink align_interblink(const VideoSequence& video, const InterBlink& ib,
                                   double dark_percentile = 0.05);

}  // namespace lipidflow
