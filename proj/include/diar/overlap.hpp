#pragma once

#include <utility>
#include <vector>

#include "diar/embedding.hpp"
#include "diar/timeline.hpp"
#include "diar/vbx.hpp"

namespace diar {

// Placement of clustering windows on the time axis: window i spans
// [i * win_shift, i * win_shift + win_len).
struct WindowGeometry {
    double win_len = 0.0;
    double win_shift = 0.0;
};

// Elementwise mean of single-dimension posterior tracks. All tracks must
// agree on recording id, frame shift and frame count.
FrameTrack fuse_posteriors(const std::vector<FrameTrack>& tracks);

// Thresholds a posterior track into segments. Frames with p >= threshold
// are active and maximal active runs become segments; gaps shorter than
// min_silence are then filled, and only after that are segments shorter
// than min_overlap dropped.
std::vector<Segment> posteriors_to_segments(const FrameTrack& t, double threshold,
                                            double min_silence, double min_overlap);

struct AssignReport {
    bool applied = false;  // false when d has fewer than two speakers
    int turns_added = 0;
};

// Ensures every overlap segment carries at least two active speakers. Where
// exactly one speaker is active, a second is added for exactly that segment:
// with q given, the non-active speaker with the highest mean posterior over
// the windows covering the segment (column j of q belongs to d.speakers()[j];
// a segment covering no window borrows the nearest one by center), otherwise
// the temporally nearest other speaker. Ties prefer the smaller label.
// Segments with zero or two-plus active speakers are left alone, and a
// diarization with fewer than two speakers comes back unchanged.
std::pair<Diarization, AssignReport> assign_overlap(const Diarization& d,
                                                    const std::vector<Segment>& overlaps,
                                                    const PosteriorMatrix* q,
                                                    const WindowGeometry& geometry);

}  // namespace diar
