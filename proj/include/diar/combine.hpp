#pragma once

#include <utility>
#include <vector>

#include "diar/scoring.hpp"
#include "diar/timeline.hpp"

namespace diar {

struct CombineReport {
    int chosen_n = 0;
    std::vector<int> used_channels;  // 1-based input positions
    std::vector<int> skipped_channels;
};

// Merges per-channel diarization results for one recording into a single
// hypothesis that may contain overlapping speech. The modal speaker count
// decides which channels participate (ties prefer the larger count). The
// first surviving channel fixes the speaker names; every later one is
// relabeled onto them via optimal_mapping and its per-speaker intervals are
// unioned in. A label the mapping leaves unmatched goes to the accumulated
// speaker it overlaps most, or is dropped when it overlaps none.
std::pair<Diarization, CombineReport> combine_channels(
    const std::vector<Diarization>& results);

}  // namespace diar
