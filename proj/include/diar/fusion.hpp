#pragma once

#include <string>
#include <vector>

#include "diar/scoring.hpp"
#include "diar/timeline.hpp"

namespace diar {

struct SystemWeights {
    std::vector<double> weights;  // all positive, summing to 1
};

enum class VoteMode { original, modified };

// Rank-based voting weights. Each system is scored by its mean DER against
// every other system taken as the reference (collar 0, overlapped speech
// scored) and ranked ascending; tied systems share the mean of their tied
// ranks. weight_i is rank_i^exponent, normalized to sum 1.
SystemWeights rank_systems(const std::vector<Diarization>& systems,
                           double exponent = -0.5);

// Brings every system into one label space. The highest-weight system (ties:
// earliest) anchors; each other system is relabeled onto it via
// optimal_mapping, and labels the mapping leaves unmatched receive fresh
// labels unused by any input system.
std::vector<Diarization> map_labels_across_systems(
    const std::vector<Diarization>& systems, const SystemWeights& w);

// Weighted label voting over the regions bounded by every turn edge of every
// system. Per region each speaker's support is the summed weight of the
// systems voting for it; mode original emits the round(summed support)
// strongest speakers (round half up, ties by label order), mode modified
// emits exactly those with support > 0.5. Adjacent regions emitting the same
// speaker merge.
Diarization doverlap_vote(const std::vector<Diarization>& mapped,
                          const SystemWeights& w, VoteMode mode);

}  // namespace diar
