#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diar/clustering.hpp"
#include "diar/combine.hpp"
#include "diar/config.hpp"
#include "diar/embedding.hpp"
#include "diar/scoring.hpp"
#include "diar/timeline.hpp"

namespace diar {

// Window-label runs to speaker turns. Cluster k becomes speaker "spk<k>",
// zero-padded so the labels sort numerically. A run's turn starts at its
// first window's start and ends where the window after the run starts (or at
// the final window's end), so overlapping windows never produce overlapping
// turns.
Diarization labels_to_diarization(const ClusterLabels& labels,
                                  const EmbeddingSequence& e);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct PipelineReport {
    std::string recording_id;
    std::vector<StageTiming> timings;
    CombineReport combine;
    bool ovd_applied = false;
    int overlap_turns_added = 0;
    Diarization hypothesis;
    std::optional<DerReport> score;
};

// Per-channel clustering and resegmentation, channel combination and the
// optional overlap stage, then scoring when a reference is configured.
// Writes ch<N>.rttm, combined.rttm, overlaps.rttm (when the overlap stage
// runs), final.rttm and report.txt into the configured output directory.
PipelineReport run_pipeline(const PipelineConfig& cfg);

}  // namespace diar
