#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diar/timeline.hpp"

namespace diar {

struct DerReport {
    double scored_time = 0.0;
    double missed = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;
    bool der_defined = false;   // false when scored_time = 0
    double der = 0.0;
    std::optional<double> jer;  // filled by score() / the CLI, not by der()
};

// Injective partial map from hypothesis labels to reference labels.
struct LabelMapping {
    std::vector<std::pair<std::string, std::string>> pairs;  // (hyp, ref)

    const std::string* ref_for(const std::string& hyp_label) const;
};

// The injective hyp->ref mapping maximizing total mapped time-overlap
// (equivalently minimizing confusion), by optimal assignment on the pairwise
// speaker-overlap duration matrix. Labels are processed in lexicographic
// order so tie cases resolve deterministically. Zero-overlap pairs are left
// unmapped.
LabelMapping optimal_mapping(const Diarization& ref, const Diarization& hyp);

// Exact interval-arithmetic DER. collar/2 on each side of every reference
// turn boundary is excluded from scoring. Within scored regions the per-region
// speaker counts are matched: correct = reference speakers whose mapped
// hypothesis speaker is active, missed = max(0, Nref-Nhyp), false alarm =
// max(0, Nhyp-Nref), confusion = min(Nref, Nhyp) - correct, each weighted by
// region duration. With score_overlap=false, regions with two or more
// concurrent reference speakers are excluded entirely.
DerReport der(const Diarization& ref, const Diarization& hyp, double collar = 0.25,
              bool score_overlap = true);

// Same computation under a caller-supplied mapping.
DerReport der_with_mapping(const Diarization& ref, const Diarization& hyp,
                           const LabelMapping& mapping, double collar = 0.25,
                           bool score_overlap = true);

// Mean over reference speakers of 1 - Jaccard overlap with the DER-optimally
// mapped hypothesis speaker; unmapped reference speakers score 1. Empty
// reference -> nullopt.
std::optional<double> jer(const Diarization& ref, const Diarization& hyp);

struct OverlapPrf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Duration-based precision/recall/F1 on normalized segment lists. Empty
// hypothesis -> precision 0; empty reference -> recall 0.
OverlapPrf ovd_prf(const std::vector<Segment>& ref_overlap,
                   const std::vector<Segment>& hyp_overlap);

// Corpus-level aggregate: durations summed across recordings (matched by
// recording id; recordings absent from hyp score as empty), DER from the
// pooled totals, JER as the mean over all reference speakers of all
// recordings. Hypothesis recordings absent from the reference are an error.
DerReport score_corpus(const std::vector<Diarization>& refs,
                       const std::vector<Diarization>& hyps, double collar = 0.25,
                       bool score_overlap = true);

}  // namespace diar
