#pragma once

#include <string>
#include <vector>

#include "diar/errors.hpp"

namespace diar {

// Boundary comparisons on the time axis. RTTM carries millisecond precision,
// so 1e-9 s is far below any representable difference.
inline constexpr double kTimeEps = 1e-9;

struct Segment {
    double start = 0.0;
    double end = 0.0;

    double duration() const { return end - start; }
    bool contains(double t) const { return start <= t && t < end; }
};

struct SpeakerTurn {
    Segment segment;
    std::string speaker;
};

// One recording's labeled timeline, the common currency for hypotheses and
// references. Kept normalized: turns sorted by (start, speaker), same-speaker
// overlapping or abutting turns merged. Distinct speakers may overlap.
struct Diarization {
    std::string recording_id;
    std::vector<SpeakerTurn> turns;

    std::vector<std::string> speakers() const;  // distinct labels, sorted
    bool empty() const { return turns.empty(); }
};

// Sorts and merges same-speaker turns that overlap or abut (gap <= kTimeEps).
// Positive gaps are never merged here; silence smoothing is a post-processing
// concern. Idempotent.
Diarization normalize(Diarization d);

// --- Interval-set utilities (lists sorted, pairwise disjoint) ---

std::vector<Segment> merge_segments(std::vector<Segment> segments);
std::vector<Segment> intersect_segments(const std::vector<Segment>& a,
                                        const std::vector<Segment>& b);
std::vector<Segment> unite_segments(const std::vector<Segment>& a,
                                    const std::vector<Segment>& b);
double total_duration(const std::vector<Segment>& segments);

// Per-speaker timeline of a normalized diarization, sorted by label.
std::vector<std::pair<std::string, std::vector<Segment>>> speaker_timelines(
    const Diarization& d);

// Regions where two or more speakers are simultaneously active.
std::vector<Segment> overlap_regions(const Diarization& d);

// --- RTTM ---

// Reads SPEAKER records (>= 9 whitespace-separated fields; start = field 4,
// duration = field 5, speaker = field 8). Lines starting with ';;' or '#'
// and blank lines are ignored. Returns one normalized Diarization per
// recording id, in first-appearance order. Throws ParseError with the line
// number on malformed lines or non-positive durations.
std::vector<Diarization> parse_rttm(const std::string& text);

// One 9-field line per turn, times with exactly 3 decimals, channel fixed to
// "1", "<NA>" placeholders, sorted by (recording_id, start, speaker).
std::string write_rttm(const std::vector<Diarization>& recordings);
std::string write_rttm(const Diarization& d);

std::vector<Diarization> read_rttm_file(const std::string& path);
void write_rttm_file(const std::string& path,
                     const std::vector<Diarization>& recordings);

}  // namespace diar
