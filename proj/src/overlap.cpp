#include "diar/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace diar {

namespace {

double gap_between(const Segment& a, const Segment& b) {
    if (a.end <= b.start) return b.start - a.end;
    if (b.end <= a.start) return a.start - b.end;
    return 0.0;
}

double overlap_with(const std::vector<Segment>& parts, const Segment& s) {
    double total = 0.0;
    for (const Segment& p : parts) {
        double lo = std::max(p.start, s.start);
        double hi = std::min(p.end, s.end);
        if (hi > lo) total += hi - lo;
    }
    return total;
}

}  // namespace

FrameTrack fuse_posteriors(const std::vector<FrameTrack>& tracks) {
    if (tracks.empty()) throw std::invalid_argument("fuse_posteriors: no tracks");
    const FrameTrack& first = tracks.front();
    for (const FrameTrack& t : tracks) {
        if (t.dim != 1 || t.frames.cols() != 1)
            throw std::invalid_argument("fuse_posteriors: tracks must have dim 1");
        if (t.recording_id != first.recording_id)
            throw std::invalid_argument("fuse_posteriors: recording id mismatch");
        if (std::abs(t.frame_shift - first.frame_shift) > kTimeEps)
            throw std::invalid_argument("fuse_posteriors: frame shift mismatch");
        if (t.frames.rows() != first.frames.rows())
            throw std::invalid_argument("fuse_posteriors: frame count mismatch");
    }
    FrameTrack out = first;
    for (size_t i = 1; i < tracks.size(); ++i) out.frames += tracks[i].frames;
    out.frames /= static_cast<double>(tracks.size());
    return out;
}

std::vector<Segment> posteriors_to_segments(const FrameTrack& t, double threshold,
                                            double min_silence, double min_overlap) {
    if (t.dim != 1 || t.frames.cols() != 1)
        throw std::invalid_argument("posteriors_to_segments: track must have dim 1");
    const long n = t.frames.rows();
    std::vector<Segment> merged;
    long run_start = -1;
    for (long i = 0; i <= n; ++i) {
        bool active = i < n && t.frames(i, 0) >= threshold;
        if (active && run_start < 0) run_start = i;
        if (!active && run_start >= 0) {
            Segment run{run_start * t.frame_shift, i * t.frame_shift};
            if (!merged.empty() && run.start - merged.back().end < min_silence - kTimeEps)
                merged.back().end = run.end;
            else
                merged.push_back(run);
            run_start = -1;
        }
    }
    std::vector<Segment> out;
    for (const Segment& s : merged)
        if (s.duration() >= min_overlap - kTimeEps) out.push_back(s);
    return out;
}

std::pair<Diarization, AssignReport> assign_overlap(const Diarization& d,
                                                    const std::vector<Segment>& overlaps,
                                                    const PosteriorMatrix* q,
                                                    const WindowGeometry& geometry) {
    AssignReport report;
    const std::vector<std::string> speakers = d.speakers();
    const long n_spk = static_cast<long>(speakers.size());
    if (n_spk < 2) return {d, report};
    report.applied = true;
    if (q) {
        if (q->q.cols() != n_spk)
            throw std::invalid_argument(
                "assign_overlap: q columns must match the speaker count");
        if (q->q.rows() < 1 || geometry.win_len <= 0.0 || geometry.win_shift <= 0.0)
            throw std::invalid_argument("assign_overlap: invalid window geometry");
    }

    auto timelines = speaker_timelines(d);
    Diarization out = d;
    for (const Segment& seg : overlaps) {
        if (seg.duration() <= kTimeEps) continue;
        std::vector<long> active;
        for (long s = 0; s < n_spk; ++s)
            if (overlap_with(timelines[s].second, seg) > kTimeEps) active.push_back(s);
        if (active.size() != 1) continue;
        const long lone = active.front();

        long add = -1;
        if (q) {
            const long n_win = q->q.rows();
            std::vector<long> covering;
            for (long i = 0; i < n_win; ++i) {
                double lo = i * geometry.win_shift;
                double hi = lo + geometry.win_len;
                if (lo < seg.end - kTimeEps && hi > seg.start + kTimeEps)
                    covering.push_back(i);
            }
            if (covering.empty()) {
                double mid = 0.5 * (seg.start + seg.end);
                long nearest = 0;
                double best = std::numeric_limits<double>::infinity();
                for (long i = 0; i < n_win; ++i) {
                    double center = i * geometry.win_shift + 0.5 * geometry.win_len;
                    double dist = std::abs(center - mid);
                    if (dist < best) {
                        best = dist;
                        nearest = i;
                    }
                }
                covering.push_back(nearest);
            }
            double best_mean = -std::numeric_limits<double>::infinity();
            for (long s = 0; s < n_spk; ++s) {
                if (s == lone) continue;
                double mean = 0.0;
                for (long i : covering) mean += q->q(i, s);
                mean /= static_cast<double>(covering.size());
                if (mean > best_mean) {
                    best_mean = mean;
                    add = s;
                }
            }
        } else {
            double best_dist = std::numeric_limits<double>::infinity();
            for (long s = 0; s < n_spk; ++s) {
                if (s == lone) continue;
                double dist = std::numeric_limits<double>::infinity();
                for (const Segment& turn : timelines[s].second)
                    dist = std::min(dist, gap_between(turn, seg));
                if (dist < best_dist - kTimeEps) {
                    best_dist = dist;
                    add = s;
                }
            }
        }
        if (add >= 0) {
            out.turns.push_back({seg, speakers[add]});
            ++report.turns_added;
        }
    }
    return {normalize(std::move(out)), report};
}

}  // namespace diar
