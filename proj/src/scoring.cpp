#include "diar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "diar/hungarian.hpp"

namespace diar {

const std::string* LabelMapping::ref_for(const std::string& hyp_label) const {
    for (const auto& [hyp, ref] : pairs)
        if (hyp == hyp_label) return &ref;
    return nullptr;
}

namespace {

using Timelines = std::vector<std::pair<std::string, std::vector<Segment>>>;

// True if t lies inside one of the sorted disjoint segments.
bool covers(const std::vector<Segment>& segments, double t) {
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double v, const Segment& s) { return v < s.start; });
    if (it == segments.begin()) return false;
    --it;
    return t < it->end;
}

double overlap_duration(const std::vector<Segment>& a, const std::vector<Segment>& b) {
    return total_duration(intersect_segments(a, b));
}

std::vector<double> region_breakpoints(const Timelines& ref, const Timelines& hyp,
                                       const std::vector<Segment>& no_score) {
    std::vector<double> pts;
    auto add = [&pts](const std::vector<Segment>& segs) {
        for (const Segment& s : segs) {
            pts.push_back(s.start);
            pts.push_back(s.end);
        }
    };
    for (const auto& [label, segs] : ref) add(segs);
    for (const auto& [label, segs] : hyp) add(segs);
    add(no_score);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts)
        if (out.empty() || p - out.back() > kTimeEps) out.push_back(p);
    return out;
}

}  // namespace

LabelMapping optimal_mapping(const Diarization& ref, const Diarization& hyp) {
    Timelines ref_tl = speaker_timelines(ref);
    Timelines hyp_tl = speaker_timelines(hyp);
    LabelMapping mapping;
    if (ref_tl.empty() || hyp_tl.empty()) return mapping;

    // speaker_timelines returns labels sorted, which pins tie-breaking.
    std::vector<std::vector<double>> cost(hyp_tl.size(),
                                          std::vector<double>(ref_tl.size(), 0.0));
    for (size_t h = 0; h < hyp_tl.size(); ++h)
        for (size_t r = 0; r < ref_tl.size(); ++r)
            cost[h][r] = -overlap_duration(hyp_tl[h].second, ref_tl[r].second);

    std::vector<int> assignment = solve_assignment_min(cost);
    for (size_t h = 0; h < hyp_tl.size(); ++h) {
        int r = assignment[h];
        if (r >= 0 && -cost[h][r] > 0.0)
            mapping.pairs.emplace_back(hyp_tl[h].first, ref_tl[r].first);
    }
    return mapping;
}

DerReport der_with_mapping(const Diarization& ref, const Diarization& hyp,
                           const LabelMapping& mapping, double collar,
                           bool score_overlap) {
    if (collar < 0.0) throw std::invalid_argument("collar must be >= 0");

    Timelines ref_tl = speaker_timelines(ref);
    Timelines hyp_tl = speaker_timelines(hyp);

    // ref speaker index -> hyp timeline index of its mapped speaker, or -1.
    std::vector<int> mapped_hyp(ref_tl.size(), -1);
    for (const auto& [hyp_label, ref_label] : mapping.pairs) {
        for (size_t r = 0; r < ref_tl.size(); ++r) {
            if (ref_tl[r].first != ref_label) continue;
            for (size_t h = 0; h < hyp_tl.size(); ++h)
                if (hyp_tl[h].first == hyp_label) mapped_hyp[r] = static_cast<int>(h);
        }
    }

    std::vector<Segment> no_score;
    if (collar > 0.0) {
        const double half = collar / 2.0;
        for (const auto& t : normalize(ref).turns) {
            no_score.push_back({t.segment.start - half, t.segment.start + half});
            no_score.push_back({t.segment.end - half, t.segment.end + half});
        }
        no_score = merge_segments(std::move(no_score));
    }

    DerReport report;
    std::vector<double> pts = region_breakpoints(ref_tl, hyp_tl, no_score);
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const double dur = pts[i + 1] - pts[i];
        if (dur <= kTimeEps) continue;
        const double mid = pts[i] + dur / 2.0;
        if (covers(no_score, mid)) continue;

        int n_ref = 0, n_correct = 0;
        for (size_t r = 0; r < ref_tl.size(); ++r) {
            if (!covers(ref_tl[r].second, mid)) continue;
            ++n_ref;
            if (mapped_hyp[r] >= 0 && covers(hyp_tl[mapped_hyp[r]].second, mid))
                ++n_correct;
        }
        int n_hyp = 0;
        for (const auto& [label, segs] : hyp_tl)
            if (covers(segs, mid)) ++n_hyp;

        if (!score_overlap && n_ref >= 2) continue;
        if (n_ref == 0 && n_hyp == 0) continue;

        report.scored_time += dur * n_ref;
        report.missed += dur * std::max(0, n_ref - n_hyp);
        report.false_alarm += dur * std::max(0, n_hyp - n_ref);
        report.confusion += dur * (std::min(n_ref, n_hyp) - n_correct);
    }

    if (report.scored_time > 0.0) {
        report.der_defined = true;
        report.der =
            (report.missed + report.false_alarm + report.confusion) / report.scored_time;
    }
    return report;
}

DerReport der(const Diarization& ref, const Diarization& hyp, double collar,
              bool score_overlap) {
    return der_with_mapping(ref, hyp, optimal_mapping(ref, hyp), collar, score_overlap);
}

namespace {

// Per-reference-speaker 1 - Jaccard terms under the DER-optimal mapping.
std::vector<double> jer_values(const Diarization& ref, const Diarization& hyp) {
    LabelMapping mapping = optimal_mapping(ref, hyp);
    Timelines ref_tl = speaker_timelines(ref);
    Timelines hyp_tl = speaker_timelines(hyp);

    std::map<std::string, const std::vector<Segment>*> hyp_by_label;
    for (const auto& [label, segs] : hyp_tl) hyp_by_label[label] = &segs;
    std::map<std::string, std::string> ref_to_hyp;
    for (const auto& [hyp_label, ref_label] : mapping.pairs)
        ref_to_hyp[ref_label] = hyp_label;

    std::vector<double> out;
    for (const auto& [ref_label, ref_segs] : ref_tl) {
        auto it = ref_to_hyp.find(ref_label);
        if (it == ref_to_hyp.end()) {
            out.push_back(1.0);
            continue;
        }
        const std::vector<Segment>& hyp_segs = *hyp_by_label.at(it->second);
        double inter = overlap_duration(ref_segs, hyp_segs);
        double uni = total_duration(unite_segments(ref_segs, hyp_segs));
        out.push_back(uni > 0.0 ? 1.0 - inter / uni : 1.0);
    }
    return out;
}

}  // namespace

std::optional<double> jer(const Diarization& ref, const Diarization& hyp) {
    std::vector<double> values = jer_values(ref, hyp);
    if (values.empty()) return std::nullopt;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

OverlapPrf ovd_prf(const std::vector<Segment>& ref_overlap,
                   const std::vector<Segment>& hyp_overlap) {
    const double ref_dur = total_duration(ref_overlap);
    const double hyp_dur = total_duration(hyp_overlap);
    const double inter = total_duration(intersect_segments(ref_overlap, hyp_overlap));

    OverlapPrf prf;
    prf.precision = hyp_dur > 0.0 ? inter / hyp_dur : 0.0;
    prf.recall = ref_dur > 0.0 ? inter / ref_dur : 0.0;
    prf.f1 = (prf.precision + prf.recall) > 0.0
                 ? 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall)
                 : 0.0;
    return prf;
}

DerReport score_corpus(const std::vector<Diarization>& refs,
                       const std::vector<Diarization>& hyps, double collar,
                       bool score_overlap) {
    std::map<std::string, const Diarization*> hyp_by_id;
    for (const auto& h : hyps) hyp_by_id[h.recording_id] = &h;

    std::set<std::string> ref_ids;
    for (const auto& r : refs) ref_ids.insert(r.recording_id);
    for (const auto& h : hyps)
        if (!ref_ids.count(h.recording_id))
            throw ConfigError("hypothesis recording '" + h.recording_id +
                              "' not present in reference");

    DerReport total;
    std::vector<double> pooled_jer;
    for (const auto& ref : refs) {
        auto it = hyp_by_id.find(ref.recording_id);
        Diarization empty{ref.recording_id, {}};
        const Diarization& hyp = it != hyp_by_id.end() ? *it->second : empty;

        DerReport r = der(ref, hyp, collar, score_overlap);
        total.scored_time += r.scored_time;
        total.missed += r.missed;
        total.false_alarm += r.false_alarm;
        total.confusion += r.confusion;

        std::vector<double> jv = jer_values(ref, hyp);
        pooled_jer.insert(pooled_jer.end(), jv.begin(), jv.end());
    }
    if (total.scored_time > 0.0) {
        total.der_defined = true;
        total.der =
            (total.missed + total.false_alarm + total.confusion) / total.scored_time;
    }
    if (!pooled_jer.empty()) {
        double sum = 0.0;
        for (double v : pooled_jer) sum += v;
        total.jer = sum / static_cast<double>(pooled_jer.size());
    }
    return total;
}

}  // namespace diar
