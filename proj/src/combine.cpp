#include "diar/combine.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace diar {

namespace {

std::vector<Segment> speaker_segments(const Diarization& d, const std::string& spk) {
    std::vector<Segment> out;
    for (const SpeakerTurn& t : d.turns)
        if (t.speaker == spk) out.push_back(t.segment);
    return out;
}

double intersection_duration(const std::vector<Segment>& a,
                             const std::vector<Segment>& b) {
    double total = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double lo = std::max(a[i].start, b[j].start);
        double hi = std::min(a[i].end, b[j].end);
        if (hi > lo) total += hi - lo;
        if (a[i].end < b[j].end)
            ++i;
        else
            ++j;
    }
    return total;
}

}  // namespace

std::pair<Diarization, CombineReport> combine_channels(
    const std::vector<Diarization>& results) {
    if (results.empty())
        throw std::invalid_argument("no channel results to combine");
    if (results.size() > 8)
        throw std::invalid_argument("more than 8 channel results");
    for (size_t c = 1; c < results.size(); ++c)
        if (results[c].recording_id != results[0].recording_id)
            throw std::invalid_argument(
                "channel results disagree on the recording id");

    std::vector<Diarization> norm;
    norm.reserve(results.size());
    for (const Diarization& d : results) norm.push_back(normalize(d));

    std::vector<int> counts;
    counts.reserve(norm.size());
    for (const Diarization& d : norm)
        counts.push_back(static_cast<int>(d.speakers().size()));

    std::map<int, int> freq;
    for (int c : counts) ++freq[c];
    int chosen_n = 0, best_freq = -1;
    for (const auto& [n, f] : freq)
        if (f >= best_freq) {  // ascending keys, so ties land on the larger count
            chosen_n = n;
            best_freq = f;
        }

    CombineReport report;
    report.chosen_n = chosen_n;

    Diarization acc;
    acc.recording_id = results[0].recording_id;
    bool seeded = false;
    for (size_t c = 0; c < norm.size(); ++c) {
        int channel = static_cast<int>(c) + 1;
        if (counts[c] != chosen_n) {
            report.skipped_channels.push_back(channel);
            continue;
        }
        report.used_channels.push_back(channel);
        if (!seeded) {
            acc = norm[c];
            seeded = true;
            continue;
        }

        LabelMapping mapping = optimal_mapping(acc, norm[c]);
        std::vector<SpeakerTurn> added;
        for (const std::string& spk : norm[c].speakers()) {
            std::string target;
            if (const std::string* mapped = mapping.ref_for(spk)) {
                target = *mapped;
            } else {
                std::vector<Segment> mine = speaker_segments(norm[c], spk);
                double best = 0.0;
                for (const std::string& a : acc.speakers()) {
                    double ov = intersection_duration(mine, speaker_segments(acc, a));
                    if (ov > best + kTimeEps) {
                        best = ov;
                        target = a;
                    }
                }
                if (target.empty()) continue;  // overlaps nothing: dropped
            }
            for (const SpeakerTurn& t : norm[c].turns)
                if (t.speaker == spk) added.push_back({t.segment, target});
        }
        for (const SpeakerTurn& t : added) acc.turns.push_back(t);
        acc = normalize(acc);
    }
    return {acc, report};
}

}  // namespace diar
