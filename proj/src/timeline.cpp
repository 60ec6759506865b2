#include "diar/timeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace diar {

std::vector<std::string> Diarization::speakers() const {
    std::vector<std::string> out;
    for (const auto& t : turns) out.push_back(t.speaker);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Diarization normalize(Diarization d) {
    std::map<std::string, std::vector<Segment>> per_speaker;
    for (auto& t : d.turns) per_speaker[t.speaker].push_back(t.segment);

    std::vector<SpeakerTurn> out;
    for (auto& [speaker, segs] : per_speaker) {
        for (const Segment& s : merge_segments(std::move(segs)))
            out.push_back({s, speaker});
    }
    std::sort(out.begin(), out.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
        if (a.segment.start != b.segment.start) return a.segment.start < b.segment.start;
        return a.speaker < b.speaker;
    });
    d.turns = std::move(out);
    return d;
}

std::vector<Segment> merge_segments(std::vector<Segment> segments) {
    std::sort(segments.begin(), segments.end(),
              [](const Segment& a, const Segment& b) { return a.start < b.start; });
    std::vector<Segment> out;
    for (const Segment& s : segments) {
        if (!out.empty() && s.start <= out.back().end + kTimeEps)
            out.back().end = std::max(out.back().end, s.end);
        else
            out.push_back(s);
    }
    return out;
}

std::vector<Segment> intersect_segments(const std::vector<Segment>& a,
                                        const std::vector<Segment>& b) {
    std::vector<Segment> out;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double lo = std::max(a[i].start, b[j].start);
        double hi = std::min(a[i].end, b[j].end);
        if (hi - lo > kTimeEps) out.push_back({lo, hi});
        if (a[i].end < b[j].end)
            ++i;
        else
            ++j;
    }
    return out;
}

std::vector<Segment> unite_segments(const std::vector<Segment>& a,
                                    const std::vector<Segment>& b) {
    std::vector<Segment> all(a);
    all.insert(all.end(), b.begin(), b.end());
    return merge_segments(std::move(all));
}

double total_duration(const std::vector<Segment>& segments) {
    double sum = 0.0;
    for (const Segment& s : segments) sum += s.duration();
    return sum;
}

std::vector<std::pair<std::string, std::vector<Segment>>> speaker_timelines(
    const Diarization& d) {
    std::map<std::string, std::vector<Segment>> per_speaker;
    for (const auto& t : d.turns) per_speaker[t.speaker].push_back(t.segment);
    std::vector<std::pair<std::string, std::vector<Segment>>> out;
    for (auto& [speaker, segs] : per_speaker)
        out.emplace_back(speaker, merge_segments(std::move(segs)));
    return out;
}

std::vector<Segment> overlap_regions(const Diarization& d) {
    // Sweep over boundary events counting concurrently active speakers.
    std::vector<std::pair<double, int>> events;
    for (const auto& t : d.turns) {
        events.emplace_back(t.segment.start, +1);
        events.emplace_back(t.segment.end, -1);
    }
    std::sort(events.begin(), events.end());
    std::vector<Segment> out;
    int active = 0;
    double open = 0.0;
    for (size_t i = 0; i < events.size(); ++i) {
        int before = active;
        active += events[i].second;
        if (before < 2 && active >= 2) open = events[i].first;
        if (before >= 2 && active < 2 && events[i].first - open > kTimeEps)
            out.push_back({open, events[i].first});
    }
    return merge_segments(std::move(out));
}

namespace {

bool parse_double(const std::string& s, double* out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, *out);
    return ec == std::errc() && ptr == end && std::isfinite(*out);
}

bool is_comment(const std::string& line) {
    return line.rfind(";;", 0) == 0 || line.rfind("#", 0) == 0;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream iss(line);
    std::string f;
    while (iss >> f) fields.push_back(f);
    return fields;
}

}  // namespace

std::vector<Diarization> parse_rttm(const std::string& text) {
    std::vector<Diarization> recordings;
    std::map<std::string, size_t> index_of;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> fields = split_fields(line);
        if (fields.empty() || is_comment(line)) continue;
        if (fields.size() < 9)
            throw ParseError(lineno, "RTTM line has " + std::to_string(fields.size()) +
                                         " fields, expected at least 9");
        if (fields[0] != "SPEAKER")
            throw ParseError(lineno, "expected SPEAKER record, got '" + fields[0] + "'");

        double start = 0.0, dur = 0.0;
        if (!parse_double(fields[3], &start))
            throw ParseError(lineno, "bad start time '" + fields[3] + "'");
        if (!parse_double(fields[4], &dur))
            throw ParseError(lineno, "bad duration '" + fields[4] + "'");
        if (start < 0.0) throw ParseError(lineno, "negative start time");
        if (dur <= 0.0) throw ParseError(lineno, "non-positive duration");

        const std::string& rec = fields[1];
        auto [it, inserted] = index_of.try_emplace(rec, recordings.size());
        if (inserted) recordings.push_back(Diarization{rec, {}});
        recordings[it->second].turns.push_back({{start, start + dur}, fields[7]});
    }
    for (auto& d : recordings) d = normalize(std::move(d));
    return recordings;
}

std::string write_rttm(const std::vector<Diarization>& recordings) {
    std::vector<const Diarization*> sorted;
    for (const auto& d : recordings) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(), [](const Diarization* a, const Diarization* b) {
        return a->recording_id < b->recording_id;
    });

    std::string out;
    char buf[64];
    for (const Diarization* d : sorted) {
        Diarization norm = normalize(*d);
        for (const auto& t : norm.turns) {
            out += "SPEAKER " + norm.recording_id + " 1 ";
            std::snprintf(buf, sizeof(buf), "%.3f %.3f", t.segment.start,
                          t.segment.duration());
            out += buf;
            out += " <NA> <NA> " + t.speaker + " <NA> <NA>\n";
        }
    }
    return out;
}

std::string write_rttm(const Diarization& d) {
    return write_rttm(std::vector<Diarization>{d});
}

std::vector<Diarization> read_rttm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open RTTM file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_rttm(ss.str());
}

void write_rttm_file(const std::string& path, const std::vector<Diarization>& recordings) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write RTTM file: " + path);
    out << write_rttm(recordings);
}

}  // namespace diar
