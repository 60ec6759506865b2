#include "diar/sot.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "diar/errors.hpp"

namespace diar {

namespace {

double parse_time(const std::string& field, int line) {
    try {
        size_t used = 0;
        double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "bad time value '" + field + "'");
    }
}

}  // namespace

std::vector<std::string> serialize_sot(const std::vector<Utterance>& utts) {
    if (utts.empty()) throw std::invalid_argument("serialize_sot: no utterances");
    for (const Utterance& u : utts) {
        if (!(u.end > u.start))
            throw std::invalid_argument("serialize_sot: utterance must end after it starts");
        if (u.tokens.empty())
            throw std::invalid_argument("serialize_sot: utterance without tokens");
    }

    std::vector<size_t> order(utts.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (utts[a].start != utts[b].start) return utts[a].start < utts[b].start;
        if (utts[a].speaker != utts[b].speaker) return utts[a].speaker < utts[b].speaker;
        return a < b;
    });

    std::vector<std::string> out;
    for (size_t k = 0; k < order.size(); ++k) {
        if (k > 0) out.push_back("<sc>");
        const Utterance& u = utts[order[k]];
        out.insert(out.end(), u.tokens.begin(), u.tokens.end());
    }
    out.push_back("<eos>");
    return out;
}

std::vector<std::vector<Utterance>> parse_sot_tsv(const std::string& text) {
    std::vector<std::vector<Utterance>> groups;
    std::vector<Utterance> current;
    std::istringstream lines(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (!raw.empty() && raw[0] == '#') continue;
        std::istringstream fields(raw);
        std::string start_s, end_s, speaker, token;
        if (!(fields >> start_s)) {
            if (!current.empty()) groups.push_back(std::move(current));
            current.clear();
            continue;
        }
        if (!(fields >> end_s >> speaker))
            throw ParseError(line_no, "expected <start> <end> <speaker> <token>...");
        Utterance u;
        u.start = parse_time(start_s, line_no);
        u.end = parse_time(end_s, line_no);
        u.speaker = speaker;
        while (fields >> token) u.tokens.push_back(token);
        if (u.tokens.empty()) throw ParseError(line_no, "utterance without tokens");
        if (!(u.end > u.start))
            throw ParseError(line_no, "utterance must end after it starts");
        current.push_back(std::move(u));
    }
    if (!current.empty()) groups.push_back(std::move(current));
    return groups;
}

}  // namespace diar
