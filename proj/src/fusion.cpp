#include "diar/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace diar {

namespace {

void check_same_recording(const std::vector<Diarization>& systems,
                          const char* where) {
    for (const Diarization& d : systems)
        if (d.recording_id != systems.front().recording_id)
            throw std::invalid_argument(std::string(where) +
                                        ": recording id mismatch");
}

void check_weights(const SystemWeights& w, size_t n_systems, const char* where) {
    if (w.weights.size() != n_systems)
        throw std::invalid_argument(std::string(where) +
                                    ": one weight per system required");
    double sum = 0.0;
    for (double v : w.weights) {
        if (v <= 0.0)
            throw std::invalid_argument(std::string(where) +
                                        ": weights must be positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(where) +
                                    ": weights must sum to 1");
}

}  // namespace

SystemWeights rank_systems(const std::vector<Diarization>& systems,
                           double exponent) {
    const size_t n = systems.size();
    if (n < 2) throw std::invalid_argument("rank_systems: need at least 2 systems");
    check_same_recording(systems, "rank_systems");

    std::vector<double> mean_der(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            DerReport r = der(systems[j], systems[i], 0.0, true);
            total += r.der_defined ? r.der : 0.0;
        }
        mean_der[i] = total / static_cast<double>(n - 1);
    }

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return mean_der[a] < mean_der[b];
    });

    // Fractional ranks: equal scores share the mean of their positions.
    std::vector<double> rank(n, 0.0);
    size_t pos = 0;
    while (pos < n) {
        size_t end = pos;
        while (end + 1 < n &&
               std::abs(mean_der[order[end + 1]] - mean_der[order[pos]]) <= 1e-12)
            ++end;
        double shared = 0.5 * static_cast<double>(pos + 1 + end + 1);
        for (size_t k = pos; k <= end; ++k) rank[order[k]] = shared;
        pos = end + 1;
    }

    SystemWeights w;
    w.weights.resize(n);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        w.weights[i] = std::pow(rank[i], exponent);
        sum += w.weights[i];
    }
    for (double& v : w.weights) v /= sum;
    return w;
}

std::vector<Diarization> map_labels_across_systems(
    const std::vector<Diarization>& systems, const SystemWeights& w) {
    const size_t n = systems.size();
    if (n < 2)
        throw std::invalid_argument(
            "map_labels_across_systems: need at least 2 systems");
    check_same_recording(systems, "map_labels_across_systems");
    check_weights(w, n, "map_labels_across_systems");

    size_t anchor = 0;
    for (size_t i = 1; i < n; ++i)
        if (w.weights[i] > w.weights[anchor]) anchor = i;

    std::set<std::string> used;
    for (const Diarization& d : systems)
        for (const std::string& s : d.speakers()) used.insert(s);

    std::vector<Diarization> out = systems;
    int fresh_counter = 0;
    for (size_t i = 0; i < n; ++i) {
        if (i == anchor) continue;
        LabelMapping mapping = optimal_mapping(systems[anchor], systems[i]);
        std::map<std::string, std::string> rename;
        for (const std::string& label : systems[i].speakers()) {
            if (const std::string* ref = mapping.ref_for(label)) {
                rename[label] = *ref;
            } else {
                std::string fresh;
                do {
                    fresh = "extra" + std::to_string(++fresh_counter);
                } while (used.count(fresh));
                used.insert(fresh);
                rename[label] = fresh;
            }
        }
        for (auto& turn : out[i].turns) turn.speaker = rename.at(turn.speaker);
        out[i] = normalize(std::move(out[i]));
    }
    return out;
}

Diarization doverlap_vote(const std::vector<Diarization>& mapped,
                          const SystemWeights& w, VoteMode mode) {
    if (mapped.empty())
        throw std::invalid_argument("doverlap_vote: no systems");
    check_same_recording(mapped, "doverlap_vote");
    check_weights(w, mapped.size(), "doverlap_vote");

    std::vector<double> bounds;
    for (const Diarization& d : mapped) {
        for (const auto& turn : d.turns) {
            bounds.push_back(turn.segment.start);
            bounds.push_back(turn.segment.end);
        }
    }
    std::sort(bounds.begin(), bounds.end());
    std::vector<double> edges;
    for (double b : bounds)
        if (edges.empty() || b - edges.back() > kTimeEps) edges.push_back(b);

    Diarization out;
    out.recording_id = mapped.front().recording_id;
    for (size_t k = 0; k + 1 < edges.size(); ++k) {
        const Segment region{edges[k], edges[k + 1]};
        const double mid = 0.5 * (region.start + region.end);

        std::map<std::string, double> support;
        for (size_t i = 0; i < mapped.size(); ++i) {
            std::set<std::string> voted;
            for (const auto& turn : mapped[i].turns)
                if (turn.segment.contains(mid)) voted.insert(turn.speaker);
            for (const std::string& s : voted) support[s] += w.weights[i];
        }
        if (support.empty()) continue;

        std::vector<std::string> emitted;
        if (mode == VoteMode::modified) {
            for (const auto& [label, v] : support)
                if (v > 0.5) emitted.push_back(label);
        } else {
            double total = 0.0;
            for (const auto& [label, v] : support) total += v;
            size_t n_emit = static_cast<size_t>(std::floor(total + 0.5));
            n_emit = std::min(n_emit, support.size());
            std::vector<std::pair<std::string, double>> ranked(support.begin(),
                                                               support.end());
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
            for (size_t t = 0; t < n_emit; ++t) emitted.push_back(ranked[t].first);
        }
        for (const std::string& s : emitted) out.turns.push_back({region, s});
    }
    return normalize(std::move(out));
}

}  // namespace diar
