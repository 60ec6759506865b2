#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "diar/overlap.hpp"
#include "doctest.h"
#include "oracles.hpp"

using diar::Diarization;
using diar::FrameTrack;
using diar::PosteriorMatrix;
using diar::Segment;
using diar::WindowGeometry;

namespace {

FrameTrack track(const std::vector<double>& posteriors, double shift,
                 const std::string& id = "R1") {
    FrameTrack t;
    t.recording_id = id;
    t.frame_shift = shift;
    t.dim = 1;
    t.frames.resize(static_cast<long>(posteriors.size()), 1);
    for (size_t i = 0; i < posteriors.size(); ++i)
        t.frames(static_cast<long>(i), 0) = posteriors[i];
    return t;
}

Diarization make(const std::string& id,
                 const std::vector<std::tuple<double, double, std::string>>& turns) {
    Diarization d;
    d.recording_id = id;
    for (const auto& [s, e, spk] : turns) d.turns.push_back({{s, e}, spk});
    return diar::normalize(d);
}

bool same_turns(const Diarization& a, const Diarization& b) {
    if (a.turns.size() != b.turns.size()) return false;
    for (size_t i = 0; i < a.turns.size(); ++i) {
        if (a.turns[i].speaker != b.turns[i].speaker) return false;
        if (std::abs(a.turns[i].segment.start - b.turns[i].segment.start) > 1e-9)
            return false;
        if (std::abs(a.turns[i].segment.end - b.turns[i].segment.end) > 1e-9)
            return false;
    }
    return true;
}

double speaker_time(const Diarization& d, const std::string& spk) {
    for (const auto& [label, segs] : diar::speaker_timelines(d))
        if (label == spk) return diar::total_duration(segs);
    return 0.0;
}

bool covered_by_speaker(const Diarization& d, const Segment& s, const std::string& spk) {
    for (const auto& [label, segs] : diar::speaker_timelines(d)) {
        if (label != spk) continue;
        for (const Segment& c : segs)
            if (c.start <= s.start + diar::kTimeEps && s.end <= c.end + diar::kTimeEps)
                return true;
    }
    return false;
}

}  // namespace

TEST_CASE("fuse_posteriors: single track passes through untouched") {
    FrameTrack t = track({0.1, 0.9, 0.5, 0.0}, 0.016);
    FrameTrack fused = diar::fuse_posteriors({t});
    CHECK(fused.recording_id == t.recording_id);
    CHECK(fused.frame_shift == doctest::Approx(t.frame_shift));
    CHECK(fused.dim == 1);
    REQUIRE(fused.frames.rows() == t.frames.rows());
    for (long i = 0; i < t.frames.rows(); ++i)
        CHECK(fused.frames(i, 0) == doctest::Approx(t.frames(i, 0)).epsilon(1e-15));
}

TEST_CASE("fuse_posteriors: two tracks average elementwise") {
    FrameTrack a = track({0.4, 0.8}, 0.016);
    FrameTrack b = track({0.6, 0.2}, 0.016);
    FrameTrack fused = diar::fuse_posteriors({a, b});
    CHECK(fused.frames(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fused.frames(1, 0) == doctest::Approx(0.5).epsilon(1e-12));

    FrameTrack c = track({0.4, 0.6}, 0.016);
    FrameTrack d = track({0.8, 0.2}, 0.016);
    FrameTrack fused2 = diar::fuse_posteriors({c, d});
    CHECK(fused2.frames(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(fused2.frames(1, 0) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("fuse_posteriors: mismatched tracks are rejected") {
    FrameTrack ten = track(std::vector<double>(10, 0.5), 0.016);
    FrameTrack eleven = track(std::vector<double>(11, 0.5), 0.016);
    CHECK_THROWS_AS((void)diar::fuse_posteriors({ten, eleven}), std::invalid_argument);

    FrameTrack other_shift = track(std::vector<double>(10, 0.5), 0.032);
    CHECK_THROWS_AS((void)diar::fuse_posteriors({ten, other_shift}),
                    std::invalid_argument);

    FrameTrack other_id = track(std::vector<double>(10, 0.5), 0.016, "R2");
    CHECK_THROWS_AS((void)diar::fuse_posteriors({ten, other_id}), std::invalid_argument);

    CHECK_THROWS_AS((void)diar::fuse_posteriors({}), std::invalid_argument);

    FrameTrack wide = ten;
    wide.dim = 2;
    wide.frames.resize(10, 2);
    wide.frames.setConstant(0.5);
    CHECK_THROWS_AS((void)diar::fuse_posteriors({wide}), std::invalid_argument);
}

TEST_CASE("posteriors_to_segments: silence in, silence out") {
    FrameTrack zeros = track(std::vector<double>(200, 0.0), 0.016);
    CHECK(diar::posteriors_to_segments(zeros, 0.5, 0.3, 0.1).empty());
    FrameTrack empty = track({}, 0.016);
    CHECK(diar::posteriors_to_segments(empty, 0.5, 0.3, 0.1).empty());
}

TEST_CASE("posteriors_to_segments: a 96 ms run falls to the minimum duration") {
    std::vector<double> p(30, 0.0);
    for (int i = 0; i <= 11; ++i) p[i] = 1.0;
    FrameTrack t = track(p, 0.008);
    CHECK(diar::posteriors_to_segments(t, 0.5, 0.3, 0.1).empty());

    // One more active frame reaches 104 ms and survives.
    p[12] = 1.0;
    FrameTrack longer = track(p, 0.008);
    auto segs = diar::posteriors_to_segments(longer, 0.5, 0.3, 0.1);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].start == doctest::Approx(0.0));
    CHECK(segs[0].end == doctest::Approx(0.104).epsilon(1e-12));
}

TEST_CASE("posteriors_to_segments: a 200 ms gap is filled") {
    std::vector<double> p(10, 1.0);
    p[5] = 0.0;
    p[6] = 0.0;
    FrameTrack t = track(p, 0.1);
    auto segs = diar::posteriors_to_segments(t, 0.5, 0.3, 0.1);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].start == doctest::Approx(0.0));
    CHECK(segs[0].end == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posteriors_to_segments: gaps fill before short segments drop") {
    // Two 80 ms runs around a 200 ms gap: each alone is below the 100 ms
    // minimum, but the filled gap joins them into one 360 ms segment.
    std::vector<double> p(9, 0.0);
    p[0] = p[1] = 1.0;
    p[7] = p[8] = 1.0;
    FrameTrack t = track(p, 0.04);
    auto segs = diar::posteriors_to_segments(t, 0.5, 0.3, 0.1);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].start == doctest::Approx(0.0));
    CHECK(segs[0].end == doctest::Approx(0.36).epsilon(1e-12));
}

TEST_CASE("posteriors_to_segments: boundary durations are kept, boundary gaps stay") {
    // Segment of exactly 100 ms, gap of exactly 300 ms.
    std::vector<double> p = {1.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    FrameTrack t = track(p, 0.1);
    auto segs = diar::posteriors_to_segments(t, 0.5, 0.3, 0.1);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].start == doctest::Approx(0.0));
    CHECK(segs[0].end == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(segs[1].start == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(segs[1].end == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("posteriors_to_segments: threshold comparison is inclusive") {
    FrameTrack at = track(std::vector<double>(10, 0.5), 0.1);
    auto segs = diar::posteriors_to_segments(at, 0.5, 0.3, 0.1);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].end == doctest::Approx(1.0).epsilon(1e-12));

    FrameTrack below = track(std::vector<double>(10, 0.49999), 0.1);
    CHECK(diar::posteriors_to_segments(below, 0.5, 0.3, 0.1).empty());
}

TEST_CASE("posteriors_to_segments: random tracks obey the duration rules") {
    std::mt19937 rng(2301);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        int n = 50 + static_cast<int>(rng() % 400);
        std::vector<double> p(n);
        for (double& v : p) v = unif(rng);
        FrameTrack t = track(p, 0.016);
        auto segs = diar::posteriors_to_segments(t, 0.5, 0.3, 0.1);
        for (size_t i = 0; i < segs.size(); ++i) {
            CHECK(segs[i].duration() >= 0.1 - 1e-9);
            if (i > 0) CHECK(segs[i].start - segs[i - 1].end >= 0.3 - 1e-9);
        }
    }
}

TEST_CASE("posteriors_to_segments: raising the threshold never adds speech") {
    std::mt19937 rng(2302);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 30 + static_cast<int>(rng() % 200);
        std::vector<double> p(n);
        for (double& v : p) v = unif(rng);
        FrameTrack t = track(p, 0.02);
        auto lo = diar::posteriors_to_segments(t, 0.4, 0.0, 0.0);
        auto hi = diar::posteriors_to_segments(t, 0.7, 0.0, 0.0);
        CHECK(diar::total_duration(hi) <= diar::total_duration(lo) + 1e-9);
        for (const Segment& h : hi) {
            bool inside = false;
            for (const Segment& l : lo)
                if (l.start <= h.start + 1e-9 && h.end <= l.end + 1e-9) inside = true;
            CHECK(inside);
        }
    }
}

TEST_CASE("assign_overlap: segments already shared by two speakers stay put") {
    Diarization d = make("R1", {{0.0, 5.0, "A"}, {4.0, 9.0, "B"}});
    auto [out, report] = diar::assign_overlap(d, {{4.0, 5.0}}, nullptr, {});
    CHECK(report.applied);
    CHECK(report.turns_added == 0);
    CHECK(same_turns(out, d));
}

TEST_CASE("assign_overlap: posteriors choose the second speaker") {
    Diarization d = make("R1", {{0.0, 5.0, "A"}, {6.0, 8.0, "B"}, {9.0, 10.0, "C"}});
    PosteriorMatrix q;
    q.q.resize(10, 3);
    q.q.setConstant(1.0 / 3.0);
    q.q.row(2) << 0.5, 0.3, 0.2;
    WindowGeometry geom{1.0, 1.0};

    auto [out, report] = diar::assign_overlap(d, {{2.0, 3.0}}, &q, geom);
    CHECK(report.applied);
    CHECK(report.turns_added == 1);
    CHECK(covered_by_speaker(out, {2.0, 3.0}, "B"));
    CHECK(speaker_time(out, "B") == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(speaker_time(out, "A") == doctest::Approx(5.0).epsilon(1e-12));

    q.q.row(2) << 0.5, 0.2, 0.3;
    auto [out2, report2] = diar::assign_overlap(d, {{2.0, 3.0}}, &q, geom);
    CHECK(report2.turns_added == 1);
    CHECK(covered_by_speaker(out2, {2.0, 3.0}, "C"));
}

TEST_CASE("assign_overlap: posterior means pool every covering window") {
    Diarization d = make("R1", {{0.0, 4.0, "A"}, {6.0, 8.0, "B"}, {9.0, 10.0, "C"}});
    PosteriorMatrix q;
    q.q.resize(10, 3);
    q.q.setConstant(1.0 / 3.0);
    // Windows 1 and 2 cover [1.5, 2.5): B wins on average despite window 2.
    q.q.row(1) << 0.2, 0.7, 0.1;
    q.q.row(2) << 0.2, 0.3, 0.5;
    auto [out, report] = diar::assign_overlap(d, {{1.5, 2.5}}, &q, {1.0, 1.0});
    CHECK(report.turns_added == 1);
    CHECK(covered_by_speaker(out, {1.5, 2.5}, "B"));
}

TEST_CASE("assign_overlap: a segment past the last window borrows the nearest") {
    Diarization d = make("R1", {{0.0, 1.0, "B"}, {5.0, 6.0, "A"}});
    PosteriorMatrix q;
    q.q.resize(2, 2);
    q.q << 0.9, 0.1, 0.4, 0.6;
    auto [out, report] = diar::assign_overlap(d, {{5.0, 6.0}}, &q, {1.0, 1.0});
    CHECK(report.turns_added == 1);
    CHECK(covered_by_speaker(out, {5.0, 6.0}, "B"));
}

TEST_CASE("assign_overlap: without posteriors the nearest speaker joins") {
    Diarization d = make("R1", {{0.2, 0.5, "C"}, {1.0, 1.9, "B"}, {2.0, 3.0, "A"}});
    auto [out, report] = diar::assign_overlap(d, {{2.0, 3.0}}, nullptr, {});
    CHECK(report.applied);
    CHECK(report.turns_added == 1);
    CHECK(covered_by_speaker(out, {2.0, 3.0}, "B"));
    CHECK(speaker_time(out, "B") == doctest::Approx(1.9).epsilon(1e-12));
}

TEST_CASE("assign_overlap: silent segments stay silent") {
    Diarization d = make("R1", {{0.0, 5.0, "A"}, {6.0, 8.0, "B"}});
    auto [out, report] = diar::assign_overlap(d, {{20.0, 21.0}}, nullptr, {});
    CHECK(report.applied);
    CHECK(report.turns_added == 0);
    CHECK(same_turns(out, d));
}

TEST_CASE("assign_overlap: a one-speaker diarization is left alone") {
    Diarization d = make("R1", {{0.0, 5.0, "A"}, {6.0, 8.0, "A"}});
    auto [out, report] = diar::assign_overlap(d, {{1.0, 2.0}}, nullptr, {});
    CHECK_FALSE(report.applied);
    CHECK(report.turns_added == 0);
    CHECK(same_turns(out, d));
}

TEST_CASE("assign_overlap: never removes speech") {
    std::mt19937 rng(2303);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        int n_spk = 2 + static_cast<int>(rng() % 4);
        Diarization d =
            oracle::random_diarization(rng, "R1", n_spk, 4 + n_spk * 3, 60000);
        if (d.speakers().size() < 2) continue;

        std::vector<Segment> raw;
        for (int k = 0; k < 6; ++k) {
            double start = unif(rng) * 55.0;
            raw.push_back({start, start + 0.2 + unif(rng) * 3.0});
        }
        std::vector<Segment> overlaps = diar::merge_segments(raw);

        bool with_q = trial % 2 == 0;
        PosteriorMatrix q;
        if (with_q) {
            long wins = 90;
            long cols = static_cast<long>(d.speakers().size());
            q.q.resize(wins, cols);
            for (long i = 0; i < wins; ++i) {
                double row_sum = 0.0;
                for (long j = 0; j < cols; ++j) {
                    q.q(i, j) = 0.05 + unif(rng);
                    row_sum += q.q(i, j);
                }
                q.q.row(i) /= row_sum;
            }
        }
        auto [out, report] = diar::assign_overlap(
            d, overlaps, with_q ? &q : nullptr, {1.44, 0.72});
        CHECK(report.applied);
        for (const std::string& spk : d.speakers())
            CHECK(speaker_time(out, spk) >= speaker_time(d, spk) - 1e-9);
        for (const auto& turn : d.turns)
            CHECK(covered_by_speaker(out, turn.segment, turn.speaker));
    }
}

TEST_CASE("assign_overlap: rejects malformed posterior input") {
    Diarization d = make("R1", {{0.0, 5.0, "A"}, {6.0, 8.0, "B"}});
    PosteriorMatrix q;
    q.q.resize(10, 3);
    q.q.setConstant(1.0 / 3.0);
    CHECK_THROWS_AS((void)diar::assign_overlap(d, {{1.0, 2.0}}, &q, {1.0, 1.0}),
                    std::invalid_argument);
    q.q.resize(10, 2);
    q.q.setConstant(0.5);
    CHECK_THROWS_AS((void)diar::assign_overlap(d, {{1.0, 2.0}}, &q, {0.0, 1.0}),
                    std::invalid_argument);
}
