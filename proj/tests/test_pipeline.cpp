#include <algorithm>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "diar/config.hpp"
#include "diar/clustering.hpp"
#include "diar/embedding.hpp"
#include "diar/errors.hpp"
#include "diar/pipeline.hpp"
#include "diar/scoring.hpp"
#include "diar/timeline.hpp"
#include "diar/vbx.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;

// Fresh scratch directory per test; reruns start clean.
fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("diar_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

diar::EmbeddingSequence grid_sequence(int n_windows, double win_len,
                                      double win_shift) {
    diar::EmbeddingSequence e;
    e.recording_id = "R";
    e.channel = 1;
    e.dim = 1;
    e.win_len = win_len;
    e.win_shift = win_shift;
    for (int i = 0; i < n_windows; ++i) {
        diar::EmbeddingWindow w;
        w.start = i * win_shift;
        w.end = w.start + win_len;
        w.vector = Eigen::VectorXd::Zero(1);
        e.windows.push_back(w);
    }
    return e;
}

diar::ClusterLabels make_labels(std::vector<int> labels) {
    diar::ClusterLabels out;
    out.labels = std::move(labels);
    return out;
}

bool same_turns(const diar::Diarization& a, const diar::Diarization& b) {
    if (a.turns.size() != b.turns.size()) return false;
    for (size_t i = 0; i < a.turns.size(); ++i) {
        if (a.turns[i].speaker != b.turns[i].speaker) return false;
        if (std::abs(a.turns[i].segment.start - b.turns[i].segment.start) > 1e-6)
            return false;
        if (std::abs(a.turns[i].segment.end - b.turns[i].segment.end) > 1e-6)
            return false;
    }
    return true;
}

int active_at(const diar::Diarization& d, double t) {
    std::vector<std::string> seen;
    for (const auto& turn : d.turns)
        if (turn.segment.contains(t) &&
            std::find(seen.begin(), seen.end(), turn.speaker) == seen.end())
            seen.push_back(turn.speaker);
    return static_cast<int>(seen.size());
}

// Writes the fixture's inputs under dir and returns a config pointing at them.
diar::PipelineConfig write_fixture(const oracle::MeetingFixture& f,
                                   const fs::path& dir, double win_len,
                                   double win_shift) {
    diar::PipelineConfig cfg;
    for (size_t c = 0; c < f.channels.size(); ++c) {
        fs::path p = dir / ("ch" + std::to_string(c + 1) + ".emb");
        diar::write_text_file(p.string(), diar::write_embeddings(f.channels[c]));
        cfg.io.embeddings.push_back(p.string());
    }
    fs::path plda = dir / "model.plda";
    diar::write_text_file(plda.string(), diar::write_plda(f.plda));
    cfg.io.plda = plda.string();
    fs::path ref = dir / "ref.rttm";
    diar::write_rttm_file(ref.string(), {f.reference});
    cfg.io.reference = ref.string();
    cfg.io.win_len = win_len;
    cfg.io.win_shift = win_shift;
    cfg.io.out_dir = (dir / "run").string();
    return cfg;
}

}  // namespace

TEST_CASE("labels_to_diarization merges label runs into turns") {
    auto e = grid_sequence(4, 1.44, 0.72);
    auto d = diar::labels_to_diarization(make_labels({0, 0, 1, 1}), e);
    REQUIRE(d.turns.size() == 2);
    CHECK(d.recording_id == "R");
    CHECK(d.turns[0].speaker == "spk0");
    CHECK(d.turns[0].segment.start == doctest::Approx(0.0));
    CHECK(d.turns[0].segment.end == doctest::Approx(1.44));
    CHECK(d.turns[1].speaker == "spk1");
    CHECK(d.turns[1].segment.start == doctest::Approx(1.44));
    CHECK(d.turns[1].segment.end == doctest::Approx(3.6));
}

TEST_CASE("labels_to_diarization reunites interleaved runs of one cluster") {
    auto e = grid_sequence(5, 1.0, 1.0);
    auto d = diar::labels_to_diarization(make_labels({0, 1, 0, 0, 1}), e);
    REQUIRE(d.turns.size() == 4);
    CHECK(d.turns[0].speaker == "spk0");
    CHECK(d.turns[1].segment.start == doctest::Approx(1.0));
    CHECK(d.turns[1].segment.end == doctest::Approx(2.0));
    CHECK(d.turns[2].speaker == "spk0");
    CHECK(d.turns[2].segment.start == doctest::Approx(2.0));
    CHECK(d.turns[2].segment.end == doctest::Approx(4.0));
}

TEST_CASE("labels_to_diarization zero pads names past ten clusters") {
    auto e = grid_sequence(11, 1.0, 1.0);
    std::vector<int> labels(11);
    for (int i = 0; i < 11; ++i) labels[i] = i;
    auto d = diar::labels_to_diarization(make_labels(labels), e);
    auto speakers = d.speakers();
    REQUIRE(speakers.size() == 11);
    CHECK(speakers.front() == "spk00");
    CHECK(speakers[2] == "spk02");
    CHECK(speakers.back() == "spk10");
    for (size_t i = 0; i < speakers.size(); ++i)
        CHECK(d.turns[i].speaker == speakers[i]);
}

TEST_CASE("labels_to_diarization validates input sizes") {
    auto e = grid_sequence(3, 1.0, 1.0);
    CHECK_THROWS_AS(diar::labels_to_diarization(make_labels({0, 1}), e),
                    std::invalid_argument);
    diar::EmbeddingSequence empty;
    empty.recording_id = "R";
    auto d = diar::labels_to_diarization(make_labels({}), empty);
    CHECK(d.turns.empty());
}

TEST_CASE("single channel run matches the stage-by-stage chain") {
    std::mt19937 rng(5101);
    auto fix = oracle::synthetic_meeting(rng, 2, 1, 60.0, 1.44, 0.72, 0.0);
    fs::path dir = scratch_dir("single");
    auto cfg = write_fixture(fix, dir, 1.44, 0.72);

    auto report = diar::run_pipeline(cfg);

    CHECK(report.recording_id == "SYN1");
    CHECK(report.combine.chosen_n >= 1);
    CHECK(report.combine.used_channels == std::vector<int>{1});
    CHECK_FALSE(report.ovd_applied);
    CHECK(report.overlap_turns_added == 0);

    fs::path run = dir / "run";
    std::string ch1 = diar::read_text_file((run / "ch1.rttm").string());
    std::string combined = diar::read_text_file((run / "combined.rttm").string());
    std::string final_rttm = diar::read_text_file((run / "final.rttm").string());
    CHECK(ch1 == combined);
    CHECK(combined == final_rttm);
    CHECK_FALSE(fs::exists(run / "overlaps.rttm"));

    auto e = diar::read_embeddings_file(cfg.io.embeddings[0]);
    auto model = diar::read_plda_file(cfg.io.plda);
    auto pre = diar::preprocess(e, model);
    auto sim = diar::similarity_matrix(pre, diar::SimilarityMetric::plda, &model);
    auto init = diar::ahc(sim, cfg.vbx.ahc_threshold);
    diar::VbxParams params;
    auto vb = diar::vb_hmm(pre, model.phi, init, params, nullptr);
    auto expected = diar::labels_to_diarization(vb.labels, pre);
    CHECK(same_turns(report.hypothesis, expected));

    REQUIRE(report.score.has_value());
    CHECK(report.score->der_defined);
    CHECK(report.score->der < 0.05);
    REQUIRE(report.score->jer.has_value());

    std::string rep = diar::read_text_file((run / "report.txt").string());
    CHECK(rep.find("recording SYN1\n") != std::string::npos);
    CHECK(rep.find("channels 1\n") != std::string::npos);
    CHECK(rep.find("chosen_n ") != std::string::npos);
    CHECK(rep.find("used_channels 1\n") != std::string::npos);
    CHECK(rep.find("skipped_channels -\n") != std::string::npos);
    CHECK(rep.find("ovd_applied false\n") != std::string::npos);
    CHECK(rep.find("der ") != std::string::npos);
    CHECK(rep.find("jer ") != std::string::npos);
    CHECK(rep.find("time_cluster ") != std::string::npos);
    CHECK(rep.find("time_vbx ") != std::string::npos);
    CHECK(rep.find("time_combine ") != std::string::npos);
}

TEST_CASE("replicated channels reduce to the single channel answer") {
    std::mt19937 rng(5101);
    auto fix = oracle::synthetic_meeting(rng, 2, 1, 60.0, 1.44, 0.72, 0.0);
    fs::path dir = scratch_dir("replicated");
    auto cfg = write_fixture(fix, dir, 1.44, 0.72);

    auto single_cfg = cfg;
    single_cfg.io.out_dir = (dir / "run_single").string();
    diar::run_pipeline(single_cfg);

    auto multi_cfg = cfg;
    for (int i = 0; i < 7; ++i)
        multi_cfg.io.embeddings.push_back(cfg.io.embeddings[0]);
    multi_cfg.io.out_dir = (dir / "run_multi").string();
    auto report = diar::run_pipeline(multi_cfg);

    CHECK(report.combine.used_channels.size() +
              report.combine.skipped_channels.size() ==
          8);
    std::string single_final =
        diar::read_text_file((dir / "run_single" / "final.rttm").string());
    std::string multi_final =
        diar::read_text_file((dir / "run_multi" / "final.rttm").string());
    CHECK(single_final == multi_final);
    for (int c = 1; c <= 8; ++c)
        CHECK(fs::exists(dir / "run_multi" / ("ch" + std::to_string(c) + ".rttm")));
}

TEST_CASE("overlap stage marks regions and adds second speakers") {
    std::mt19937 rng(5107);
    auto fix = oracle::synthetic_meeting(rng, 3, 2, 120.0, 1.44, 0.72, 0.8);
    REQUIRE_FALSE(diar::overlap_regions(fix.reference).empty());

    fs::path dir = scratch_dir("ovd");
    auto cfg = write_fixture(fix, dir, 1.44, 0.72);
    fs::path ovd = dir / "ovd.trk";
    diar::write_text_file(ovd.string(),
                          diar::write_frame_track(fix.overlap_posteriors));
    cfg.io.ovd = {ovd.string()};

    auto report = diar::run_pipeline(cfg);

    CHECK(report.ovd_applied);
    CHECK(report.overlap_turns_added >= 1);

    fs::path run = dir / "run";
    auto marks = diar::read_rttm_file((run / "overlaps.rttm").string());
    REQUIRE(marks.size() == 1);
    REQUIRE_FALSE(marks[0].turns.empty());
    CHECK(marks[0].speakers() == std::vector<std::string>{"overlap"});

    auto finals = diar::read_rttm_file((run / "final.rttm").string());
    REQUIRE(finals.size() == 1);
    auto combined = diar::read_rttm_file((run / "combined.rttm").string());
    REQUIRE(combined.size() == 1);

    auto touching = [](const diar::Diarization& d, const diar::Segment& seg) {
        std::vector<std::string> seen;
        for (const auto& turn : d.turns) {
            double lo = std::max(turn.segment.start, seg.start);
            double hi = std::min(turn.segment.end, seg.end);
            if (hi - lo > 1e-9 &&
                std::find(seen.begin(), seen.end(), turn.speaker) == seen.end())
                seen.push_back(turn.speaker);
        }
        return seen;
    };

    // Marked regions the combined pass attributed to one speaker gain a
    // second; regions already split between speakers are left alone.
    int enriched = 0;
    for (const auto& turn : marks[0].turns) {
        if (touching(combined[0], turn.segment).size() != 1) continue;
        double mid = 0.5 * (turn.segment.start + turn.segment.end);
        CHECK(active_at(finals[0], mid) >= 2);
        ++enriched;
    }
    CHECK(enriched == report.overlap_turns_added);
    auto combined_score = diar::der(fix.reference, combined[0], 0.25, true);
    REQUIRE(report.score.has_value());
    CHECK(report.score->der < combined_score.der);
}

TEST_CASE("repeated runs write byte identical rttm files") {
    std::mt19937 rng(5113);
    auto fix = oracle::synthetic_meeting(rng, 3, 2, 60.0, 1.44, 0.72, 0.5);
    fs::path dir = scratch_dir("repeat");
    auto cfg = write_fixture(fix, dir, 1.44, 0.72);
    fs::path ovd = dir / "ovd.trk";
    diar::write_text_file(ovd.string(),
                          diar::write_frame_track(fix.overlap_posteriors));
    cfg.io.ovd = {ovd.string()};

    auto first = cfg;
    first.io.out_dir = (dir / "run_a").string();
    diar::run_pipeline(first);
    auto second = cfg;
    second.io.out_dir = (dir / "run_b").string();
    diar::run_pipeline(second);

    for (const char* name : {"ch1.rttm", "ch2.rttm", "combined.rttm",
                             "overlaps.rttm", "final.rttm"}) {
        CAPTURE(name);
        CHECK(diar::read_text_file((dir / "run_a" / name).string()) ==
              diar::read_text_file((dir / "run_b" / name).string()));
    }
}

TEST_CASE("run_pipeline rejects missing or inconsistent inputs") {
    std::mt19937 rng(5119);
    auto fix = oracle::synthetic_meeting(rng, 2, 1, 40.0, 1.44, 0.72, 0.0);
    fs::path dir = scratch_dir("errors");
    auto cfg = write_fixture(fix, dir, 1.44, 0.72);

    SUBCASE("no embeddings") {
        cfg.io.embeddings.clear();
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("too many channels") {
        while (cfg.io.embeddings.size() <= 8)
            cfg.io.embeddings.push_back(cfg.io.embeddings[0]);
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("no plda path") {
        cfg.io.plda.clear();
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("doa mode without doa track") {
        cfg.vbx.doa_mode = diar::DoaMode::emission;
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("embeddings file missing") {
        cfg.io.embeddings[0] = (dir / "nope.emb").string();
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("window geometry mismatch") {
        cfg.io.win_len = 0.5;
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("reference lacks the recording") {
        diar::Diarization other;
        other.recording_id = "OTHER";
        other.turns.push_back({{0.0, 1.0}, "A"});
        fs::path ref = dir / "other.rttm";
        diar::write_rttm_file(ref.string(), {other});
        cfg.io.reference = ref.string();
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("overlap track names another recording") {
        auto track = fix.overlap_posteriors;
        track.recording_id = "OTHER";
        fs::path ovd = dir / "other.trk";
        diar::write_text_file(ovd.string(), diar::write_frame_track(track));
        cfg.io.ovd = {ovd.string()};
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ConfigError);
    }
    SUBCASE("malformed plda file") {
        fs::path bad = dir / "bad.plda";
        diar::write_text_file(bad.string(), "not a model\n");
        cfg.io.plda = bad.string();
        CHECK_THROWS_AS(diar::run_pipeline(cfg), diar::ParseError);
    }
}
