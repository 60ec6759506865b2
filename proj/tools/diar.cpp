#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "diar/clustering.hpp"
#include "diar/config.hpp"
#include "diar/embedding.hpp"
#include "diar/errors.hpp"
#include "diar/fusion.hpp"
#include "diar/overlap.hpp"
#include "diar/pipeline.hpp"
#include "diar/scoring.hpp"
#include "diar/sot.hpp"
#include "diar/timeline.hpp"

namespace {

void emit(const std::string& path, const std::string& text) {
    if (path == "-")
        std::cout << text;
    else
        diar::write_text_file(path, text);
}

diar::Diarization read_single_rttm(const std::string& path) {
    auto all = diar::read_rttm_file(path);
    if (all.size() != 1)
        throw diar::ConfigError("'" + path + "' must contain exactly one recording");
    return std::move(all[0]);
}

std::string join_channels(const std::vector<int>& channels) {
    if (channels.empty()) return "-";
    std::string out;
    for (size_t i = 0; i < channels.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(channels[i]);
    }
    return out;
}

std::string format_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct RunArgs {
    std::string config;
    std::string out_dir;
};

void cmd_run(const RunArgs& a) {
    diar::PipelineConfig cfg = diar::read_config_file(a.config);
    if (!a.out_dir.empty()) cfg.io.out_dir = a.out_dir;
    diar::run_pipeline(cfg);
    std::cout << diar::read_text_file(cfg.io.out_dir + "/report.txt");
}

struct ClusterArgs {
    std::string embeddings;
    std::string plda;
    std::string init = "ahc";
    double ahc_threshold = 0.0;
    int kmeans_seed = 17;
    std::string output = "-";
};

void cmd_cluster(const ClusterArgs& a) {
    auto e = diar::read_embeddings_file(a.embeddings);
    auto model = diar::read_plda_file(a.plda);
    auto pre = diar::preprocess(e, model);
    diar::ClusterLabels labels;
    if (a.init == "spectral") {
        labels = diar::auto_spectral(pre, a.kmeans_seed);
    } else {
        auto sim = diar::similarity_matrix(pre, diar::SimilarityMetric::plda, &model);
        labels = diar::ahc(sim, a.ahc_threshold);
    }
    emit(a.output, diar::write_rttm(diar::labels_to_diarization(labels, pre)));
}

struct CombineArgs {
    std::vector<std::string> inputs;
    std::string output = "-";
};

void cmd_combine(const CombineArgs& a) {
    std::vector<diar::Diarization> channels;
    for (const auto& path : a.inputs) channels.push_back(read_single_rttm(path));
    auto [combined, report] = diar::combine_channels(channels);
    emit(a.output, diar::write_rttm(combined));
    std::cerr << "chosen_n " << report.chosen_n << "\n"
              << "used_channels " << join_channels(report.used_channels) << "\n"
              << "skipped_channels " << join_channels(report.skipped_channels)
              << "\n";
}

struct OvdArgs {
    std::vector<std::string> inputs;
    double threshold = 0.5;
    double min_silence = 0.3;
    double min_overlap = 0.1;
    std::string output = "-";
};

void cmd_ovd(const OvdArgs& a) {
    std::vector<diar::FrameTrack> tracks;
    for (const auto& path : a.inputs)
        tracks.push_back(diar::read_frame_track_file(path));
    auto fused = diar::fuse_posteriors(tracks);
    auto segments = diar::posteriors_to_segments(fused, a.threshold, a.min_silence,
                                                 a.min_overlap);
    diar::Diarization marks;
    marks.recording_id = fused.recording_id;
    for (const auto& s : segments) marks.turns.push_back({s, "overlap"});
    emit(a.output, diar::write_rttm(diar::normalize(std::move(marks))));
}

struct ApplyOvdArgs {
    std::string hypothesis;
    std::string overlaps;
    std::string output = "-";
};

void cmd_apply_ovd(const ApplyOvdArgs& a) {
    auto hyp = read_single_rttm(a.hypothesis);
    auto marks = read_single_rttm(a.overlaps);
    std::vector<diar::Segment> segments;
    for (const auto& turn : marks.turns) segments.push_back(turn.segment);
    auto [enriched, report] =
        diar::assign_overlap(hyp, segments, nullptr, {1.44, 0.72});
    emit(a.output, diar::write_rttm(enriched));
    std::cerr << "overlap_turns_added " << report.turns_added << "\n";
}

struct FuseArgs {
    std::vector<std::string> inputs;
    std::string mode = "modified";
    double rank_exponent = -0.5;
    std::string output = "-";
};

void cmd_fuse(const FuseArgs& a) {
    std::vector<diar::Diarization> systems;
    for (const auto& path : a.inputs) systems.push_back(read_single_rttm(path));
    auto weights = diar::rank_systems(systems, a.rank_exponent);
    auto mapped = diar::map_labels_across_systems(systems, weights);
    auto mode = a.mode == "original" ? diar::VoteMode::original
                                     : diar::VoteMode::modified;
    emit(a.output, diar::write_rttm(diar::doverlap_vote(mapped, weights, mode)));
}

struct ScoreArgs {
    std::string reference;
    std::string hypothesis;
    double collar = 0.25;
    bool score_overlap = true;
};

void cmd_score(const ScoreArgs& a) {
    auto hyp = read_single_rttm(a.hypothesis);
    auto refs = diar::read_rttm_file(a.reference);
    const diar::Diarization* ref = nullptr;
    for (const auto& r : refs)
        if (r.recording_id == hyp.recording_id) ref = &r;
    if (!ref)
        throw diar::ConfigError("reference does not contain recording '" +
                                hyp.recording_id + "'");
    auto report = diar::der(*ref, hyp, a.collar, a.score_overlap);
    report.jer = diar::jer(*ref, hyp);
    std::cout << "scored_time " << format_metric(report.scored_time) << "\n"
              << "missed " << format_metric(report.missed) << "\n"
              << "false_alarm " << format_metric(report.false_alarm) << "\n"
              << "confusion " << format_metric(report.confusion) << "\n";
    if (report.der_defined)
        std::cout << "der " << format_metric(report.der) << "\n";
    if (report.jer) std::cout << "jer " << format_metric(*report.jer) << "\n";
}

struct SotArgs {
    std::string input;
    std::string output = "-";
};

void cmd_sot(const SotArgs& a) {
    auto groups = diar::parse_sot_tsv(diar::read_text_file(a.input));
    std::string out;
    for (const auto& group : groups) {
        auto tokens = diar::serialize_sot(group);
        for (size_t i = 0; i < tokens.size(); ++i) {
            if (i) out += " ";
            out += tokens[i];
        }
        out += "\n";
    }
    emit(a.output, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker diarization pipeline"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
    run->add_option("--config", run_args.config, "Pipeline config file")->required();
    run->add_option("--out-dir", run_args.out_dir,
                    "Override the configured output directory");
    run->callback([&] { cmd_run(run_args); });

    ClusterArgs cluster_args;
    auto* cluster =
        app.add_subcommand("cluster", "Cluster one channel of window embeddings");
    cluster->add_option("--embeddings", cluster_args.embeddings, "EMB1 input")
        ->required();
    cluster->add_option("--plda", cluster_args.plda, "PLDA1 model")->required();
    cluster
        ->add_option("--init", cluster_args.init, "Clustering method")
        ->check(CLI::IsMember({"ahc", "spectral"}))
        ->capture_default_str();
    cluster
        ->add_option("--ahc-threshold", cluster_args.ahc_threshold,
                     "Merge threshold on calibrated similarity")
        ->capture_default_str();
    cluster
        ->add_option("--kmeans-seed", cluster_args.kmeans_seed,
                     "Seed for the spectral k-means stage")
        ->capture_default_str();
    cluster->add_option("--output", cluster_args.output, "Output RTTM ('-' = stdout)")
        ->capture_default_str();
    cluster->callback([&] { cmd_cluster(cluster_args); });

    CombineArgs combine_args;
    auto* combine =
        app.add_subcommand("combine", "Combine per-channel diarizations");
    combine->add_option("--inputs", combine_args.inputs, "Per-channel RTTM files")
        ->required()
        ->expected(-1);
    combine->add_option("--output", combine_args.output, "Output RTTM ('-' = stdout)")
        ->capture_default_str();
    combine->callback([&] { cmd_combine(combine_args); });

    OvdArgs ovd_args;
    auto* ovd =
        app.add_subcommand("ovd", "Turn overlap posterior tracks into segments");
    ovd->add_option("--inputs", ovd_args.inputs, "TRK1 posterior tracks")
        ->required()
        ->expected(-1);
    ovd->add_option("--threshold", ovd_args.threshold, "Detection threshold")
        ->capture_default_str();
    ovd->add_option("--min-silence", ovd_args.min_silence,
                    "Gaps shorter than this are bridged (seconds)")
        ->capture_default_str();
    ovd->add_option("--min-overlap", ovd_args.min_overlap,
                    "Segments shorter than this are dropped (seconds)")
        ->capture_default_str();
    ovd->add_option("--output", ovd_args.output, "Output RTTM ('-' = stdout)")
        ->capture_default_str();
    ovd->callback([&] { cmd_ovd(ovd_args); });

    ApplyOvdArgs apply_args;
    auto* apply = app.add_subcommand(
        "apply-ovd", "Add second speakers inside detected overlap segments");
    apply->add_option("--hypothesis", apply_args.hypothesis, "Diarization RTTM")
        ->required();
    apply->add_option("--overlaps", apply_args.overlaps, "Overlap segments RTTM")
        ->required();
    apply->add_option("--output", apply_args.output, "Output RTTM ('-' = stdout)")
        ->capture_default_str();
    apply->callback([&] { cmd_apply_ovd(apply_args); });

    FuseArgs fuse_args;
    auto* fuse = app.add_subcommand("fuse", "Fuse diarizations from several systems");
    fuse->add_option("--inputs", fuse_args.inputs, "Per-system RTTM files")
        ->required()
        ->expected(-1);
    fuse->add_option("--mode", fuse_args.mode, "Voting mode")
        ->check(CLI::IsMember({"original", "modified"}))
        ->capture_default_str();
    fuse->add_option("--rank-exponent", fuse_args.rank_exponent,
                     "Exponent for rank-based weights")
        ->capture_default_str();
    fuse->add_option("--output", fuse_args.output, "Output RTTM ('-' = stdout)")
        ->capture_default_str();
    fuse->callback([&] { cmd_fuse(fuse_args); });

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Score a hypothesis against a reference");
    score->add_option("--reference", score_args.reference, "Reference RTTM")
        ->required();
    score->add_option("--hypothesis", score_args.hypothesis, "Hypothesis RTTM")
        ->required();
    score->add_option("--collar", score_args.collar,
                      "No-score collar around reference boundaries (seconds)")
        ->capture_default_str();
    score
        ->add_option("--score-overlap", score_args.score_overlap,
                     "Score overlapped speech regions")
        ->capture_default_str();
    score->callback([&] { cmd_score(score_args); });

    SotArgs sot_args;
    auto* sot = app.add_subcommand(
        "sot", "Serialize grouped utterance transcripts into token sequences");
    sot->add_option("--input", sot_args.input, "Utterance TSV")->required();
    sot->add_option("--output", sot_args.output, "Output text ('-' = stdout)")
        ->capture_default_str();
    sot->callback([&] { cmd_sot(sot_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    } catch (const diar::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const diar::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
