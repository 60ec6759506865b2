#include "diar/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <type_traits>

#include "diar/errors.hpp"
#include "diar/overlap.hpp"
#include "diar/vbx.hpp"

namespace diar {

namespace {

std::string cluster_name(int label, int width) {
    std::string digits = std::to_string(label);
    while (static_cast<int>(digits.size()) < width) digits.insert(0, 1, '0');
    return "spk" + digits;
}

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) {
        auto begin = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(stage, begin);
        } else {
            auto result = fn();
            record(stage, begin);
            return result;
        }
    }

private:
    void record(const std::string& stage,
                std::chrono::steady_clock::time_point begin) {
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
                .count();
        out_.push_back({stage, seconds});
    }

    std::vector<StageTiming>& out_;
};

std::string format_seconds(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(3);
    ss << v;
    return ss.str();
}

std::string format_metric(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(6);
    ss << v;
    return ss.str();
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

}  // namespace

Diarization labels_to_diarization(const ClusterLabels& labels,
                                  const EmbeddingSequence& e) {
    if (labels.labels.size() != e.windows.size())
        throw std::invalid_argument("labels_to_diarization: one label per window required");
    Diarization d;
    d.recording_id = e.recording_id;
    if (labels.labels.empty()) return d;

    const int width =
        static_cast<int>(std::to_string(std::max(labels.n_clusters() - 1, 0)).size());
    const size_t n = labels.labels.size();
    size_t run = 0;
    for (size_t i = 1; i <= n; ++i) {
        if (i < n && labels.labels[i] == labels.labels[run]) continue;
        double start = e.windows[run].start;
        double end = i < n ? std::min(e.windows[i - 1].end, e.windows[i].start)
                           : e.windows[i - 1].end;
        d.turns.push_back({{start, end}, cluster_name(labels.labels[run], width)});
        run = i;
    }
    return normalize(std::move(d));
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
    if (cfg.io.embeddings.empty())
        throw ConfigError("no embedding inputs configured");
    if (cfg.io.embeddings.size() > 8)
        throw ConfigError("at most 8 channels supported");
    if (cfg.io.plda.empty()) throw ConfigError("plda model path required");
    if (cfg.vbx.doa_mode != DoaMode::off && cfg.io.doa.empty())
        throw ConfigError("doa_mode requires a doa track");

    PipelineReport report;
    StageClock clock(report.timings);

    std::error_code ec;
    std::filesystem::create_directories(cfg.io.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.io.out_dir + "'");
    const std::filesystem::path out_dir(cfg.io.out_dir);

    PLDAModel model = clock.run("read_plda", [&] {
        return read_plda_file(cfg.io.plda);
    });

    std::optional<FrameTrack> doa;
    if (!cfg.io.doa.empty())
        doa = clock.run("read_doa", [&] { return read_frame_track_file(cfg.io.doa); });

    VbxParams params;
    params.fa = cfg.vbx.fa;
    params.fb = cfg.vbx.fb;
    params.p_loop = cfg.vbx.p_loop;
    params.max_iters = cfg.vbx.max_iters;
    params.elbo_tol = cfg.vbx.elbo_tol;
    params.min_speaker_mass = cfg.vbx.min_speaker_mass;
    params.doa_sigma = cfg.vbx.doa_sigma;
    params.doa_mode = cfg.vbx.doa_mode;

    std::vector<Diarization> channel_results;
    std::vector<PosteriorMatrix> channel_posteriors;
    for (size_t c = 0; c < cfg.io.embeddings.size(); ++c) {
        EmbeddingSequence e = clock.run("read_embeddings", [&] {
            return read_embeddings_file(cfg.io.embeddings[c]);
        });
        if (std::abs(e.win_len - cfg.io.win_len) > 1e-9 ||
            std::abs(e.win_shift - cfg.io.win_shift) > 1e-9)
            throw ConfigError("window geometry of '" + cfg.io.embeddings[c] +
                              "' does not match the configured win_len/win_shift");
        if (report.recording_id.empty()) {
            report.recording_id = e.recording_id;
        } else if (e.recording_id != report.recording_id) {
            throw ConfigError("channel inputs name different recordings");
        }

        EmbeddingSequence pre = preprocess(e, model);
        ClusterLabels init = clock.run("cluster", [&] {
            if (cfg.vbx.init == InitMethod::spectral)
                return auto_spectral(pre, cfg.asc.kmeans_seed);
            SimilarityMatrix sim =
                similarity_matrix(pre, SimilarityMetric::plda, &model);
            return ahc(sim, cfg.vbx.ahc_threshold);
        });
        VbxResult vb = clock.run("vbx", [&] {
            return vb_hmm(pre, model.phi, init, params, doa ? &*doa : nullptr);
        });
        Diarization d = labels_to_diarization(vb.labels, pre);
        write_rttm_file((out_dir / ("ch" + std::to_string(c + 1) + ".rttm")).string(),
                        {d});
        channel_results.push_back(std::move(d));
        channel_posteriors.push_back(std::move(vb.q));
    }

    auto [combined, combine_report] = clock.run("combine", [&] {
        return combine_channels(channel_results);
    });
    report.combine = combine_report;
    write_rttm_file((out_dir / "combined.rttm").string(), {combined});

    report.hypothesis = combined;
    if (!cfg.io.ovd.empty()) {
        std::vector<FrameTrack> tracks = clock.run("read_ovd", [&] {
            std::vector<FrameTrack> out;
            for (const std::string& path : cfg.io.ovd)
                out.push_back(read_frame_track_file(path));
            return out;
        });
        clock.run("ovd", [&] {
            FrameTrack fused = fuse_posteriors(tracks);
            if (fused.recording_id != report.recording_id)
                throw ConfigError("overlap posteriors name a different recording");
            std::vector<Segment> segments =
                posteriors_to_segments(fused, cfg.ovd.threshold, cfg.ovd.min_silence,
                                       cfg.ovd.min_overlap);
            Diarization marks;
            marks.recording_id = report.recording_id;
            for (const Segment& s : segments) marks.turns.push_back({s, "overlap"});
            write_rttm_file((out_dir / "overlaps.rttm").string(), {normalize(marks)});

            const PosteriorMatrix& q =
                channel_posteriors[report.combine.used_channels.front() - 1];
            auto [enriched, assign_report] =
                assign_overlap(combined, segments, &q,
                               {cfg.io.win_len, cfg.io.win_shift});
            report.hypothesis = std::move(enriched);
            report.ovd_applied = assign_report.applied;
            report.overlap_turns_added = assign_report.turns_added;
        });
    }
    write_rttm_file((out_dir / "final.rttm").string(), {report.hypothesis});

    if (!cfg.io.reference.empty()) {
        clock.run("score", [&] {
            std::vector<Diarization> refs = read_rttm_file(cfg.io.reference);
            const Diarization* ref = nullptr;
            for (const Diarization& r : refs)
                if (r.recording_id == report.recording_id) ref = &r;
            if (!ref)
                throw ConfigError("reference does not contain recording '" +
                                  report.recording_id + "'");
            DerReport s = der(*ref, report.hypothesis, cfg.scoring.collar,
                              cfg.scoring.score_overlap);
            s.jer = jer(*ref, report.hypothesis);
            report.score = s;
        });
    }

    std::ostringstream rep;
    rep << "recording " << report.recording_id << "\n";
    rep << "channels " << cfg.io.embeddings.size() << "\n";
    rep << "chosen_n " << report.combine.chosen_n << "\n";
    rep << "used_channels " << join_channels(report.combine.used_channels) << "\n";
    rep << "skipped_channels " << join_channels(report.combine.skipped_channels)
        << "\n";
    rep << "ovd_applied " << (report.ovd_applied ? "true" : "false") << "\n";
    rep << "overlap_turns_added " << report.overlap_turns_added << "\n";
    if (report.score) {
        rep << "scored_time " << format_metric(report.score->scored_time) << "\n";
        rep << "missed " << format_metric(report.score->missed) << "\n";
        rep << "false_alarm " << format_metric(report.score->false_alarm) << "\n";
        rep << "confusion " << format_metric(report.score->confusion) << "\n";
        if (report.score->der_defined)
            rep << "der " << format_metric(report.score->der) << "\n";
        if (report.score->jer)
            rep << "jer " << format_metric(*report.score->jer) << "\n";
    }
    for (const StageTiming& t : report.timings)
        rep << "time_" << t.stage << " " << format_seconds(t.seconds) << "\n";
    write_text_file((out_dir / "report.txt").string(), rep.str());

    return report;
}

}  // namespace diar
