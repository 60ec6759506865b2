#pragma once

#include <string>
#include <vector>

#include "diar/fusion.hpp"
#include "diar/vbx.hpp"

namespace diar {

enum class InitMethod { ahc, spectral };

// INI-style run configuration: [section] headers, `key = value` lines, full
// lines starting with '#' as comments. Every field below names its key and
// carries its default; unknown sections, unknown keys, duplicate keys and
// unparsable values are ConfigErrors.
struct PipelineConfig {
    struct Io {
        std::vector<std::string> embeddings;  // comma-separated EMB1 paths, one per channel
        std::string plda;                     // PLDA1 model path
        std::string doa;                      // TRK1 direction track, optional
        std::vector<std::string> ovd;         // comma-separated TRK1 posterior paths, optional
        std::string reference;                // RTTM reference for scoring, optional
        std::string out_dir = "run";
        double win_len = 1.44;
        double win_shift = 0.72;
    } io;

    struct Vbx {
        InitMethod init = InitMethod::ahc;  // ahc | spectral
        double ahc_threshold = 0.0;
        double fa = 0.3;
        double fb = 17.0;
        double p_loop = 0.99;
        int max_iters = 40;
        double elbo_tol = 1e-4;
        double min_speaker_mass = -1.0;  // negative: 1e-3 * window count
        double doa_sigma = 0.01;
        DoaMode doa_mode = DoaMode::off;  // off | emission | transition | both
    } vbx;

    struct Asc {
        unsigned kmeans_seed = 17;
    } asc;

    struct Ovd {
        double threshold = 0.5;
        double min_silence = 0.3;
        double min_overlap = 0.1;
    } ovd;

    struct Fusion {
        VoteMode mode = VoteMode::modified;  // original | modified
        double rank_exponent = -0.5;
    } fusion;

    struct Scoring {
        double collar = 0.25;
        bool score_overlap = true;
    } scoring;
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig read_config_file(const std::string& path);

}  // namespace diar
