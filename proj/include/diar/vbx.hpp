#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "diar/clustering.hpp"
#include "diar/embedding.hpp"

namespace diar {

enum class DoaMode { off, emission, transition, both };

struct VbxParams {
    double fa = 0.3;
    double fb = 17.0;
    double p_loop = 0.99;
    int max_iters = 40;
    double elbo_tol = 1e-4;
    double min_speaker_mass = -1.0;  // negative: use 1e-3 * T
    double doa_sigma = 0.01;
    DoaMode doa_mode = DoaMode::off;
};

struct PosteriorMatrix {
    Eigen::MatrixXd q;  // T x S, rows sum to 1
};

struct DoaProfile {
    Eigen::MatrixXd d;  // S x dim, averaged direction posteriors per speaker
    std::vector<bool> zero_mass;  // true where d_s fell back to uniform
};

// Frame indices of the direction track covered by each embedding window.
// A window covering no frame center borrows the nearest frame.
struct WindowAlignment {
    std::vector<std::vector<int>> window_frames;
};

WindowAlignment align_frames_to_windows(const EmbeddingSequence& e,
                                        const FrameTrack& track);

// Per-window mean of the covered track frames, T x dim.
Eigen::MatrixXd window_mean_track(const FrameTrack& track, const WindowAlignment& a);

// Mass-weighted average direction per speaker: d_s = sum_t q_ts d_t / sum_t q_ts.
DoaProfile doa_speaker_profile(const PosteriorMatrix& q, const FrameTrack& track,
                               const WindowAlignment& a);

// Direction-driven transition matrix: diagonal 0.01 when the dominant
// direction changed between steps, 0.99 when it held, rows renormalized.
Eigen::MatrixXd doa_transition_row(bool changed, int n_speakers);

struct FbResult {
    Eigen::MatrixXd gamma;   // T x S posterior state marginals
    Eigen::MatrixXd xi_sum;  // S x S pairwise posteriors summed over steps
    double log_norm = 0.0;   // log of the chain normalizer
};

// Log-space forward-backward. log_trans holds one S x S matrix per step
// (entry (s', s) = log p(z_t = s | z_{t-1} = s')), either T-1 of them or a
// single shared matrix.
FbResult forward_backward(const Eigen::MatrixXd& log_emissions,
                          const Eigen::VectorXd& log_init,
                          const std::vector<Eigen::MatrixXd>& log_trans);

struct VbxResult {
    PosteriorMatrix q;       // columns correspond to output label ids
    ClusterLabels labels;    // per-window argmax of q
    std::vector<double> elbo_trace;
};

using VbxObserver = std::function<void(int iter, const Eigen::MatrixXd& q)>;

// Variational resegmentation of preprocessed embeddings. phi holds the
// between-speaker variances of the PLDA space the embeddings live in.
// doa supplies the direction track required by any doa_mode other than off.
// observe, when set, receives the posterior matrix after every iteration.
VbxResult vb_hmm(const EmbeddingSequence& e, const Eigen::VectorXd& phi,
                 const ClusterLabels& init, const VbxParams& p,
                 const FrameTrack* doa = nullptr, const VbxObserver& observe = {});

}  // namespace diar
