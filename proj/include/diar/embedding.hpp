#pragma once

// Speaker embeddings, PLDA models and frame-posterior tracks, with their text
// file formats (EMB1 / TRK1 / PLDA1). Lines starting with '#' are comments.

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace diar {

struct EmbeddingWindow {
    double start = 0.0;
    double end = 0.0;
    Eigen::VectorXd vector;
};

struct EmbeddingSequence {
    std::string recording_id;
    int channel = 1;
    int dim = 0;
    double win_len = 0.0;
    double win_shift = 0.0;
    std::vector<EmbeddingWindow> windows;
};

// Two-covariance PLDA in diagonalized form: within-class covariance is the
// identity after `transform`, between-class covariance is diag(phi).
struct PLDAModel {
    int dim = 0;   // input dimensionality D
    int rank = 0;  // subspace dimensionality R
    Eigen::VectorXd mean;       // D
    Eigen::MatrixXd transform;  // R x D
    Eigen::VectorXd phi;        // R, entries >= 0
};

struct FrameTrack {
    std::string recording_id;
    double frame_shift = 0.0;
    int dim = 0;
    Eigen::MatrixXd frames;  // T x dim, entries in [0, 1]
};

EmbeddingSequence read_embeddings(const std::string& text);
std::string write_embeddings(const EmbeddingSequence& e);

FrameTrack read_frame_track(const std::string& text);
std::string write_frame_track(const FrameTrack& t);

PLDAModel read_plda(const std::string& text);
std::string write_plda(const PLDAModel& m);

EmbeddingSequence read_embeddings_file(const std::string& path);
FrameTrack read_frame_track_file(const std::string& path);
PLDAModel read_plda_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Length-normalize each window vector, subtract the model mean, project into
// the R-dimensional PLDA space.
EmbeddingSequence preprocess(const EmbeddingSequence& e, const PLDAModel& m);

// Per-dimension constants of the pairwise log-likelihood ratio
//   llr(a, b) = c0_sum + sum_r k1[r]*(a_r^2 + b_r^2) + k2[r]*a_r*b_r.
struct PldaTerms {
    double c0_sum = 0.0;
    Eigen::ArrayXd k1;
    Eigen::ArrayXd k2;
};
PldaTerms plda_terms(const PLDAModel& m);

// Same-speaker vs different-speaker log-likelihood ratio of two vectors in
// the preprocessed space.
double plda_llr(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                const PLDAModel& m);

// Fit a two-covariance model on labeled vectors: whiten by the pooled
// within-class covariance, diagonalize the between-class covariance, clamp
// negative variances at zero. Keeps the full dimensionality (R = D).
PLDAModel estimate_plda(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& labeled);

}  // namespace diar
