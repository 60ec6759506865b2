#include "diar/vbx.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const Eigen::VectorXd& v) {
    double m = v.maxCoeff();
    if (m == kNegInf) return kNegInf;
    return m + std::log((v.array() - m).exp().sum());
}

Eigen::MatrixXd stack_vectors(const EmbeddingSequence& e) {
    Eigen::MatrixXd x(e.windows.size(), e.dim);
    for (size_t i = 0; i < e.windows.size(); ++i) x.row(i) = e.windows[i].vector;
    return x;
}

}  // namespace

WindowAlignment align_frames_to_windows(const EmbeddingSequence& e,
                                        const FrameTrack& track) {
    const long n_frames = track.frames.rows();
    if (n_frames == 0) throw std::invalid_argument("empty frame track");

    WindowAlignment a;
    a.window_frames.resize(e.windows.size());
    for (size_t t = 0; t < e.windows.size(); ++t) {
        const double start = e.windows[t].start;
        const double end = e.windows[t].end;
        long first = static_cast<long>(std::ceil(start / track.frame_shift - 0.5 - 1e-9));
        if (first < 0) first = 0;
        for (long f = first; f < n_frames; ++f) {
            double center = (f + 0.5) * track.frame_shift;
            if (center < start) continue;
            if (center >= end) break;
            a.window_frames[t].push_back(static_cast<int>(f));
        }
        if (a.window_frames[t].empty()) {
            const double mid = (start + end) / 2.0;
            long nearest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (long f = 0; f < n_frames; ++f) {
                double d = std::abs((f + 0.5) * track.frame_shift - mid);
                if (d < best) {
                    best = d;
                    nearest = f;
                }
            }
            a.window_frames[t].push_back(static_cast<int>(nearest));
        }
    }
    return a;
}

Eigen::MatrixXd window_mean_track(const FrameTrack& track, const WindowAlignment& a) {
    Eigen::MatrixXd mean(a.window_frames.size(), track.dim);
    for (size_t t = 0; t < a.window_frames.size(); ++t) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(track.dim);
        for (int f : a.window_frames[t]) sum += track.frames.row(f);
        mean.row(t) = sum / static_cast<double>(a.window_frames[t].size());
    }
    return mean;
}

DoaProfile doa_speaker_profile(const PosteriorMatrix& q, const FrameTrack& track,
                               const WindowAlignment& a) {
    if (static_cast<size_t>(q.q.rows()) != a.window_frames.size())
        throw std::invalid_argument("posterior rows do not match alignment");
    Eigen::MatrixXd mean = window_mean_track(track, a);
    const long n_spk = q.q.cols();

    DoaProfile profile;
    profile.d.resize(n_spk, track.dim);
    profile.zero_mass.assign(n_spk, false);
    for (long s = 0; s < n_spk; ++s) {
        double mass = q.q.col(s).sum();
        if (mass < 1e-12) {
            profile.d.row(s).setConstant(1.0 / track.dim);
            profile.zero_mass[s] = true;
            continue;
        }
        profile.d.row(s) = (q.q.col(s).transpose() * mean) / mass;
    }
    return profile;
}

Eigen::MatrixXd doa_transition_row(bool changed, int n_speakers) {
    if (n_speakers < 1) throw std::invalid_argument("need at least one speaker");
    const double diag = changed ? 0.01 : 0.99;
    const double off = changed ? 0.99 : 0.01;
    const double row_sum = diag + off * (n_speakers - 1);
    Eigen::MatrixXd rows(n_speakers, n_speakers);
    rows.setConstant(off / row_sum);
    rows.diagonal().setConstant(diag / row_sum);
    return rows;
}

FbResult forward_backward(const Eigen::MatrixXd& log_emissions,
                          const Eigen::VectorXd& log_init,
                          const std::vector<Eigen::MatrixXd>& log_trans) {
    const long t_len = log_emissions.rows();
    const long n_states = log_emissions.cols();
    if (t_len == 0) throw std::invalid_argument("empty emission matrix");
    if (log_init.size() != n_states)
        throw std::invalid_argument("initial distribution size mismatch");
    const bool shared = log_trans.size() == 1;
    if (t_len > 1 && !shared && log_trans.size() != static_cast<size_t>(t_len) - 1)
        throw std::invalid_argument("need one transition matrix per step");
    auto trans = [&](long t) -> const Eigen::MatrixXd& {
        return shared ? log_trans[0] : log_trans[t - 1];
    };

    Eigen::MatrixXd fwd(t_len, n_states), bwd(t_len, n_states);
    fwd.row(0) = log_init.transpose() + log_emissions.row(0);
    for (long t = 1; t < t_len; ++t) {
        const Eigen::MatrixXd& a = trans(t);
        for (long s = 0; s < n_states; ++s)
            fwd(t, s) = log_emissions(t, s) +
                        logsumexp(fwd.row(t - 1).transpose() + a.col(s));
    }
    const double log_norm = logsumexp(fwd.row(t_len - 1).transpose());

    bwd.row(t_len - 1).setZero();
    for (long t = t_len - 2; t >= 0; --t) {
        const Eigen::MatrixXd& a = trans(t + 1);
        for (long s = 0; s < n_states; ++s)
            bwd(t, s) = logsumexp(a.row(s).transpose() +
                                  log_emissions.row(t + 1).transpose() +
                                  bwd.row(t + 1).transpose());
    }

    FbResult out;
    out.log_norm = log_norm;
    out.gamma = ((fwd + bwd).array() - log_norm).exp();
    for (long t = 0; t < t_len; ++t) {
        double row_sum = out.gamma.row(t).sum();
        if (row_sum > 0.0) out.gamma.row(t) /= row_sum;
    }
    out.xi_sum = Eigen::MatrixXd::Zero(n_states, n_states);
    Eigen::MatrixXd step(n_states, n_states);
    for (long t = 1; t < t_len; ++t) {
        const Eigen::MatrixXd& a = trans(t);
        for (long sp = 0; sp < n_states; ++sp)
            for (long s = 0; s < n_states; ++s)
                step(sp, s) = std::exp(fwd(t - 1, sp) + a(sp, s) +
                                       log_emissions(t, s) + bwd(t, s) - log_norm);
        double z = step.sum();
        if (z > 0.0) out.xi_sum += step / z;
    }
    return out;
}

VbxResult vb_hmm(const EmbeddingSequence& e, const Eigen::VectorXd& phi,
                 const ClusterLabels& init, const VbxParams& p,
                 const FrameTrack* doa, const VbxObserver& observe) {
    const long t_len = static_cast<long>(e.windows.size());
    if (t_len == 0) throw std::invalid_argument("empty embedding sequence");
    if (static_cast<long>(init.labels.size()) != t_len)
        throw std::invalid_argument("init labels do not match window count");
    if (phi.size() != e.dim)
        throw std::invalid_argument("phi size does not match embedding dim");
    if (p.fa <= 0.0 || p.fb <= 0.0 || p.p_loop <= 0.0 || p.p_loop >= 1.0)
        throw std::invalid_argument("invalid vbx parameters");

    long n_spk = init.n_clusters();
    for (int lab : init.labels)
        if (lab < 0 || lab >= n_spk)
            throw std::invalid_argument("init labels out of range");

    const bool use_doa = p.doa_mode != DoaMode::off;
    if (use_doa && !doa)
        throw std::invalid_argument("doa_mode requires a direction track");

    WindowAlignment alignment;
    Eigen::MatrixXd dbar;           // per-window mean direction vectors
    std::vector<char> dir_changed;  // step t: dominant direction moved since t-1
    if (use_doa) {
        double span = e.windows.back().end;
        if (doa->frames.rows() * doa->frame_shift < span - 1e-6)
            throw std::invalid_argument("direction track shorter than embedding span");
        alignment = align_frames_to_windows(e, *doa);
        dbar = window_mean_track(*doa, alignment);
        dir_changed.resize(t_len, 0);
        long prev = 0;
        for (long t = 0; t < t_len; ++t) {
            long arg = 0;
            dbar.row(t).maxCoeff(&arg);
            if (t > 0) dir_changed[t] = arg != prev;
            prev = arg;
        }
    }

    const Eigen::MatrixXd x = stack_vectors(e);
    const Eigen::ArrayXd phi_a = phi.array();
    const Eigen::ArrayXd sqrt_phi = phi_a.sqrt();
    const double ratio = p.fa / p.fb;
    const double min_mass = p.min_speaker_mass < 0.0
                                ? 1e-3 * static_cast<double>(t_len)
                                : p.min_speaker_mass;

    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(t_len, n_spk);
    for (long t = 0; t < t_len; ++t) gamma(t, init.labels[t]) = 1.0;
    Eigen::VectorXd pi = gamma.colwise().sum() / static_cast<double>(t_len);

    const bool doa_emission =
        p.doa_mode == DoaMode::emission || p.doa_mode == DoaMode::both;
    const bool doa_transition =
        p.doa_mode == DoaMode::transition || p.doa_mode == DoaMode::both;

    VbxResult result;
    double prev_elbo = kNegInf;
    for (int iter = 0; iter < p.max_iters; ++iter) {
        // Speaker model update from the current responsibilities.
        Eigen::VectorXd mass = gamma.colwise().sum();
        Eigen::MatrixXd stats = gamma.transpose() * x;
        Eigen::ArrayXXd inv_l(n_spk, e.dim), alpha(n_spk, e.dim);
        for (long s = 0; s < n_spk; ++s) {
            inv_l.row(s) = 1.0 / (1.0 + ratio * mass[s] * phi_a.transpose());
            alpha.row(s) =
                ratio * inv_l.row(s) * sqrt_phi.transpose() * stats.row(s).array();
        }

        // Emission scores, speaker-independent constants dropped.
        Eigen::MatrixXd log_rho(t_len, n_spk);
        for (long s = 0; s < n_spk; ++s) {
            double penalty =
                0.5 *
                (phi_a.transpose() * (inv_l.row(s) + alpha.row(s).square())).sum();
            Eigen::VectorXd proj =
                x * (sqrt_phi.transpose() * alpha.row(s)).matrix().transpose();
            log_rho.col(s) = p.fa * (proj.array() - penalty);
        }
        if (doa_emission) {
            PosteriorMatrix q_now{gamma};
            DoaProfile profile = doa_speaker_profile(q_now, *doa, alignment);
            const double denom = 2.0 * p.doa_sigma * p.doa_sigma;
            for (long s = 0; s < n_spk; ++s) {
                Eigen::MatrixXd diff = dbar.rowwise() - profile.d.row(s);
                log_rho.col(s) -= diff.rowwise().squaredNorm() / denom;
            }
        }

        // Chain distributions.
        std::vector<Eigen::MatrixXd> log_trans;
        if (doa_transition) {
            for (long t = 1; t < t_len; ++t)
                log_trans.push_back(
                    doa_transition_row(dir_changed[t], static_cast<int>(n_spk))
                        .array()
                        .log()
                        .matrix());
            if (log_trans.empty())
                log_trans.push_back(Eigen::MatrixXd::Zero(n_spk, n_spk));
        } else {
            Eigen::MatrixXd a(n_spk, n_spk);
            for (long r = 0; r < n_spk; ++r)
                for (long c = 0; c < n_spk; ++c)
                    a(r, c) = p.p_loop * (r == c ? 1.0 : 0.0) +
                              (1.0 - p.p_loop) * pi[c];
            log_trans.push_back(a.array().log().matrix());
        }
        Eigen::VectorXd log_pi = pi.array().log();

        FbResult fb = forward_backward(log_rho, log_pi, log_trans);

        // Evidence bound: chain normalizer plus the speaker-model divergence.
        double kl = 0.5 * (inv_l.log() - inv_l - alpha.square() + 1.0).sum();
        double elbo = fb.log_norm + p.fb * kl;
        result.elbo_trace.push_back(elbo);

        gamma = fb.gamma;
        if (doa_transition) {
            pi = gamma.colwise().sum() / static_cast<double>(t_len);
        } else {
            // pi enters the chain through the initial step and through the
            // draw branch of every transition, so its update weights each
            // state by how often that branch was responsible. A plain
            // occupancy average can push the evidence bound downhill; this
            // one cannot.
            Eigen::VectorXd draw(n_spk);
            for (long s = 0; s < n_spk; ++s) {
                double branch = (1.0 - p.p_loop) * pi[s];
                double self_draw =
                    fb.xi_sum(s, s) * (branch / (p.p_loop + branch));
                draw[s] = gamma(0, s) + fb.xi_sum.col(s).sum() -
                          fb.xi_sum(s, s) + self_draw;
            }
            double total = draw.sum();
            if (total > 0.0)
                pi = draw / total;
            else
                pi.setConstant(1.0 / static_cast<double>(n_spk));
        }

        // Drop speakers whose expected mass collapsed; they never come back.
        Eigen::VectorXd new_mass = gamma.colwise().sum();
        std::vector<long> keep;
        for (long s = 0; s < n_spk; ++s)
            if (new_mass[s] >= min_mass) keep.push_back(s);
        if (keep.empty()) {
            long best = 0;
            new_mass.maxCoeff(&best);
            keep.push_back(best);
        }
        if (static_cast<long>(keep.size()) < n_spk) {
            Eigen::MatrixXd pruned(t_len, static_cast<long>(keep.size()));
            for (size_t k = 0; k < keep.size(); ++k)
                pruned.col(static_cast<long>(k)) = gamma.col(keep[k]);
            for (long t = 0; t < t_len; ++t) {
                double row_sum = pruned.row(t).sum();
                if (row_sum > 0.0)
                    pruned.row(t) /= row_sum;
                else
                    pruned.row(t).setConstant(1.0 /
                                              static_cast<double>(keep.size()));
            }
            gamma = pruned;
            n_spk = static_cast<long>(keep.size());
            Eigen::VectorXd kept_pi(n_spk);
            for (long k = 0; k < n_spk; ++k) kept_pi[k] = pi[keep[k]];
            double total = kept_pi.sum();
            pi = total > 0.0 ? Eigen::VectorXd(kept_pi / total)
                             : Eigen::VectorXd::Constant(
                                   n_spk, 1.0 / static_cast<double>(n_spk));
        }

        if (observe) observe(iter, gamma);
        if (iter > 0 && elbo - prev_elbo < p.elbo_tol) {
            prev_elbo = elbo;
            break;
        }
        prev_elbo = elbo;
    }

    // Per-window argmax; columns that never win are dropped so that label k
    // always addresses posterior column k.
    std::vector<long> win(t_len);
    std::vector<char> wins_any(n_spk, 0);
    for (long t = 0; t < t_len; ++t) {
        long arg = 0;
        gamma.row(t).maxCoeff(&arg);
        win[t] = arg;
        wins_any[arg] = 1;
    }
    std::vector<long> col_to_label(n_spk, -1);
    long next = 0;
    for (long s = 0; s < n_spk; ++s)
        if (wins_any[s]) col_to_label[s] = next++;
    if (next < n_spk) {
        Eigen::MatrixXd packed(t_len, next);
        for (long s = 0; s < n_spk; ++s)
            if (col_to_label[s] >= 0) packed.col(col_to_label[s]) = gamma.col(s);
        for (long t = 0; t < t_len; ++t) {
            double row_sum = packed.row(t).sum();
            if (row_sum > 0.0) packed.row(t) /= row_sum;
        }
        gamma = packed;
    }

    result.q.q = gamma;
    result.labels.labels.resize(t_len);
    for (long t = 0; t < t_len; ++t)
        result.labels.labels[t] = static_cast<int>(col_to_label[win[t]]);
    return result;
}

}  // namespace diar
