#include "diar/embedding.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "diar/errors.hpp"

namespace diar {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, int line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line_no, "bad number '" + tok + "'");
    if (!std::isfinite(v)) throw ParseError(line_no, "non-finite value");
    return v;
}

long parse_long(const std::string& tok, int line_no) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line_no, "bad integer '" + tok + "'");
    return v;
}

// Yields (line_no, fields) for every non-empty, non-comment line.
std::vector<std::pair<int, std::vector<std::string>>> content_lines(
    const std::string& text) {
    std::vector<std::pair<int, std::vector<std::string>>> out;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        out.emplace_back(line_no, split_ws(line));
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_time(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

EmbeddingSequence read_embeddings(const std::string& text) {
    auto lines = content_lines(text);
    if (lines.empty()) throw ParseError(1, "missing EMB1 header");
    const auto& [hline, header] = lines[0];
    if (header.size() != 6 || header[0] != "EMB1")
        throw ParseError(hline, "expected 'EMB1 <rec> <channel> <dim> <win_len> <win_shift>'");

    EmbeddingSequence e;
    e.recording_id = header[1];
    e.channel = static_cast<int>(parse_long(header[2], hline));
    e.dim = static_cast<int>(parse_long(header[3], hline));
    e.win_len = parse_double(header[4], hline);
    e.win_shift = parse_double(header[5], hline);
    if (e.channel < 1 || e.channel > 8) throw ParseError(hline, "channel out of range 1..8");
    if (e.dim < 1) throw ParseError(hline, "dim must be positive");
    if (e.win_len <= 0.0 || e.win_shift <= 0.0)
        throw ParseError(hline, "window geometry must be positive");

    for (size_t i = 1; i < lines.size(); ++i) {
        const auto& [line_no, f] = lines[i];
        if (f.size() != static_cast<size_t>(e.dim) + 2)
            throw ParseError(line_no, "expected start, end and " + std::to_string(e.dim) +
                                          " values");
        EmbeddingWindow w;
        w.start = parse_double(f[0], line_no);
        w.end = parse_double(f[1], line_no);
        if (w.end <= w.start) throw ParseError(line_no, "window end must exceed start");
        if (w.end - w.start > e.win_len + 1e-6)
            throw ParseError(line_no, "window longer than win_len");
        if (!e.windows.empty() && w.start < e.windows.back().start)
            throw ParseError(line_no, "windows not sorted by start");
        w.vector.resize(e.dim);
        for (int d = 0; d < e.dim; ++d) w.vector[d] = parse_double(f[2 + d], line_no);
        e.windows.push_back(std::move(w));
    }
    return e;
}

std::string write_embeddings(const EmbeddingSequence& e) {
    std::string out = "EMB1 " + e.recording_id + " " + std::to_string(e.channel) + " " +
                      std::to_string(e.dim) + " " + fmt(e.win_len) + " " +
                      fmt(e.win_shift) + "\n";
    for (const auto& w : e.windows) {
        out += fmt_time(w.start) + " " + fmt_time(w.end);
        for (int d = 0; d < e.dim; ++d) out += " " + fmt(w.vector[d]);
        out += "\n";
    }
    return out;
}

FrameTrack read_frame_track(const std::string& text) {
    auto lines = content_lines(text);
    if (lines.empty()) throw ParseError(1, "missing TRK1 header");
    const auto& [hline, header] = lines[0];
    if (header.size() != 4 || header[0] != "TRK1")
        throw ParseError(hline, "expected 'TRK1 <rec> <frame_shift> <dim>'");

    FrameTrack t;
    t.recording_id = header[1];
    t.frame_shift = parse_double(header[2], hline);
    t.dim = static_cast<int>(parse_long(header[3], hline));
    if (t.frame_shift <= 0.0) throw ParseError(hline, "frame_shift must be positive");
    if (t.dim < 1) throw ParseError(hline, "dim must be positive");

    const long n_frames = static_cast<long>(lines.size()) - 1;
    t.frames.resize(n_frames, t.dim);
    for (long i = 0; i < n_frames; ++i) {
        const auto& [line_no, f] = lines[i + 1];
        if (f.size() != static_cast<size_t>(t.dim) + 1)
            throw ParseError(line_no, "expected frame index and " + std::to_string(t.dim) +
                                          " values");
        if (parse_long(f[0], line_no) != i)
            throw ParseError(line_no, "frame indices must be contiguous from 0");
        for (int d = 0; d < t.dim; ++d) {
            double p = parse_double(f[1 + d], line_no);
            if (p < 0.0 || p > 1.0)
                throw ParseError(line_no, "posterior outside [0,1]");
            t.frames(i, d) = p;
        }
    }
    return t;
}

std::string write_frame_track(const FrameTrack& t) {
    std::string out = "TRK1 " + t.recording_id + " " + fmt(t.frame_shift) + " " +
                      std::to_string(t.dim) + "\n";
    for (long i = 0; i < t.frames.rows(); ++i) {
        out += std::to_string(i);
        for (int d = 0; d < t.dim; ++d) out += " " + fmt(t.frames(i, d));
        out += "\n";
    }
    return out;
}

PLDAModel read_plda(const std::string& text) {
    auto lines = content_lines(text);
    if (lines.empty()) throw ParseError(1, "missing PLDA1 header");
    const auto& [hline, header] = lines[0];
    if (header.size() != 3 || header[0] != "PLDA1")
        throw ParseError(hline, "expected 'PLDA1 <dim> <rank>'");

    PLDAModel m;
    m.dim = static_cast<int>(parse_long(header[1], hline));
    m.rank = static_cast<int>(parse_long(header[2], hline));
    if (m.dim < 1 || m.rank < 1 || m.rank > m.dim)
        throw ParseError(hline, "need 1 <= rank <= dim");
    if (lines.size() != static_cast<size_t>(m.rank) + 3)
        throw ParseError(hline, "expected mean, " + std::to_string(m.rank) +
                                    " transform rows and phi");

    auto read_row = [&](size_t idx, int n) {
        const auto& [line_no, f] = lines[idx];
        if (f.size() != static_cast<size_t>(n))
            throw ParseError(line_no, "expected " + std::to_string(n) + " values");
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = parse_double(f[i], line_no);
        return v;
    };
    m.mean = read_row(1, m.dim);
    m.transform.resize(m.rank, m.dim);
    for (int r = 0; r < m.rank; ++r) m.transform.row(r) = read_row(2 + r, m.dim);
    m.phi = read_row(2 + m.rank, m.rank);
    for (int r = 0; r < m.rank; ++r)
        if (m.phi[r] < 0.0)
            throw ParseError(static_cast<int>(lines[2 + m.rank].first),
                             "phi entries must be non-negative");
    return m;
}

std::string write_plda(const PLDAModel& m) {
    std::string out =
        "PLDA1 " + std::to_string(m.dim) + " " + std::to_string(m.rank) + "\n";
    auto append_row = [&out](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) {
            if (i) out += " ";
            out += fmt(v[i]);
        }
        out += "\n";
    };
    append_row(m.mean);
    for (int r = 0; r < m.rank; ++r) append_row(m.transform.row(r));
    append_row(m.phi);
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

EmbeddingSequence read_embeddings_file(const std::string& path) {
    return read_embeddings(read_text_file(path));
}

FrameTrack read_frame_track_file(const std::string& path) {
    return read_frame_track(read_text_file(path));
}

PLDAModel read_plda_file(const std::string& path) {
    return read_plda(read_text_file(path));
}

EmbeddingSequence preprocess(const EmbeddingSequence& e, const PLDAModel& m) {
    if (e.dim != m.dim)
        throw std::invalid_argument("embedding dim " + std::to_string(e.dim) +
                                    " does not match model dim " + std::to_string(m.dim));
    EmbeddingSequence out = e;
    out.dim = m.rank;
    for (auto& w : out.windows) {
        double norm = w.vector.norm();
        if (norm <= 0.0) throw std::invalid_argument("cannot length-normalize zero vector");
        w.vector = m.transform * (w.vector / norm - m.mean);
    }
    return out;
}

PldaTerms plda_terms(const PLDAModel& m) {
    PldaTerms t;
    Eigen::ArrayXd phi = m.phi.array();
    t.c0_sum = 0.5 * ((phi + 1.0).square() / (2.0 * phi + 1.0)).log().sum();
    t.k1 = 0.5 * (1.0 / (phi + 1.0) - (phi + 1.0) / (2.0 * phi + 1.0));
    t.k2 = phi / (2.0 * phi + 1.0);
    return t;
}

double plda_llr(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                const PLDAModel& m) {
    if (a.size() != m.rank || b.size() != m.rank)
        throw std::invalid_argument("plda_llr expects vectors of dim " +
                                    std::to_string(m.rank));
    PldaTerms t = plda_terms(m);
    return t.c0_sum + (t.k1 * (a.array().square() + b.array().square())).sum() +
           (t.k2 * a.array() * b.array()).sum();
}

PLDAModel estimate_plda(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& labeled) {
    std::map<std::string, std::vector<const Eigen::VectorXd*>> by_speaker;
    for (const auto& [spk, v] : labeled) by_speaker[spk].push_back(&v);
    if (by_speaker.size() < 2)
        throw std::invalid_argument("estimate_plda needs at least 2 speakers");
    for (const auto& [spk, vs] : by_speaker)
        if (vs.size() < 2)
            throw std::invalid_argument("speaker '" + spk + "' needs at least 2 vectors");

    const int dim = static_cast<int>(labeled[0].second.size());
    for (const auto& [spk, v] : labeled)
        if (v.size() != dim) throw std::invalid_argument("inconsistent vector dims");

    const double n_total = static_cast<double>(labeled.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& [spk, v] : labeled) mean += v;
    mean /= n_total;

    Eigen::MatrixXd within = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& [spk, vs] : by_speaker) {
        Eigen::VectorXd spk_mean = Eigen::VectorXd::Zero(dim);
        for (const auto* v : vs) spk_mean += *v;
        spk_mean /= static_cast<double>(vs.size());
        for (const auto* v : vs) {
            Eigen::VectorXd d = *v - spk_mean;
            within += d * d.transpose();
        }
        Eigen::VectorXd d = spk_mean - mean;
        between += static_cast<double>(vs.size()) * d * d.transpose();
    }
    within /= n_total - static_cast<double>(by_speaker.size());
    between /= n_total;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> wsolve(within);
    Eigen::VectorXd wvals = wsolve.eigenvalues().cwiseMax(1e-12);
    Eigen::MatrixXd whiten = wvals.cwiseInverse().cwiseSqrt().asDiagonal() *
                             wsolve.eigenvectors().transpose();

    Eigen::MatrixXd between_w = whiten * between * whiten.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bsolve(between_w);

    PLDAModel m;
    m.dim = dim;
    m.rank = dim;
    m.mean = mean;
    m.transform.resize(dim, dim);
    m.phi.resize(dim);
    for (int r = 0; r < dim; ++r) {
        // SelfAdjointEigenSolver sorts ascending; store descending.
        int src = dim - 1 - r;
        m.phi[r] = std::max(0.0, bsolve.eigenvalues()[src]);
        m.transform.row(r) = bsolve.eigenvectors().col(src).transpose() * whiten;
    }
    return m;
}

}  // namespace diar
