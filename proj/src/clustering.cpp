#include "diar/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

namespace diar {

namespace {

Eigen::MatrixXd stack_vectors(const EmbeddingSequence& e) {
    Eigen::MatrixXd x(e.windows.size(), e.dim);
    for (size_t i = 0; i < e.windows.size(); ++i) x.row(i) = e.windows[i].vector;
    return x;
}

Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd u = x;
    for (long i = 0; i < u.rows(); ++i) {
        double norm = u.row(i).norm();
        if (norm <= 0.0)
            throw std::invalid_argument("zero vector cannot be cosine-normalized");
        u.row(i) /= norm;
    }
    return u;
}

// Relabel arbitrary cluster ids to 0..K-1 in order of first appearance.
ClusterLabels canonical(const std::vector<int>& raw) {
    ClusterLabels out;
    out.labels.reserve(raw.size());
    std::vector<int> remap;
    for (int id : raw) {
        int found = -1;
        for (size_t k = 0; k < remap.size(); ++k)
            if (remap[k] == id) found = static_cast<int>(k);
        if (found < 0) {
            found = static_cast<int>(remap.size());
            remap.push_back(id);
        }
        out.labels.push_back(found);
    }
    return out;
}

void fisher_yates(std::vector<int>& idx, std::mt19937& rng) {
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng() % i]);
}

// Lloyd's algorithm with seeded random-point initialization. Ties in the
// nearest-center choice go to the lower center index.
std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::mt19937& rng,
                        int restarts, int max_iters) {
    const long n = points.rows();
    std::vector<int> best_assign(n, 0);
    double best_cost = std::numeric_limits<double>::infinity();

    std::vector<int> idx(n);
    for (long i = 0; i < n; ++i) idx[i] = static_cast<int>(i);

    for (int restart = 0; restart < restarts; ++restart) {
        fisher_yates(idx, rng);
        Eigen::MatrixXd centers(k, points.cols());
        for (int c = 0; c < k; ++c) centers.row(c) = points.row(idx[c]);

        std::vector<int> assign(n, -1);
        for (int iter = 0; iter < max_iters; ++iter) {
            bool changed = false;
            for (long i = 0; i < n; ++i) {
                int arg = 0;
                double best = (points.row(i) - centers.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    double d = (points.row(i) - centers.row(c)).squaredNorm();
                    if (d < best) {
                        best = d;
                        arg = c;
                    }
                }
                if (assign[i] != arg) {
                    assign[i] = arg;
                    changed = true;
                }
            }
            if (!changed) break;

            for (int c = 0; c < k; ++c) {
                Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
                long count = 0;
                for (long i = 0; i < n; ++i) {
                    if (assign[i] != c) continue;
                    sum += points.row(i);
                    ++count;
                }
                if (count > 0) {
                    centers.row(c) = sum / static_cast<double>(count);
                } else {
                    // Revive an empty cluster with the worst-fitting point.
                    long worst = 0;
                    double worst_d = -1.0;
                    for (long i = 0; i < n; ++i) {
                        double d =
                            (points.row(i) - centers.row(assign[i])).squaredNorm();
                        if (d > worst_d) {
                            worst_d = d;
                            worst = i;
                        }
                    }
                    centers.row(c) = points.row(worst);
                    assign[worst] = c;
                }
            }
        }

        double cost = 0.0;
        for (long i = 0; i < n; ++i)
            cost += (points.row(i) - centers.row(assign[i])).squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best_assign = assign;
        }
    }
    return best_assign;
}

}  // namespace

int ClusterLabels::n_clusters() const {
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    return k;
}

SimilarityMatrix similarity_matrix(const EmbeddingSequence& e, SimilarityMetric metric,
                                   const PLDAModel* model) {
    const long n = static_cast<long>(e.windows.size());
    SimilarityMatrix s;
    s.n = static_cast<int>(n);
    if (n == 0) return s;

    Eigen::MatrixXd x = stack_vectors(e);
    if (metric == SimilarityMetric::cosine) {
        Eigen::MatrixXd u = unit_rows(x);
        s.values = u * u.transpose();
        s.values.diagonal().setOnes();
        return s;
    }

    if (!model) throw std::invalid_argument("plda metric requires a model");
    if (e.dim != model->rank)
        throw std::invalid_argument("plda metric expects preprocessed embeddings");

    PldaTerms t = plda_terms(*model);
    Eigen::VectorXd p = (x.array().square().rowwise() * t.k1.transpose()).rowwise().sum();
    Eigen::MatrixXd g = x * t.k2.matrix().asDiagonal() * x.transpose();
    s.values = g;
    s.values.array() += t.c0_sum;
    s.values.rowwise() += p.transpose();
    s.values.colwise() += p;
    return s;
}

ClusterLabels ahc(const SimilarityMatrix& s, double threshold) {
    const int n = s.n;
    if (n < 1) throw std::invalid_argument("ahc needs at least one element");
    if (s.values.rows() != n || s.values.cols() != n)
        throw std::invalid_argument("similarity matrix shape mismatch");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(s.values(i, j) - s.values(j, i)) > 1e-9)
                throw std::invalid_argument("similarity matrix not symmetric");

    // Cluster slots are named by their smallest member; sums hold the total
    // pairwise similarity between slots, so the average is sum/(size_i*size_j).
    Eigen::MatrixXd sum = s.values;
    std::vector<long> size(n, 1);
    std::vector<char> active(n, 1);
    std::vector<int> version(n, 0);
    std::vector<std::vector<int>> members(n);
    for (int i = 0; i < n; ++i) members[i] = {i};

    struct Cand {
        double avg;
        int i, j, vi, vj;
    };
    // Highest average first; ties to the smallest (i, j).
    auto worse = [](const Cand& a, const Cand& b) {
        if (a.avg != b.avg) return a.avg < b.avg;
        if (a.i != b.i) return a.i > b.i;
        return a.j > b.j;
    };
    std::priority_queue<Cand, std::vector<Cand>, decltype(worse)> heap(worse);

    // Merged averages interpolate between the old ones, so a pair below the
    // threshold can never rise above it later; those are never pushed.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (s.values(i, j) >= threshold) heap.push({s.values(i, j), i, j, 0, 0});

    while (!heap.empty()) {
        Cand top = heap.top();
        heap.pop();
        if (!active[top.i] || !active[top.j] || version[top.i] != top.vi ||
            version[top.j] != top.vj)
            continue;

        const int keep = top.i, drop = top.j;
        for (int k = 0; k < n; ++k) {
            if (!active[k] || k == keep || k == drop) continue;
            double merged = sum(keep, k) + sum(drop, k);
            sum(keep, k) = sum(k, keep) = merged;
        }
        size[keep] += size[drop];
        active[drop] = 0;
        ++version[keep];
        members[keep].insert(members[keep].end(), members[drop].begin(),
                             members[drop].end());
        members[drop].clear();

        for (int k = 0; k < n; ++k) {
            if (!active[k] || k == keep) continue;
            int a = std::min(keep, k), b = std::max(keep, k);
            double avg = sum(a, b) / (static_cast<double>(size[a]) * size[b]);
            if (avg >= threshold) heap.push({avg, a, b, version[a], version[b]});
        }
    }

    std::vector<int> raw(n, -1);
    for (int c = 0; c < n; ++c)
        for (int m : members[c]) raw[m] = c;
    return canonical(raw);
}

ClusterLabels auto_spectral(const EmbeddingSequence& e, unsigned kmeans_seed) {
    const long n = static_cast<long>(e.windows.size());
    if (n < 2) throw std::invalid_argument("auto_spectral needs at least 2 windows");

    Eigen::MatrixXd u = unit_rows(stack_vectors(e));
    Eigen::MatrixXd affinity = u * u.transpose();
    const int half = static_cast<int>((n + 1) / 2);

    auto laplacian_for = [&](int p) {
        Eigen::MatrixXd bin = Eigen::MatrixXd::Zero(n, n);
        std::vector<int> order(n);
        for (long i = 0; i < n; ++i) {
            for (long j = 0; j < n; ++j) order[j] = static_cast<int>(j);
            // Top-p entries per row; ties by smaller column index.
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return affinity(i, a) > affinity(i, b);
            });
            for (int r = 0; r < p; ++r) bin(i, order[r]) = 1.0;
        }
        Eigen::MatrixXd sym = bin.cwiseMax(bin.transpose());
        Eigen::MatrixXd lap = -sym;
        lap.diagonal() += sym.rowwise().sum();
        return lap;
    };

    int best_p = 1, best_k = 1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= half; ++p) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_for(p),
                                                              Eigen::EigenvaluesOnly);
        const Eigen::VectorXd& ev = solver.eigenvalues();
        double gap = -1.0;
        int k_at_gap = 1;
        for (int k = 1; k <= half; ++k) {
            double g = ev[k] - ev[k - 1];
            if (g > gap) {
                gap = g;
                k_at_gap = k;
            }
        }
        double ratio = p / (gap + 1e-10);
        if (ratio < best_ratio) {
            best_ratio = ratio;
            best_p = p;
            best_k = k_at_gap;
        }
    }

    if (best_k == 1) {
        ClusterLabels out;
        out.labels.assign(n, 0);
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_for(best_p));
    Eigen::MatrixXd basis = solver.eigenvectors().leftCols(best_k);
    for (long i = 0; i < n; ++i) {
        double norm = basis.row(i).norm();
        if (norm > 0.0) basis.row(i) /= norm;
    }

    std::mt19937 rng(kmeans_seed);
    return canonical(kmeans(basis, best_k, rng, 10, 100));
}

}  // namespace diar
