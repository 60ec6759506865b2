#pragma once

#include <Eigen/Dense>
#include <vector>

#include "diar/embedding.hpp"

namespace diar {

struct SimilarityMatrix {
    int n = 0;
    Eigen::MatrixXd values;  // n x n, symmetric
};

struct ClusterLabels {
    std::vector<int> labels;  // contiguous range 0..K-1
    int n_clusters() const;
};

enum class SimilarityMetric { plda, cosine };

// Pairwise window similarities. metric=plda expects preprocessed embeddings
// (e.dim == model rank) and computes log-likelihood ratios in O(n^2 R).
SimilarityMatrix similarity_matrix(const EmbeddingSequence& e, SimilarityMetric metric,
                                   const PLDAModel* model = nullptr);

// Average-linkage agglomeration: repeatedly merge the cluster pair with the
// highest average inter-cluster similarity while that average stays >=
// threshold. Ties go to the smallest cluster-index pair.
ClusterLabels ahc(const SimilarityMatrix& s, double threshold);

// Auto-tuning spectral clustering on the cosine affinity: the row-wise
// binarization level p and the cluster count K are picked from the eigengap
// of the pruned graph Laplacian. Dense eigendecomposition per candidate p,
// so O(n^3) each; intended for window counts in the low thousands.
ClusterLabels auto_spectral(const EmbeddingSequence& e, unsigned kmeans_seed = 17);

}  // namespace diar
