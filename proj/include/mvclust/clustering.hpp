#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvclust/rng.hpp"
#include "mvclust/tensor.hpp"

namespace mvclust {

using Labels = std::vector<int>;

struct KmeansOptions {
    std::size_t max_iter = 300;
    std::size_t n_restarts = 10;
};

struct KmeansResult {
    Tensor2D centroids;  // K x d
    Labels labels;       // nearest centroid of every point
    double objective = 0.0;
    std::size_t iterations = 0;
    // Objective after each assignment step of the winning restart.
    std::vector<double> history;
};

// Lloyd's algorithm with greedy k-means++ seeding, best of n_restarts by
// objective. The objective is checked to be non-increasing after every
// iteration; a violation throws NumericalError. An emptied cluster gets its
// centroid moved to the point farthest from its current centroid.
KmeansResult kmeans(const Tensor2D& points, std::size_t k, Rng& rng,
                    const KmeansOptions& opts = {});

// Row argmax, ties to the lowest index.
Labels hard_labels(const Tensor2D& q);

// m~(i, j) = #{n : label_head[n] = i and kmeans[n] = j}
Tensor2D cooccurrence_counts(std::span<const int> label_head, std::span<const int> kmeans_labels,
                             std::size_t k);

// max(m~) - m~ : minimizing it over permutations maximizes agreement.
Tensor2D build_cost_matrix(std::span<const int> label_head, std::span<const int> kmeans_labels,
                           std::size_t k);

// Row-to-column permutation minimizing sum_i cost(i, sigma(i)). Among optimal
// permutations the lexicographically smallest is returned. O(K^3) shortest
// augmenting path per solve.
std::vector<std::size_t> solve_assignment(const Tensor2D& cost);

double assignment_cost(const Tensor2D& cost, std::span<const std::size_t> sigma);

// One-hot targets: a sample with K-means label s gets index k where
// sigma(k) = s, i.e. K-means clusters renamed into the label head's indexing.
Tensor2D modify_pseudo_labels(std::span<const int> kmeans_labels,
                              std::span<const std::size_t> sigma, std::size_t k);

// argmax_j of the view-mean of q_ij, ties to the lowest index.
Labels final_labels(std::span<const Tensor2D> q);

struct MatchResult {
    Tensor2D cost;                       // K x K
    std::vector<std::size_t> assignment; // label-head cluster -> K-means cluster
    Tensor2D targets;                    // N x K one-hot
    KmeansResult kmeans;
};

// K-means on one view's high-level features, matched against that view's
// label-head assignments.
MatchResult match_view(const Tensor2D& high_level, const Tensor2D& q, Rng& rng,
                       const KmeansOptions& opts = {});

}  // namespace mvclust
