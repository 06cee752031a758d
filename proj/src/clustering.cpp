#include "mvclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mvclust/errors.hpp"
#include "mvclust/kernels.hpp"

namespace mvclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double d = a[t] - b[t];
        s += d * d;
    }
    return s;
}

// Greedy k-means++: each new centre is the best of 2 + floor(ln k) candidates
// drawn proportionally to the squared distance to the nearest chosen centre.
Tensor2D seed_centroids(const Tensor2D& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Tensor2D c(k, d);
    const auto first = static_cast<std::size_t>(rng.below(n));
    std::copy(x.row(first).begin(), x.row(first).end(), c.row(0).begin());

    std::vector<double> closest(n);
    for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(x.row(i), c.row(0));
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

    std::vector<double> candidate_closest(n), best_closest(n);
    for (std::size_t j = 1; j < k; ++j) {
        double potential = 0.0;
        for (double v : closest) potential += v;
        std::size_t best = 0;
        double best_potential = kInf;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t cand = 0;
            if (potential > 0.0) {
                const double target = rng.uniform() * potential;
                double acc = 0.0;
                cand = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += closest[i];
                    if (acc > target) {
                        cand = i;
                        break;
                    }
                }
            } else {
                cand = static_cast<std::size_t>(rng.below(n));
            }
            double cand_potential = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                candidate_closest[i] = std::min(closest[i], squared_distance(x.row(i), x.row(cand)));
                cand_potential += candidate_closest[i];
            }
            if (cand_potential < best_potential) {
                best_potential = cand_potential;
                best = cand;
                best_closest.swap(candidate_closest);
            }
        }
        std::copy(x.row(best).begin(), x.row(best).end(), c.row(j).begin());
        closest = best_closest;
    }
    return c;
}

KmeansResult lloyd(const Tensor2D& x, Tensor2D centroids, std::size_t max_iter) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t k = centroids.rows();
    KmeansResult r;
    r.labels.assign(n, 0);
    Labels previous;
    std::vector<double> dist(n);
    for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
        kernels::nearest_centroid(x.data(), centroids.data(), n, k, d, r.labels.data(),
                                  dist.data());
        double objective = 0.0;
        for (double v : dist) objective += v;
        if (!r.history.empty()) {
            const double prev = r.history.back();
            if (objective > prev + 1e-12 * std::max(prev, 1.0))
                throw NumericalError("kmeans: objective increased from " + std::to_string(prev) +
                                     " to " + std::to_string(objective));
        }
        r.history.push_back(objective);
        r.iterations = iter + 1;
        if (r.labels == previous || iter + 1 >= max_iter) break;
        previous = r.labels;

        // Update step.
        Tensor2D sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(r.labels[i]);
            ++counts[j];
            auto row = x.row(i);
            auto s = sums.row(j);
            for (std::size_t t = 0; t < d; ++t) s[t] += row[t];
        }
        std::vector<bool> taken(n, false);
        for (std::size_t j = 0; j < k; ++j) {
            auto c = centroids.row(j);
            if (counts[j] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[j]);
                auto s = sums.row(j);
                for (std::size_t t = 0; t < d; ++t) c[t] = s[t] * inv;
                continue;
            }
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i] && dist[i] > far_dist) {
                    far_dist = dist[i];
                    far = i;
                }
            taken[far] = true;
            std::copy(x.row(far).begin(), x.row(far).end(), c.begin());
        }
    }
    r.objective = r.history.back();
    r.centroids = std::move(centroids);
    return r;
}

// Minimum assignment cost of a square matrix by the
// potentials-based Hungarian method.
double hungarian(const Tensor2D& a, std::vector<std::size_t>* sigma) {
    const std::size_t n = a.rows();
    if (sigma) sigma->assign(n, 0);
    if (n == 0) return 0.0;
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> s(n);
    for (std::size_t j = 1; j <= n; ++j) s[p[j] - 1] = j - 1;
    if (sigma) *sigma = s;
    return assignment_cost(a, s);
}

void require_labels_in_range(std::span<const int> labels, std::size_t k, const char* what) {
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= k)
            throw PreconditionError(std::string(what) + ": label " + std::to_string(l) +
                                    " outside [0, " + std::to_string(k) + ")");
}

}  // namespace

KmeansResult kmeans(const Tensor2D& points, std::size_t k, Rng& rng, const KmeansOptions& opts) {
    if (k == 0) throw PreconditionError("kmeans: K must be >= 1");
    if (points.rows() < k)
        throw PreconditionError("kmeans: N = " + std::to_string(points.rows()) +
                                " is smaller than K = " + std::to_string(k));
    require_finite(points, "kmeans input");
    KmeansResult best;
    bool have = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(opts.n_restarts, 1); ++r) {
        KmeansResult cur = lloyd(points, seed_centroids(points, k, rng), opts.max_iter);
        if (!have || cur.objective < best.objective) {
            best = std::move(cur);
            have = true;
        }
    }
    return best;
}

Labels hard_labels(const Tensor2D& q) {
    Labels out(q.rows(), 0);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        auto row = q.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

Tensor2D cooccurrence_counts(std::span<const int> label_head, std::span<const int> kmeans_labels,
                             std::size_t k) {
    if (label_head.size() != kmeans_labels.size())
        throw DimensionError("cooccurrence_counts: " + std::to_string(label_head.size()) +
                             " vs " + std::to_string(kmeans_labels.size()) + " labels");
    require_labels_in_range(label_head, k, "cooccurrence_counts");
    require_labels_in_range(kmeans_labels, k, "cooccurrence_counts");
    Tensor2D m(k, k);
    for (std::size_t n = 0; n < label_head.size(); ++n) m(label_head[n], kmeans_labels[n]) += 1.0;
    return m;
}

Tensor2D build_cost_matrix(std::span<const int> label_head, std::span<const int> kmeans_labels,
                           std::size_t k) {
    Tensor2D m = cooccurrence_counts(label_head, kmeans_labels, k);
    if (m.empty()) return m;
    const double mx = *std::max_element(m.values().begin(), m.values().end());
    for (double& v : m.values()) v = mx - v;
    return m;
}

double assignment_cost(const Tensor2D& cost, std::span<const std::size_t> sigma) {
    double s = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) s += cost(i, sigma[i]);
    return s;
}

std::vector<std::size_t> solve_assignment(const Tensor2D& cost) {
    if (cost.rows() != cost.cols())
        throw DimensionError("solve_assignment: cost matrix must be square, got " +
                             cost.shape_string());
    require_finite(cost, "solve_assignment");
    const std::size_t n = cost.rows();
    std::vector<std::size_t> fallback;
    const double optimum = hungarian(cost, &fallback);
    const double tol = 1e-9 * std::max(1.0, std::abs(optimum));

    // Fix rows in order, each to the smallest column that still admits an
    // optimal completion.
    std::vector<std::size_t> sigma(n);
    std::vector<std::size_t> free_cols(n);
    for (std::size_t j = 0; j < n; ++j) free_cols[j] = j;
    double fixed = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t rest = n - r - 1;
        std::size_t pick = free_cols.size();
        double pick_total = kInf;
        for (std::size_t idx = 0; idx < free_cols.size(); ++idx) {
            Tensor2D sub(rest, rest);
            for (std::size_t i = 0; i < rest; ++i) {
                std::size_t cj = 0;
                for (std::size_t jj = 0; jj < free_cols.size(); ++jj) {
                    if (jj == idx) continue;
                    sub(i, cj++) = cost(r + 1 + i, free_cols[jj]);
                }
            }
            const double total = fixed + cost(r, free_cols[idx]) + hungarian(sub, nullptr);
            if (total <= optimum + tol) {
                pick = idx;
                pick_total = total;
                break;
            }
            if (total < pick_total) {
                pick_total = total;
                pick = idx;
            }
        }
        sigma[r] = free_cols[pick];
        fixed += cost(r, free_cols[pick]);
        free_cols.erase(free_cols.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    // Rounding in the refinement can only make it worse than the plain
    // solution; keep whichever is cheaper.
    if (assignment_cost(cost, sigma) > assignment_cost(cost, fallback) + tol) return fallback;
    return sigma;
}

Tensor2D modify_pseudo_labels(std::span<const int> kmeans_labels,
                              std::span<const std::size_t> sigma, std::size_t k) {
    if (sigma.size() != k)
        throw DimensionError("modify_pseudo_labels: assignment of size " +
                             std::to_string(sigma.size()) + " for K = " + std::to_string(k));
    std::vector<std::size_t> inverse(k, k);
    for (std::size_t row = 0; row < k; ++row) {
        if (sigma[row] >= k || inverse[sigma[row]] != k)
            throw PreconditionError("modify_pseudo_labels: assignment is not a permutation");
        inverse[sigma[row]] = row;
    }
    require_labels_in_range(kmeans_labels, k, "modify_pseudo_labels");
    Tensor2D p(kmeans_labels.size(), k);
    for (std::size_t i = 0; i < kmeans_labels.size(); ++i) p(i, inverse[kmeans_labels[i]]) = 1.0;
    return p;
}

Labels final_labels(std::span<const Tensor2D> q) {
    if (q.empty()) throw PreconditionError("final_labels: no views");
    // argmax of the sum equals argmax of the mean; skipping the 1/M scale
    // keeps ties exact.
    Tensor2D sum(q[0].rows(), q[0].cols());
    for (const Tensor2D& v : q) {
        require_same_shape(q[0], v, "final_labels");
        axpy(1.0, v, sum);
    }
    return hard_labels(sum);
}

MatchResult match_view(const Tensor2D& high_level, const Tensor2D& q, Rng& rng,
                       const KmeansOptions& opts) {
    if (high_level.rows() != q.rows())
        throw DimensionError("match_view: " + std::to_string(high_level.rows()) +
                             " feature rows vs " + std::to_string(q.rows()) + " assignment rows");
    const std::size_t k = q.cols();
    MatchResult r;
    r.kmeans = kmeans(high_level, k, rng, opts);
    const Labels anchors = hard_labels(q);
    r.cost = build_cost_matrix(anchors, r.kmeans.labels, k);
    r.assignment = solve_assignment(r.cost);
    r.targets = modify_pseudo_labels(r.kmeans.labels, r.assignment, k);
    return r;
}

}  // namespace mvclust
