#include "mvclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mvclust/clustering.hpp"
#include "mvclust/errors.hpp"

namespace mvclust {

namespace {

struct Contingency {
    Tensor2D counts;  // pred cluster x true class
    std::size_t n = 0;
};

std::vector<std::size_t> compact(std::span<const int> labels, std::size_t& distinct) {
    std::map<int, std::size_t> ids;
    for (int l : labels) {
        if (l < 0) throw PreconditionError("metrics: negative label " + std::to_string(l));
        ids.emplace(l, 0);
    }
    std::size_t next = 0;
    for (auto& [label, id] : ids) id = next++;
    distinct = next;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
    return out;
}

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size())
        throw DimensionError("metrics: " + std::to_string(pred.size()) + " predicted vs " +
                             std::to_string(truth.size()) + " true labels");
    if (pred.empty()) throw PreconditionError("metrics: need at least one sample");
    std::size_t kp = 0, kt = 0;
    const auto p = compact(pred, kp);
    const auto t = compact(truth, kt);
    Contingency c{Tensor2D(kp, kt), pred.size()};
    for (std::size_t i = 0; i < p.size(); ++i) c.counts(p[i], t[i]) += 1.0;
    return c;
}

double entropy(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
}

}  // namespace

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const std::size_t k = std::max(c.counts.rows(), c.counts.cols());
    Tensor2D cost(k, k);
    for (std::size_t i = 0; i < c.counts.rows(); ++i)
        for (std::size_t j = 0; j < c.counts.cols(); ++j) cost(i, j) = -c.counts(i, j);
    const auto sigma = solve_assignment(cost);
    return -assignment_cost(cost, sigma) / static_cast<double>(c.n);
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const double n = static_cast<double>(c.n);
    std::vector<double> row(c.counts.rows(), 0.0), col(c.counts.cols(), 0.0);
    for (std::size_t i = 0; i < c.counts.rows(); ++i)
        for (std::size_t j = 0; j < c.counts.cols(); ++j) {
            row[i] += c.counts(i, j);
            col[j] += c.counts(i, j);
        }
    double mi = 0.0;
    for (std::size_t i = 0; i < c.counts.rows(); ++i)
        for (std::size_t j = 0; j < c.counts.cols(); ++j) {
            const double nij = c.counts(i, j);
            if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (row[i] * col[j]));
        }
    const double denom = 0.5 * (entropy(row, n) + entropy(col, n));
    if (denom <= 0.0) return 0.0;
    // Independent labelings can give a tiny negative from rounding.
    return std::clamp(mi / denom, 0.0, 1.0);
}

double purity(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    double total = 0.0;
    for (std::size_t i = 0; i < c.counts.rows(); ++i) {
        auto r = c.counts.row(i);
        total += *std::max_element(r.begin(), r.end());
    }
    return total / static_cast<double>(c.n);
}

MetricSet evaluate(std::span<const int> pred, std::span<const int> truth) {
    return {accuracy(pred, truth), nmi(pred, truth), purity(pred, truth)};
}

}  // namespace mvclust
