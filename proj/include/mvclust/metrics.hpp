#pragma once

#include <span>

namespace mvclust {

// Clustering quality against ground truth. Label ids are arbitrary
// non-negative integers and need not be contiguous. All three throw
// DimensionError on length mismatch and PreconditionError on empty input.

// Fraction of samples agreeing under the best one-to-one map from predicted
// clusters to classes (Hungarian on the negated contingency table).
double accuracy(std::span<const int> pred, std::span<const int> truth);

// Mutual information over the arithmetic mean of the two entropies (natural
// log). 0/0 is taken as 0.
double nmi(std::span<const int> pred, std::span<const int> truth);

// (1/N) sum over predicted clusters of the size of its largest class.
double purity(std::span<const int> pred, std::span<const int> truth);

struct MetricSet {
    double acc = 0.0;
    double nmi = 0.0;
    double pur = 0.0;
};

MetricSet evaluate(std::span<const int> pred, std::span<const int> truth);

}  // namespace mvclust
