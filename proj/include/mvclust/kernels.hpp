#pragma once

// Data-parallel inner loops. Every kernel exists twice: a plain serial
// reference kept for testing, and an OpenMP variant used by the library.
// The two produce bit-identical results because the per-element reduction
// order is the same; only the partition of output rows across threads
// differs. Tests pin that equivalence.

#include <cstddef>
#include <cstdint>
#include <span>

namespace mvclust::kernels {

namespace serial {

// C(m x n) = A(m x k) * B(k x n), all row-major, C overwritten.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);

// B(n x m) = A(m x n)^T
void transpose(const double* a, double* b, std::size_t m, std::size_t n);

// For each of n points (dim d) the index of the nearest of k centroids by
// squared Euclidean distance, ties to the lowest index; writes the distance.
void nearest_centroid(const double* points, const double* centroids, std::size_t n,
                      std::size_t k, std::size_t d, int* labels, double* sq_dist);

}  // namespace serial

namespace parallel {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
void transpose(const double* a, double* b, std::size_t m, std::size_t n);
void nearest_centroid(const double* points, const double* centroids, std::size_t n,
                      std::size_t k, std::size_t d, int* labels, double* sq_dist);

}  // namespace parallel

// Entry points the library calls: the OpenMP variant when built with it,
// otherwise the serial one.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
void transpose(const double* a, double* b, std::size_t m, std::size_t n);
void nearest_centroid(const double* points, const double* centroids, std::size_t n,
                      std::size_t k, std::size_t d, int* labels, double* sq_dist);

// Number of threads the parallel variants will use (1 without OpenMP).
int max_threads();

}  // namespace mvclust::kernels
