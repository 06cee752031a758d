#include "mvclust/kernels.hpp"

#include <algorithm>
#include <limits>

#ifdef MVCLUST_HAVE_OPENMP
#include <omp.h>
#endif

namespace mvclust::kernels {

namespace {

// Row i of C = sum_k A(i,k) * B(k,:), accumulated in k order. This is the same
// per-element summation order as the naive triple loop, so results match it
// bit for bit while the inner loop vectorizes over the row of B.
inline void gemm_row(const double* a_row, const double* b, double* c_row, std::size_t k,
                     std::size_t n) {
    std::fill(c_row, c_row + n, 0.0);
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = a_row[kk];
        const double* b_row = b + kk * n;
        for (std::size_t j = 0; j < n; ++j) c_row[j] += aik * b_row[j];
    }
}

// Four rows of C at once: each row of B is loaded once per four rows of A.
// Every C element still sums its k products in ascending k.
inline void gemm_rows4(const double* a, const double* b, double* c, std::size_t k,
                       std::size_t n) {
    double* c0 = c;
    double* c1 = c + n;
    double* c2 = c + 2 * n;
    double* c3 = c + 3 * n;
    std::fill(c, c + 4 * n, 0.0);
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double a0 = a[kk];
        const double a1 = a[k + kk];
        const double a2 = a[2 * k + kk];
        const double a3 = a[3 * k + kk];
        const double* b_row = b + kk * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double bj = b_row[j];
            c0[j] += a0 * bj;
            c1[j] += a1 * bj;
            c2[j] += a2 * bj;
            c3[j] += a3 * bj;
        }
    }
}

inline void nearest_one(const double* p, const double* centroids, std::size_t k, std::size_t d,
                        int* label, double* sq_dist) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const double* c = centroids + j * d;
        double s = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff = p[t] - c[t];
            s += diff * diff;
        }
        if (s < best) {
            best = s;
            best_j = static_cast<int>(j);
        }
    }
    *label = best_j;
    *sq_dist = best;
}

constexpr std::size_t kTransposeBlock = 32;

inline void transpose_block(const double* a, double* b, std::size_t m, std::size_t n,
                            std::size_t i0, std::size_t j0) {
    const std::size_t i1 = std::min(i0 + kTransposeBlock, m);
    const std::size_t j1 = std::min(j0 + kTransposeBlock, n);
    for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) b[j * m + i] = a[i * n + j];
}

}  // namespace

namespace serial {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[kk * n + j];
            c[i * n + j] = s;
        }
    }
}

void transpose(const double* a, double* b, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) b[j * m + i] = a[i * n + j];
}

void nearest_centroid(const double* points, const double* centroids, std::size_t n,
                      std::size_t k, std::size_t d, int* labels, double* sq_dist) {
    for (std::size_t i = 0; i < n; ++i)
        nearest_one(points + i * d, centroids, k, d, labels + i, sq_dist + i);
}

}  // namespace serial

namespace parallel {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    const auto blocks = static_cast<std::ptrdiff_t>(m / 4);
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
    for (std::ptrdiff_t ib = 0; ib < blocks; ++ib)
        gemm_rows4(a + 4 * ib * k, b, c + 4 * ib * n, k, n);
    for (std::size_t i = 4 * (m / 4); i < m; ++i) gemm_row(a + i * k, b, c + i * n, k, n);
}

void transpose(const double* a, double* b, std::size_t m, std::size_t n) {
    const auto row_blocks = static_cast<std::ptrdiff_t>((m + kTransposeBlock - 1) / kTransposeBlock);
#pragma omp parallel for schedule(static) if (m * n > 65536)
    for (std::ptrdiff_t ib = 0; ib < row_blocks; ++ib)
        for (std::size_t j0 = 0; j0 < n; j0 += kTransposeBlock)
            transpose_block(a, b, m, n, static_cast<std::size_t>(ib) * kTransposeBlock, j0);
}

void nearest_centroid(const double* points, const double* centroids, std::size_t n,
                      std::size_t k, std::size_t d, int* labels, double* sq_dist) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * d > 16384)
    for (std::ptrdiff_t i = 0; i < count; ++i)
        nearest_one(points + i * d, centroids, k, d, labels + i, sq_dist + i);
}

}  // namespace parallel

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    parallel::gemm_nn(a, b, c, m, k, n);
}

void transpose(const double* a, double* b, std::size_t m, std::size_t n) {
    parallel::transpose(a, b, m, n);
}

void nearest_centroid(const double* points, const double* centroids, std::size_t n,
                      std::size_t k, std::size_t d, int* labels, double* sq_dist) {
    parallel::nearest_centroid(points, centroids, n, k, d, labels, sq_dist);
}

int max_threads() {
#ifdef MVCLUST_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace mvclust::kernels
