#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mvclust/clustering.hpp"
#include "mvclust/rng.hpp"
#include "mvclust/tensor.hpp"

namespace mvclust {

// M row-aligned views of the same N samples, optional ground truth.
struct MultiViewDataset {
    std::vector<Tensor2D> views;
    std::optional<Labels> labels;
    std::size_t clusters = 0;

    std::size_t num_views() const { return views.size(); }
    std::size_t num_samples() const { return views.empty() ? 0 : views.front().rows(); }
    std::vector<std::size_t> dims() const;
};

// Throws on misaligned views, empty views, or labels outside [0, K).
void validate(const MultiViewDataset& ds);

// Samples share a cluster-determined common code; every view adds its own
// private code and passes [common | private] through a fixed random
// nonlinear mixer (linear, tanh, linear) plus Gaussian noise.
struct SyntheticConfig {
    std::size_t samples = 1000;
    std::size_t views = 2;
    std::size_t clusters = 4;
    std::size_t common_dim = 4;
    std::size_t private_dim = 8;
    std::vector<std::size_t> view_dims{50, 50};
    double private_strength = 2.0;
    double noise_sigma = 0.1;
    double cluster_separation = 3.0;  // std of the cluster centres
    double cluster_jitter = 0.1;      // within-cluster std of the common code
    std::uint64_t seed = 1;
};

void validate(const SyntheticConfig& cfg);

MultiViewDataset generate_synthetic(const SyntheticConfig& cfg);

// Directory layout:
//   manifest.txt   key=value lines: views, samples, clusters, dim_0..dim_{M-1}
//   view_<m>.csv   one sample per line, comma-separated, shortest
//                  round-trip decimal
//   labels.csv     one integer per line (omitted when labels are absent)
void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir);
MultiViewDataset load_dataset(const std::filesystem::path& dir);

// One integer per line.
void write_labels(std::span<const int> labels, const std::filesystem::path& path);
Labels read_labels(const std::filesystem::path& path);

// One epoch: a seeded shuffle of 0..N-1 cut into consecutive batches; the
// last batch may be short.
std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t n, std::size_t batch_size,
                                                     Rng& rng);

// The same rows from every view.
std::vector<Tensor2D> gather_batch(std::span<const Tensor2D> views,
                                   std::span<const std::size_t> index);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace mvclust
