#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mvclust/adam.hpp"
#include "mvclust/rng.hpp"
#include "mvclust/tensor.hpp"

namespace mvclust {

// Fully connected layer y = x W^T + b, W stored out x in, b as 1 x out.
struct Linear {
    ParamTensor weight;
    ParamTensor bias;

    std::size_t in_dim() const { return weight.value.cols(); }
    std::size_t out_dim() const { return weight.value.rows(); }
};

// Stack of Linear layers with ReLU between consecutive layers and a linear
// final layer.
struct Mlp {
    std::vector<Linear> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
};

// Intermediate values a backward pass needs.
struct MlpTrace {
    std::vector<Tensor2D> inputs;  // input seen by each layer
    std::vector<Tensor2D> pre;     // each layer's output before activation
};

// `widths` lists every layer boundary, e.g. {D, 256, 128, L}. Weights are
// uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
Mlp make_mlp(const std::vector<std::size_t>& widths, const std::string& name, Rng& rng);

Tensor2D mlp_forward(const Mlp& mlp, const Tensor2D& x, MlpTrace* trace = nullptr);

// Accumulates parameter gradients into each layer's grad buffers and returns
// the gradient with respect to the MLP input (empty when `need_input_grad`
// is false, which skips the first layer's input product).
Tensor2D mlp_backward(Mlp& mlp, const MlpTrace& trace, const Tensor2D& grad_out,
                      bool need_input_grad = true);

void collect_params(Mlp& mlp, std::vector<ParamTensor*>& out);

struct ModelConfig {
    std::vector<std::size_t> input_dims;
    std::vector<std::size_t> encoder_hidden{256, 128};  // decoder mirrors it
    std::size_t latent_dim = 64;
    std::size_t high_dim = 32;
    std::vector<std::size_t> label_hidden;  // empty: one linear layer L -> K
    std::size_t clusters = 2;
};

struct ViewAutoencoder {
    Mlp encoder;  // D_m -> L
    Mlp decoder;  // L -> D_m
    std::size_t input_dim = 0;
    std::size_t latent_dim = 0;
};

// Heads shared by every view: a single linear layer to the high-level
// feature space and a label MLP ending in a row softmax.
struct SharedHeads {
    Mlp feature_head;
    Mlp label_head;
};

enum class ParamGroup { encoders, decoders, feature_head, label_head };

class MflvcModel {
public:
    MflvcModel() = default;
    MflvcModel(const ModelConfig& cfg, Rng& rng);

    const ModelConfig& config() const { return config_; }
    std::size_t num_views() const { return views_.size(); }
    std::size_t clusters() const { return config_.clusters; }

    ViewAutoencoder& view(std::size_t m);
    const ViewAutoencoder& view(std::size_t m) const;
    SharedHeads& heads() { return heads_; }
    const SharedHeads& heads() const { return heads_; }

    Tensor2D encode(std::size_t m, const Tensor2D& x) const;
    Tensor2D decode(std::size_t m, const Tensor2D& z) const;
    Tensor2D high_level(const Tensor2D& z) const;
    Tensor2D cluster_assignments(const Tensor2D& z) const;

    std::vector<ParamTensor*> params(ParamGroup group);
    std::vector<ParamTensor*> all_params();
    std::vector<const ParamTensor*> all_params() const;

    void zero_grad();

private:
    ModelConfig config_;
    std::vector<ViewAutoencoder> views_;
    SharedHeads heads_;
};

// init_model with precondition checks: every dim >= 1, latent/high >= 1,
// clusters >= 2, at least one view.
MflvcModel init_model(const ModelConfig& cfg, Rng& rng);

}  // namespace mvclust
