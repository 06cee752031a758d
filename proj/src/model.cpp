#include "mvclust/model.hpp"

#include <cmath>

#include "mvclust/errors.hpp"

namespace mvclust {

Mlp make_mlp(const std::vector<std::size_t>& widths, const std::string& name, Rng& rng) {
    if (widths.size() < 2) throw PreconditionError("make_mlp: need at least two widths");
    Mlp mlp;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor2D w(fan_out, fan_in);
        for (double& v : w.values()) v = rng.uniform(-bound, bound);
        const std::string prefix = name + "." + std::to_string(l);
        mlp.layers.push_back(
            Linear{ParamTensor(prefix + ".weight", std::move(w)),
                   ParamTensor(prefix + ".bias", Tensor2D(1, fan_out))});
    }
    return mlp;
}

Tensor2D mlp_forward(const Mlp& mlp, const Tensor2D& x, MlpTrace* trace) {
    if (x.cols() != mlp.in_dim())
        throw DimensionError("mlp_forward: input " + x.shape_string() + " but layer expects " +
                             std::to_string(mlp.in_dim()) + " columns");
    if (trace) {
        trace->inputs.clear();
        trace->pre.clear();
    }
    Tensor2D h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const Linear& layer = mlp.layers[l];
        Tensor2D y = matmul_nt(h, layer.weight.value);
        add_row_bias(y, layer.bias.value);
        const bool last = l + 1 == mlp.layers.size();
        if (trace) {
            trace->inputs.push_back(std::move(h));
            trace->pre.push_back(y);
        }
        h = last ? std::move(y) : relu(y);
    }
    return h;
}

Tensor2D mlp_backward(Mlp& mlp, const MlpTrace& trace, const Tensor2D& grad_out,
                      bool need_input_grad) {
    if (trace.inputs.size() != mlp.layers.size())
        throw PreconditionError("mlp_backward: trace does not belong to this MLP");
    Tensor2D g = grad_out;
    for (std::size_t l = mlp.layers.size(); l-- > 0;) {
        Linear& layer = mlp.layers[l];
        if (l + 1 != mlp.layers.size()) g = relu_backward(trace.pre[l], g);
        // y = x W^T + b:  dW = g^T x,  db = colsum(g),  dx = g W
        axpy(1.0, matmul_tn(g, trace.inputs[l]), layer.weight.grad);
        axpy(1.0, column_sums(g), layer.bias.grad);
        if (l == 0 && !need_input_grad) return {};
        g = matmul(g, layer.weight.value);
    }
    return g;
}

void collect_params(Mlp& mlp, std::vector<ParamTensor*>& out) {
    for (Linear& layer : mlp.layers) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
}

MflvcModel::MflvcModel(const ModelConfig& cfg, Rng& rng) : config_(cfg) {
    for (std::size_t m = 0; m < cfg.input_dims.size(); ++m) {
        std::vector<std::size_t> enc{cfg.input_dims[m]};
        enc.insert(enc.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
        enc.push_back(cfg.latent_dim);
        std::vector<std::size_t> dec(enc.rbegin(), enc.rend());
        const std::string tag = "view" + std::to_string(m);
        ViewAutoencoder ae;
        ae.encoder = make_mlp(enc, tag + ".encoder", rng);
        ae.decoder = make_mlp(dec, tag + ".decoder", rng);
        ae.input_dim = cfg.input_dims[m];
        ae.latent_dim = cfg.latent_dim;
        views_.push_back(std::move(ae));
    }
    heads_.feature_head = make_mlp({cfg.latent_dim, cfg.high_dim}, "feature_head", rng);
    std::vector<std::size_t> label{cfg.latent_dim};
    label.insert(label.end(), cfg.label_hidden.begin(), cfg.label_hidden.end());
    label.push_back(cfg.clusters);
    heads_.label_head = make_mlp(label, "label_head", rng);
}

ViewAutoencoder& MflvcModel::view(std::size_t m) {
    if (m >= views_.size())
        throw PreconditionError("view index " + std::to_string(m) + " out of range");
    return views_[m];
}

const ViewAutoencoder& MflvcModel::view(std::size_t m) const {
    if (m >= views_.size())
        throw PreconditionError("view index " + std::to_string(m) + " out of range");
    return views_[m];
}

Tensor2D MflvcModel::encode(std::size_t m, const Tensor2D& x) const {
    return mlp_forward(view(m).encoder, x);
}

Tensor2D MflvcModel::decode(std::size_t m, const Tensor2D& z) const {
    return mlp_forward(view(m).decoder, z);
}

Tensor2D MflvcModel::high_level(const Tensor2D& z) const {
    return mlp_forward(heads_.feature_head, z);
}

Tensor2D MflvcModel::cluster_assignments(const Tensor2D& z) const {
    return softmax_rows(mlp_forward(heads_.label_head, z));
}

std::vector<ParamTensor*> MflvcModel::params(ParamGroup group) {
    std::vector<ParamTensor*> out;
    switch (group) {
        case ParamGroup::encoders:
            for (auto& v : views_) collect_params(v.encoder, out);
            break;
        case ParamGroup::decoders:
            for (auto& v : views_) collect_params(v.decoder, out);
            break;
        case ParamGroup::feature_head:
            collect_params(heads_.feature_head, out);
            break;
        case ParamGroup::label_head:
            collect_params(heads_.label_head, out);
            break;
    }
    return out;
}

std::vector<ParamTensor*> MflvcModel::all_params() {
    std::vector<ParamTensor*> out;
    for (auto& v : views_) {
        collect_params(v.encoder, out);
        collect_params(v.decoder, out);
    }
    collect_params(heads_.feature_head, out);
    collect_params(heads_.label_head, out);
    return out;
}

std::vector<const ParamTensor*> MflvcModel::all_params() const {
    auto mut = const_cast<MflvcModel*>(this)->all_params();
    return {mut.begin(), mut.end()};
}

void MflvcModel::zero_grad() {
    for (ParamTensor* p : all_params()) p->zero_grad();
}

MflvcModel init_model(const ModelConfig& cfg, Rng& rng) {
    if (cfg.input_dims.empty()) throw PreconditionError("init_model: no views");
    for (std::size_t d : cfg.input_dims)
        if (d == 0) throw PreconditionError("init_model: view input dimension must be >= 1");
    for (std::size_t d : cfg.encoder_hidden)
        if (d == 0) throw PreconditionError("init_model: hidden width must be >= 1");
    for (std::size_t d : cfg.label_hidden)
        if (d == 0) throw PreconditionError("init_model: label hidden width must be >= 1");
    if (cfg.latent_dim == 0) throw PreconditionError("init_model: latent dimension L must be >= 1");
    if (cfg.high_dim == 0) throw PreconditionError("init_model: high-level dimension must be >= 1");
    if (cfg.clusters < 2) throw PreconditionError("init_model: K must be >= 2");
    return MflvcModel(cfg, rng);
}

}  // namespace mvclust
