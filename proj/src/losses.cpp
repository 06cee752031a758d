#include "mvclust/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvclust/errors.hpp"

namespace mvclust {

namespace {

double clamped_log(double x) { return std::log(std::max(x, kLogClamp)); }

// Rows scaled to (near) unit length; norms kept for the backward pass.
Tensor2D normalize_rows(const Tensor2D& x, std::vector<double>& norms) {
    Tensor2D u(x.rows(), x.cols());
    norms.assign(x.rows(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        double s = 0.0;
        for (double v : in) s += v * v;
        norms[r] = std::sqrt(s);
        const double c = norms[r] + kNormEps;
        auto out = u.row(r);
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] / c;
    }
    return u;
}

// Backward of u = x / (||x|| + eps):  dx = g/c - x (x.g) / (||x|| c^2).
Tensor2D normalize_rows_backward(const Tensor2D& x, const std::vector<double>& norms,
                                 const Tensor2D& grad_u) {
    Tensor2D g(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto xr = x.row(r);
        auto gu = grad_u.row(r);
        auto out = g.row(r);
        const double norm = norms[r];
        const double c = norm + kNormEps;
        double dot = 0.0;
        for (std::size_t k = 0; k < xr.size(); ++k) dot += xr[k] * gu[k];
        const double radial = norm > 0.0 ? dot / (norm * c * c) : 0.0;
        for (std::size_t k = 0; k < xr.size(); ++k) out[k] = gu[k] / c - xr[k] * radial;
    }
    return g;
}

void require_views(std::size_t count, const char* what) {
    if (count < 2)
        throw PreconditionError(std::string(what) + ": need at least 2 views, got " +
                                std::to_string(count));
}

}  // namespace

void validate(const ContrastiveConfig& cfg) {
    if (!(cfg.tau_feature > 0.0)) throw PreconditionError("tau_feature must be > 0");
    if (!(cfg.tau_label > 0.0)) throw PreconditionError("tau_label must be > 0");
    if (!(cfg.lambda_feature >= 0.0)) throw PreconditionError("lambda_feature must be >= 0");
    if (!(cfg.lambda_label >= 0.0)) throw PreconditionError("lambda_label must be >= 0");
}

double reconstruction_loss(std::span<const Tensor2D> x, std::span<const Tensor2D> x_hat,
                           std::vector<Tensor2D>* grad_x_hat) {
    if (x.size() != x_hat.size())
        throw DimensionError("reconstruction_loss: " + std::to_string(x.size()) +
                             " inputs vs " + std::to_string(x_hat.size()) + " reconstructions");
    if (grad_x_hat) grad_x_hat->clear();
    double total = 0.0;
    for (std::size_t m = 0; m < x.size(); ++m) {
        require_same_shape(x[m], x_hat[m], "reconstruction_loss");
        auto a = x[m].values();
        auto b = x_hat[m].values();
        Tensor2D g;
        if (grad_x_hat) g = Tensor2D(x[m].rows(), x[m].cols());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double diff = b[i] - a[i];
            total += diff * diff;
            if (grad_x_hat) g.values()[i] = 2.0 * diff;
        }
        if (grad_x_hat) grad_x_hat->push_back(std::move(g));
    }
    return total;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("cosine: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / ((std::sqrt(na) + kNormEps) * (std::sqrt(nb) + kNormEps));
}

double contrastive_rows(const Tensor2D& anchor, const Tensor2D& other, double tau,
                        Tensor2D* grad_anchor, Tensor2D* grad_other) {
    require_same_shape(anchor, other, "contrastive_rows");
    if (anchor.rows() == 0) throw PreconditionError("contrastive_rows: need at least one row");
    if (!(tau > 0.0)) throw PreconditionError("contrastive_rows: temperature must be > 0");

    const std::size_t n = anchor.rows();
    std::vector<double> norm_a, norm_o;
    const Tensor2D ua = normalize_rows(anchor, norm_a);
    const Tensor2D uo = normalize_rows(other, norm_o);
    const Tensor2D s_aa = matmul_nt(ua, ua);
    const Tensor2D s_ao = matmul_nt(ua, uo);

    const bool want_grad = grad_anchor || grad_other;
    // Softmax weights over the 2N-1 denominator terms, scaled by 1/(N tau).
    Tensor2D w_aa, w_ao;
    if (want_grad) {
        w_aa = Tensor2D(n, n);
        w_ao = Tensor2D(n, n);
    }
    const double inv_tau = 1.0 / tau;
    const double scale = 1.0 / (static_cast<double>(n) * tau);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = s_ao(i, 0) * inv_tau;
        for (std::size_t j = 0; j < n; ++j) {
            mx = std::max(mx, s_ao(i, j) * inv_tau);
            if (j != i) mx = std::max(mx, s_aa(i, j) * inv_tau);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sum += std::exp(s_ao(i, j) * inv_tau - mx);
            if (j != i) sum += std::exp(s_aa(i, j) * inv_tau - mx);
        }
        const double lse = mx + std::log(sum);
        total += lse - s_ao(i, i) * inv_tau;
        if (want_grad) {
            for (std::size_t j = 0; j < n; ++j) {
                w_ao(i, j) = std::exp(s_ao(i, j) * inv_tau - lse) * scale;
                if (j != i) w_aa(i, j) = std::exp(s_aa(i, j) * inv_tau - lse) * scale;
            }
            w_ao(i, i) -= scale;
        }
    }
    const double loss = total / static_cast<double>(n);

    if (want_grad) {
        // d(loss)/d(ua) = (W_aa + W_aa^T) ua + W_ao uo,  d(loss)/d(uo) = W_ao^T ua
        Tensor2D sym = w_aa;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) sym(i, j) += w_aa(j, i);
        if (grad_anchor) {
            Tensor2D gua = matmul(sym, ua);
            axpy(1.0, matmul(w_ao, uo), gua);
            *grad_anchor = normalize_rows_backward(anchor, norm_a, gua);
        }
        if (grad_other) {
            const Tensor2D guo = matmul_tn(w_ao, ua);
            *grad_other = normalize_rows_backward(other, norm_o, guo);
        }
    }
    return loss;
}

double feature_contrastive_pair(const Tensor2D& h_m, const Tensor2D& h_n, double tau,
                                Tensor2D* grad_m, Tensor2D* grad_n) {
    return contrastive_rows(h_m, h_n, tau, grad_m, grad_n);
}

double feature_contrastive_total(std::span<const Tensor2D> h, double tau,
                                 std::vector<Tensor2D>* grads) {
    require_views(h.size(), "feature_contrastive_total");
    if (grads) {
        grads->clear();
        for (const auto& v : h) grads->emplace_back(v.rows(), v.cols());
    }
    double total = 0.0;
    Tensor2D gm, gn;
    for (std::size_t m = 0; m < h.size(); ++m) {
        for (std::size_t n = 0; n < h.size(); ++n) {
            if (n == m) continue;
            total += contrastive_rows(h[m], h[n], tau, grads ? &gm : nullptr,
                                      grads ? &gn : nullptr);
            if (grads) {
                axpy(0.5, gm, (*grads)[m]);
                axpy(0.5, gn, (*grads)[n]);
            }
        }
    }
    return 0.5 * total;
}

double label_contrastive_pair(const Tensor2D& q_m, const Tensor2D& q_n, double tau,
                              Tensor2D* grad_m, Tensor2D* grad_n) {
    require_same_shape(q_m, q_n, "label_contrastive_pair");
    Tensor2D gm, gn;
    const double loss = contrastive_rows(transpose(q_m), transpose(q_n), tau,
                                         grad_m ? &gm : nullptr, grad_n ? &gn : nullptr);
    if (grad_m) *grad_m = transpose(gm);
    if (grad_n) *grad_n = transpose(gn);
    return loss;
}

double cluster_balance(const Tensor2D& q, Tensor2D* grad) {
    const std::size_t n = q.rows();
    if (n == 0) throw PreconditionError("cluster_balance: need at least one row");
    const Tensor2D s = column_sums(q);
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    std::vector<double> ds(q.cols());
    for (std::size_t j = 0; j < q.cols(); ++j) {
        const double sj = s(0, j) * inv_n;
        total += sj * clamped_log(sj);
        ds[j] = clamped_log(sj) + (sj > kLogClamp ? 1.0 : 0.0);
    }
    if (grad) {
        *grad = Tensor2D(q.rows(), q.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < q.cols(); ++j) (*grad)(i, j) = ds[j] * inv_n;
    }
    return total;
}

double label_consistency_loss(std::span<const Tensor2D> q, double tau,
                              std::vector<Tensor2D>* grads) {
    require_views(q.size(), "label_consistency_loss");
    if (grads) {
        grads->clear();
        for (const auto& v : q) grads->emplace_back(v.rows(), v.cols());
    }
    double contrast = 0.0;
    Tensor2D gm, gn;
    for (std::size_t m = 0; m < q.size(); ++m) {
        for (std::size_t n = 0; n < q.size(); ++n) {
            if (n == m) continue;
            contrast += label_contrastive_pair(q[m], q[n], tau, grads ? &gm : nullptr,
                                               grads ? &gn : nullptr);
            if (grads) {
                axpy(0.5, gm, (*grads)[m]);
                axpy(0.5, gn, (*grads)[n]);
            }
        }
    }
    double balance = 0.0;
    Tensor2D gb;
    for (std::size_t m = 0; m < q.size(); ++m) {
        balance += cluster_balance(q[m], grads ? &gb : nullptr);
        if (grads) axpy(1.0, gb, (*grads)[m]);
    }
    return 0.5 * contrast + balance;
}

double total_contrastive_loss(const LossComponents& parts, const ContrastiveConfig& cfg) {
    return parts.reconstruction + cfg.lambda_feature * parts.feature +
           cfg.lambda_label * parts.label;
}

double finetune_cross_entropy(std::span<const Tensor2D> targets, std::span<const Tensor2D> q,
                              std::vector<Tensor2D>* grads) {
    if (targets.size() != q.size())
        throw DimensionError("finetune_cross_entropy: " + std::to_string(targets.size()) +
                             " target matrices vs " + std::to_string(q.size()) + " views");
    if (grads) grads->clear();
    double total = 0.0;
    for (std::size_t m = 0; m < q.size(); ++m) {
        require_same_shape(targets[m], q[m], "finetune_cross_entropy");
        Tensor2D g;
        if (grads) g = Tensor2D(q[m].rows(), q[m].cols());
        for (std::size_t i = 0; i < q[m].rows(); ++i) {
            auto t = targets[m].row(i);
            std::size_t hot = t.size(), ones = 0;
            for (std::size_t j = 0; j < t.size(); ++j) {
                if (t[j] == 1.0) {
                    hot = j;
                    ++ones;
                } else if (t[j] != 0.0) {
                    ones = 2;
                }
            }
            if (ones != 1)
                throw PreconditionError("finetune_cross_entropy: target row " +
                                        std::to_string(i) + " of view " + std::to_string(m) +
                                        " is not one-hot");
            const double qv = q[m](i, hot);
            total -= clamped_log(qv);
            if (grads && qv > kLogClamp) g(i, hot) = -1.0 / qv;
        }
        if (grads) grads->push_back(std::move(g));
    }
    return total;
}

}  // namespace mvclust
