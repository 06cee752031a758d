#pragma once

#include <span>
#include <vector>

#include "mvclust/tensor.hpp"

namespace mvclust {

// Guard added to vector norms in every cosine similarity.
inline constexpr double kNormEps = 1e-12;
// Lower clamp applied to every log argument.
inline constexpr double kLogClamp = 1e-12;

struct ContrastiveConfig {
    double tau_feature = 0.5;  // feature temperature
    double tau_label = 1.0;    // label temperature
    double lambda_feature = 1.0;
    double lambda_label = 1.0;
};

void validate(const ContrastiveConfig& cfg);

// Every function below returns the loss value. When a gradient output is
// non-null it is overwritten with d(loss)/d(input), shaped like the input.

// sum over views and samples of ||x - x_hat||^2
double reconstruction_loss(std::span<const Tensor2D> x, std::span<const Tensor2D> x_hat,
                           std::vector<Tensor2D>* grad_x_hat = nullptr);

// <a, b> / ((||a|| + eps)(||b|| + eps))
double cosine(std::span<const double> a, std::span<const double> b);

// Contrastive loss with the rows of `anchor` as anchors. Row i of `other` is
// the positive for anchor i; every other row of both matrices is a negative;
// the anchor's pairing with itself is removed from the denominator.
//
//   l = -(1/N) sum_i log( e^{d(a_i,o_i)/tau} /
//         (sum_{j != i} e^{d(a_i,a_j)/tau} + sum_j e^{d(a_i,o_j)/tau}) )
double contrastive_rows(const Tensor2D& anchor, const Tensor2D& other, double tau,
                        Tensor2D* grad_anchor = nullptr, Tensor2D* grad_other = nullptr);

// Feature contrastive loss between two views' high-level features (rows are
// samples).
double feature_contrastive_pair(const Tensor2D& h_m, const Tensor2D& h_n, double tau,
                                Tensor2D* grad_m = nullptr, Tensor2D* grad_n = nullptr);

// (1/2) sum over ordered view pairs m != n of feature_contrastive_pair.
double feature_contrastive_total(std::span<const Tensor2D> h, double tau,
                                 std::vector<Tensor2D>* grads = nullptr);

// Label contrastive loss: the same construction over the columns of the
// soft assignment matrices (one column per cluster).
double label_contrastive_pair(const Tensor2D& q_m, const Tensor2D& q_n, double tau,
                              Tensor2D* grad_m = nullptr, Tensor2D* grad_n = nullptr);

// sum_j s_j log s_j with s_j the mean of column j. Lies in [-log K, 0];
// 0 * log 0 is taken as 0.
double cluster_balance(const Tensor2D& q, Tensor2D* grad = nullptr);

// (1/2) sum over ordered view pairs of label_contrastive_pair, plus
// cluster_balance of every view.
double label_consistency_loss(std::span<const Tensor2D> q, double tau,
                              std::vector<Tensor2D>* grads = nullptr);

struct LossComponents {
    double reconstruction = 0.0;  // L_Z
    double feature = 0.0;         // L_H
    double label = 0.0;           // L_Q
};

// L_Z + lambda_feature * L_H + lambda_label * L_Q
double total_contrastive_loss(const LossComponents& parts, const ContrastiveConfig& cfg);

// -sum_m sum_i sum_j p_ij log q_ij with one-hot targets. Throws
// PreconditionError if a target row is not one-hot.
double finetune_cross_entropy(std::span<const Tensor2D> targets, std::span<const Tensor2D> q,
                              std::vector<Tensor2D>* grads = nullptr);

}  // namespace mvclust
