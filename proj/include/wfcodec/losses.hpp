#pragma once

#include <optional>

#include "wfcodec/tensor.hpp"
#include "wfcodec/wavelet.hpp"
#include "wfcodec/wfvae_net.hpp"

namespace wfc {

// All |.| terms reduce by the mean over elements. Sums are accumulated in
// double.

struct LossWeights {
    double adv = 0.0;
    double kl = 1e-6;
    double wl = 0.1;
    double delta = 1e-6;

    void validate() const;
};

struct LossComponents {
    double recon = 0.0;
    std::optional<double> perceptual; // supplied by the caller when available
    double adv = 0.0;
    double kl = 0.0;
    double wl = 0.0;
};

// mean |x - x_hat|
double l1_recon(const Tensor& x, const Tensor& x_hat);

// mean over all level-2 band elements of |pred - ref| plus the same for level 3.
double wl_loss(const SubbandSet3D& pred2, const SubbandSet3D& ref2, const SubbandSet2D& pred3,
               const SubbandSet2D& ref3);

// 0.5 * mean(mu^2 + exp(logvar) - 1 - logvar)
double kl_divergence(const GaussianLatent& g);

// 0.5 * grad_norm_recon / (grad_norm_adv + delta)
double adaptive_adv_weight(double grad_norm_recon, double grad_norm_adv, double delta = 1e-6);

// recon + perceptual + adv*L_adv + kl*L_KL + wl*L_WL
double total_loss(const LossComponents& c, const LossWeights& w);

} // namespace wfc
