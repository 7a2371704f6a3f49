#include "wfcodec/losses.hpp"

#include <cmath>
#include <string>

namespace wfc {
namespace {

double abs_diff_sum(const Tensor& a, const Tensor& b) {
    auto x = a.data(), y = b.data();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(static_cast<double>(x[i]) - y[i]);
    return s;
}

template <class Set>
double mean_abs_over_bands(const Set& pred, const Set& ref, const char* what) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < pred.bands.size(); ++k) {
        require_same_shape(pred.bands[k], ref.bands[k], what);
        sum += abs_diff_sum(pred.bands[k], ref.bands[k]);
        n += pred.bands[k].numel();
    }
    if (n == 0) throw ShapeError(std::string(what) + ": subbands hold no elements");
    return sum / static_cast<double>(n);
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ValueError(std::string(what) + " is not finite");
}

} // namespace

void LossWeights::validate() const {
    for (double v : {adv, kl, wl, delta})
        if (!std::isfinite(v)) throw ParameterError("loss weights must be finite");
    if (adv < 0 || kl < 0 || wl < 0) throw ParameterError("loss weights must be nonnegative");
    if (!(delta > 0)) throw ParameterError("delta must be positive");
}

double l1_recon(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "l1_recon");
    if (x.numel() == 0) throw ShapeError("l1_recon: empty tensors");
    return abs_diff_sum(x, x_hat) / static_cast<double>(x.numel());
}

double wl_loss(const SubbandSet3D& pred2, const SubbandSet3D& ref2, const SubbandSet2D& pred3,
               const SubbandSet2D& ref3) {
    return mean_abs_over_bands(pred2, ref2, "wl_loss level 2") + mean_abs_over_bands(pred3, ref3, "wl_loss level 3");
}

double kl_divergence(const GaussianLatent& g) {
    require_same_shape(g.mean, g.logvar, "kl_divergence");
    if (g.mean.numel() == 0) throw ShapeError("kl_divergence: empty latent");
    if (!all_finite(g.mean) || !all_finite(g.logvar)) throw ValueError("kl_divergence: non-finite latent");
    auto mu = g.mean.data(), lv = g.logvar.data();
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu[i], l = lv[i];
        s += m * m + std::exp(l) - 1.0 - l;
    }
    const double out = 0.5 * s / static_cast<double>(mu.size());
    require_finite(out, "kl_divergence");
    return out;
}

double adaptive_adv_weight(double grad_norm_recon, double grad_norm_adv, double delta) {
    if (!std::isfinite(grad_norm_recon) || !std::isfinite(grad_norm_adv))
        throw ValueError("gradient norms must be finite");
    if (grad_norm_recon < 0 || grad_norm_adv < 0) throw ParameterError("gradient norms must be nonnegative");
    if (!(delta > 0) || !std::isfinite(delta)) throw ParameterError("delta must be positive");
    return 0.5 * grad_norm_recon / (grad_norm_adv + delta);
}

double total_loss(const LossComponents& c, const LossWeights& w) {
    w.validate();
    require_finite(c.recon, "recon loss");
    require_finite(c.adv, "adversarial loss");
    require_finite(c.kl, "KL loss");
    require_finite(c.wl, "WL loss");
    double out = c.recon;
    if (c.perceptual) {
        require_finite(*c.perceptual, "perceptual loss");
        out += *c.perceptual;
    }
    return out + w.adv * c.adv + w.kl * c.kl + w.wl * c.wl;
}

} // namespace wfc
