#include "difpath/diffusion.hpp"

#include <cmath>

#include "difpath/kernels.hpp"

namespace difpath {

NoisySample forward_marginal(const Tensor& x0, int t, const NoiseSchedule& s, RngStream& rng) {
    require(t >= 0 && t <= s.T, errc::parameter, "forward_marginal: timestep out of 0..T");
    x0.require_finite("forward_marginal");
    NoisySample ns;
    ns.t = t;
    ns.eps = gaussian(rng, x0.shape);
    const double a = s.sqrt_alpha_bar(t);
    const double b = s.sqrt_one_minus_alpha_bar(t);
    ns.x_t = x0;
    for (std::size_t i = 0; i < ns.x_t.size(); ++i) {
        ns.x_t.data[i] = a * x0.data[i] + b * ns.eps.data[i];
    }
    return ns;
}

Tensor forward_step(const Tensor& x_prev, int t, const NoiseSchedule& s, RngStream& rng) {
    s.require_timestep(t);
    x_prev.require_finite("forward_step");
    Tensor eps = gaussian(rng, x_prev.shape);
    const double a = std::sqrt(1.0 - s.beta[t]);
    const double b = std::sqrt(s.beta[t]);
    Tensor out = x_prev;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] = a * x_prev.data[i] + b * eps.data[i];
    }
    return out;
}

Tensor posterior_mean(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s) {
    s.require_timestep(t);
    require_same_shape(x_t, eps_hat, "posterior_mean");
    const double coef = (1.0 - s.alpha[t]) / s.sqrt_one_minus_alpha_bar(t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha[t]);
    Tensor out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] = inv_sqrt_alpha * (x_t.data[i] - coef * eps_hat.data[i]);
    }
    return out;
}

LossResult simple_loss(TrainableDenoiser& d, const std::vector<LabeledImage>& batch, const NoiseSchedule& s,
                       RngStream& rng) {
    require(!batch.empty(), errc::parameter, "simple_loss: empty batch");
    auto params = d.parameters();
    const std::size_t B = batch.size();

    const RngStream base = rng;
    rng.counter += 1;

    std::vector<double> elem_loss(B, 0.0);
    std::vector<std::vector<Tensor>> elem_grads(B);

    kernels::parallel_for(B, [&](std::size_t i) {
        RngStream child = base.child(i);
        const int t = 1 + static_cast<int>(child.next_below(static_cast<std::uint64_t>(s.T)));
        NoisySample ns = forward_marginal(batch[i].image, t, s, child);

        elem_grads[i] = d.zero_gradients();
        auto ws = d.make_workspace();
        Tensor eps_hat = d.forward_train(ns.x_t, t, batch[i].label, *ws);
        require(eps_hat.same_shape(ns.x_t), errc::contract, "simple_loss: denoiser output shape mismatch");

        const std::size_t n = eps_hat.size();
        Tensor d_eps(eps_hat.shape);
        double acc = 0.0;
        const double grad_scale = 2.0 / (static_cast<double>(B) * static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            const double diff = eps_hat.data[j] - ns.eps.data[j];
            acc += diff * diff;
            d_eps.data[j] = grad_scale * diff;
        }
        elem_loss[i] = acc / static_cast<double>(n);
        d.backward(d_eps, *ws, elem_grads[i]);
    });

    LossResult res;
    res.gradients = d.zero_gradients();
    for (std::size_t i = 0; i < B; ++i) {
        res.loss += elem_loss[i];
        for (std::size_t p = 0; p < res.gradients.size(); ++p) {
            axpy(1.0, elem_grads[i][p], res.gradients[p]);
        }
    }
    res.loss /= static_cast<double>(B);
    return res;
}

}  // namespace difpath
