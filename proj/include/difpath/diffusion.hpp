#pragma once

#include <vector>

#include "difpath/denoiser.hpp"
#include "difpath/rng.hpp"
#include "difpath/schedule.hpp"
#include "difpath/tensor.hpp"

namespace difpath {

struct NoisySample {
    Tensor x_t;
    int t{0};
    Tensor eps;
    int class_label{kNullClass};
};

// Closed-form marginal of the noising chain: x_t = sqrt(abar_t) x0 +
// sqrt(1 - abar_t) eps. Accepts t = 0 as the no-noise boundary.
NoisySample forward_marginal(const Tensor& x0, int t, const NoiseSchedule& s, RngStream& rng);

// Single-step kernel q(x_t | x_{t-1}) = N(sqrt(1 - beta_t) x_{t-1}, beta_t I).
Tensor forward_step(const Tensor& x_prev, int t, const NoiseSchedule& s, RngStream& rng);

// Deterministic part of the DDPM reverse update:
// (x_t - (1 - alpha_t) / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t).
Tensor posterior_mean(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s);

struct LossResult {
    double loss{0.0};
    std::vector<Tensor> gradients;  // aligned with d.parameters()
};

// Noise-prediction objective: mean over the batch of the per-element MSE
// between injected and predicted noise, t drawn uniformly from 1..T per
// element. Batch elements run in parallel on child streams; the gradient
// reduction order is fixed, so results do not depend on thread count.
LossResult simple_loss(TrainableDenoiser& d, const std::vector<LabeledImage>& batch, const NoiseSchedule& s,
                       RngStream& rng);

}  // namespace difpath
