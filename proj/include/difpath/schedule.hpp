#pragma once

#include <string>
#include <vector>

#include "difpath/error.hpp"

namespace difpath {

// Variance schedule shared by the forward and reverse processes. Arrays are
// 1-indexed over t in 1..T with the t = 0 boundary defined (alpha_bar[0] = 1,
// posterior_var[1] = 0).
struct NoiseSchedule {
    int T{0};
    std::string kind;  // "linear" or "cosine"
    double beta_start{0.0};
    double beta_end{0.0};

    std::vector<double> beta;           // beta[0] unused (0)
    std::vector<double> alpha;          // 1 - beta[t]
    std::vector<double> alpha_bar;      // prod_{s<=t} alpha[s], alpha_bar[0] = 1
    std::vector<double> posterior_var;  // beta_tilde_t = (1 - abar_{t-1}) / (1 - abar_t) * beta_t

    double sqrt_alpha_bar(int t) const;
    double sqrt_one_minus_alpha_bar(int t) const;
    void require_timestep(int t) const;

    // Evenly spaced (round-to-nearest) strictly increasing timesteps ending
    // at T; used for accelerated DDIM sampling.
    std::vector<int> subsequence(int n_steps) const;
};

NoiseSchedule linear_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);
NoiseSchedule cosine_schedule(int T, double offset = 0.008);
NoiseSchedule make_schedule(const std::string& kind, int T, double beta_start, double beta_end);

}  // namespace difpath
