#include "difpath/schedule.hpp"

#include <cmath>

namespace difpath {

namespace {

void finish_derived(NoiseSchedule& s) {
    const int T = s.T;
    s.alpha.assign(T + 1, 1.0);
    s.alpha_bar.assign(T + 1, 1.0);
    s.posterior_var.assign(T + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha[t] * s.alpha_bar[t - 1];
        s.posterior_var[t] = (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * s.beta[t];
    }
}

}  // namespace

double NoiseSchedule::sqrt_alpha_bar(int t) const {
    return std::sqrt(alpha_bar[t]);
}

double NoiseSchedule::sqrt_one_minus_alpha_bar(int t) const {
    return std::sqrt(1.0 - alpha_bar[t]);
}

void NoiseSchedule::require_timestep(int t) const {
    require(t >= 1 && t <= T, errc::parameter, "timestep out of 1..T");
}

std::vector<int> NoiseSchedule::subsequence(int n_steps) const {
    require(n_steps >= 1 && n_steps <= T, errc::parameter, "subsequence: n_steps out of 1..T");
    std::vector<int> ts(n_steps);
    for (int i = 1; i <= n_steps; ++i) {
        // spacing T / n_steps >= 1 keeps rounded values strictly increasing
        ts[i - 1] = static_cast<int>(std::llround(static_cast<double>(i) * T / n_steps));
    }
    return ts;
}

NoiseSchedule linear_schedule(int T, double beta_start, double beta_end) {
    require(T >= 1, errc::parameter, "linear_schedule: T must be >= 1");
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, errc::parameter,
            "linear_schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.kind = "linear";
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.beta.assign(T + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        s.beta[t] = T == 1 ? beta_start
                           : beta_start + (beta_end - beta_start) * (t - 1) / static_cast<double>(T - 1);
    }
    finish_derived(s);
    return s;
}

NoiseSchedule cosine_schedule(int T, double offset) {
    require(T >= 1, errc::parameter, "cosine_schedule: T must be >= 1");
    require(offset > 0.0, errc::parameter, "cosine_schedule: offset must be positive");
    NoiseSchedule s;
    s.T = T;
    s.kind = "cosine";
    s.beta_start = offset;
    s.beta_end = 0.0;
    s.beta.assign(T + 1, 0.0);
    auto f = [&](double t) {
        const double x = (t / T + offset) / (1.0 + offset) * (3.14159265358979323846 / 2.0);
        return std::cos(x) * std::cos(x);
    };
    const double f0 = f(0.0);
    double abar_prev = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double abar = f(static_cast<double>(t)) / f0;
        double beta = 1.0 - abar / abar_prev;
        beta = std::min(beta, 0.999);
        beta = std::max(beta, 1e-12);
        s.beta[t] = beta;
        abar_prev *= 1.0 - beta;
    }
    finish_derived(s);
    return s;
}

NoiseSchedule make_schedule(const std::string& kind, int T, double beta_start, double beta_end) {
    if (kind == "linear") {
        return linear_schedule(T, beta_start, beta_end);
    }
    if (kind == "cosine") {
        return cosine_schedule(T, beta_start > 0.0 ? beta_start : 0.008);
    }
    fail(errc::config, "unknown schedule kind: " + kind);
}

}  // namespace difpath
