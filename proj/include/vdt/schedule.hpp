#pragma once

#include <functional>

#include "vdt/tensor.hpp"

namespace vdt {

// Variance-preserving discrete-time schedule, t = 0 (clean) .. T.
// alpha[t]^2 + sigma[t]^2 == 1 at every step.
struct NoiseSchedule {
    int T = 300;
    double s = 0.008;
    std::vector<double> alpha_bar;  // size T+1, alpha_bar[0] == 1
    std::vector<double> beta;       // size T+1, beta[0] unused
    std::vector<double> alpha;      // sqrt(alpha_bar)
    std::vector<double> sigma;      // sqrt(1 - alpha_bar)

    void check_t(int t) const;  // 1 <= t <= T
};

// Cosine schedule: abar_t = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1+s)) pi/2),
// with per-step beta clipped to <= 0.999 and alpha_bar rebuilt from the
// clipped betas.
NoiseSchedule cosine_schedule(int T, double s = 0.008);

// z_t = alpha[t] z0 + sigma[t] eps
Tensor q_sample(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched);

// v = alpha[t] eps - sigma[t] z0
Tensor velocity_target(const Tensor& z0, const Tensor& eps, int t, const NoiseSchedule& sched);

// z0_hat = alpha z_t - sigma v_hat;  eps_hat = sigma z_t + alpha v_hat
std::pair<Tensor, Tensor> predict_x0_eps_from_v(const Tensor& z_t, const Tensor& v_hat, int t,
                                                const NoiseSchedule& sched);

// Ancestral step with posterior variance beta_tilde_t; noise may be null at
// any t and is ignored at t == 1 (terminal step is deterministic).
Tensor ddpm_step(const Tensor& z_t, const Tensor& v_hat, int t, const NoiseSchedule& sched,
                 const Tensor* noise);

// Deterministic (eta = 0) update from the same (z0_hat, eps_hat) reconstruction.
Tensor ddim_step(const Tensor& z_t, const Tensor& v_hat, int t, const NoiseSchedule& sched);

enum class SampleMode { Ancestral, Deterministic };

using DenoiseFn = std::function<Tensor(const Tensor& z_t, int t)>;

// Full generation loop: z_T ~ N(0, I) from the given seed, then T steps of
// the selected update. Same seed, same denoiser => identical output.
Tensor sample_loop(const DenoiseFn& denoise, const NoiseSchedule& sched, const Shape& shape,
                   uint64_t seed, SampleMode mode);

}  // namespace vdt
