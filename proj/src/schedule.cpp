#include "vdt/schedule.hpp"

#include <cmath>

namespace vdt {

void NoiseSchedule::check_t(int t) const {
    if (t < 1 || t > T)
        throw ContractError("timestep " + std::to_string(t) + " out of range [1, " +
                            std::to_string(T) + "]");
}

NoiseSchedule cosine_schedule(int T, double s) {
    if (T < 1) throw ContractError("cosine_schedule: T must be >= 1");
    if (s <= 0) throw ContractError("cosine_schedule: s must be > 0");
    NoiseSchedule out;
    out.T = T;
    out.s = s;
    auto f = [T, s](double t) {
        double u = ((t / T) + s) / (1.0 + s) * (M_PI / 2.0);
        double c = std::cos(u);
        return c * c;
    };
    out.alpha_bar.assign(T + 1, 1.0);
    out.beta.assign(T + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        // abar_t / abar_{t-1} = f(t)/f(t-1); f(0) cancels
        double beta = std::min(1.0 - f(t) / f(t - 1), 0.999);
        out.beta[t] = beta;
        out.alpha_bar[t] = out.alpha_bar[t - 1] * (1.0 - beta);
    }
    out.alpha.resize(T + 1);
    out.sigma.resize(T + 1);
    for (int t = 0; t <= T; ++t) {
        out.alpha[t] = std::sqrt(out.alpha_bar[t]);
        out.sigma[t] = std::sqrt(1.0 - out.alpha_bar[t]);
    }
    return out;
}

Tensor q_sample(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    sched.check_t(t);
    if (z0.shape() != eps.shape())
        throw DimensionError("q_sample: z0 " + shape_str(z0.shape()) + " vs eps " +
                             shape_str(eps.shape()));
    return add(scale(z0, sched.alpha[t]), scale(eps, sched.sigma[t]));
}

Tensor velocity_target(const Tensor& z0, const Tensor& eps, int t, const NoiseSchedule& sched) {
    sched.check_t(t);
    if (z0.shape() != eps.shape())
        throw DimensionError("velocity_target: z0 " + shape_str(z0.shape()) + " vs eps " +
                             shape_str(eps.shape()));
    return sub(scale(eps, sched.alpha[t]), scale(z0, sched.sigma[t]));
}

std::pair<Tensor, Tensor> predict_x0_eps_from_v(const Tensor& z_t, const Tensor& v_hat, int t,
                                                const NoiseSchedule& sched) {
    sched.check_t(t);
    if (z_t.shape() != v_hat.shape())
        throw DimensionError("predict_x0_eps_from_v: z_t " + shape_str(z_t.shape()) + " vs v " +
                             shape_str(v_hat.shape()));
    Tensor z0_hat = sub(scale(z_t, sched.alpha[t]), scale(v_hat, sched.sigma[t]));
    Tensor eps_hat = add(scale(z_t, sched.sigma[t]), scale(v_hat, sched.alpha[t]));
    return {z0_hat, eps_hat};
}

Tensor ddpm_step(const Tensor& z_t, const Tensor& v_hat, int t, const NoiseSchedule& sched,
                 const Tensor* noise) {
    sched.check_t(t);
    auto [z0_hat, eps_hat] = predict_x0_eps_from_v(z_t, v_hat, t, sched);
    double abar_t = sched.alpha_bar[t];
    double abar_prev = sched.alpha_bar[t - 1];
    double beta_t = sched.beta[t];
    // posterior q(z_{t-1} | z_t, z0)
    double coef_z0 = std::sqrt(abar_prev) * beta_t / (1.0 - abar_t);
    double coef_zt = std::sqrt(1.0 - beta_t) * (1.0 - abar_prev) / (1.0 - abar_t);
    Tensor mean = add(scale(z0_hat, coef_z0), scale(z_t, coef_zt));
    if (t == 1 || noise == nullptr) return mean;
    double var = (1.0 - abar_prev) / (1.0 - abar_t) * beta_t;
    if (noise->shape() != z_t.shape())
        throw DimensionError("ddpm_step: noise " + shape_str(noise->shape()) + " vs z_t " +
                             shape_str(z_t.shape()));
    return add(mean, scale(*noise, std::sqrt(var)));
}

Tensor ddim_step(const Tensor& z_t, const Tensor& v_hat, int t, const NoiseSchedule& sched) {
    sched.check_t(t);
    auto [z0_hat, eps_hat] = predict_x0_eps_from_v(z_t, v_hat, t, sched);
    double abar_prev = sched.alpha_bar[t - 1];
    return add(scale(z0_hat, std::sqrt(abar_prev)), scale(eps_hat, std::sqrt(1.0 - abar_prev)));
}

Tensor sample_loop(const DenoiseFn& denoise, const NoiseSchedule& sched, const Shape& shape,
                   uint64_t seed, SampleMode mode) {
    Rng rng(seed);
    Tensor z = randn(rng, shape);
    for (int t = sched.T; t >= 1; --t) {
        Tensor v_hat = denoise(z, t);
        if (v_hat.shape() != z.shape())
            throw DimensionError("sample_loop: denoiser returned " + shape_str(v_hat.shape()) +
                                 " for input " + shape_str(z.shape()));
        if (mode == SampleMode::Deterministic) {
            z = ddim_step(z, v_hat, t, sched);
        } else {
            Tensor noise = randn(rng, shape);
            z = ddpm_step(z, v_hat, t, sched, &noise);
        }
    }
    return z;
}

}  // namespace vdt
