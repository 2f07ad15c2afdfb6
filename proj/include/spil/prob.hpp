#pragma once

#include <array>
#include <span>
#include <vector>

#include "spil/random.hpp"

namespace spil {

using Vec = std::vector<double>;

/// Diagonal Gaussian stored as (mean, log-variance). Log-variance keeps the
/// variance positive by construction.
struct DiagonalGaussian {
    Vec mean;
    Vec log_variance;

    std::size_t dim() const { return mean.size(); }

    static DiagonalGaussian standard(std::size_t d) {
        return DiagonalGaussian{Vec(d, 0.0), Vec(d, 0.0)};
    }
};

/// Probability triple over {translation, rotation, grasping}.
struct Categorical3 {
    std::array<double, 3> probs{};

    double operator[](std::size_t i) const { return probs[i]; }
};

/// Validates the Categorical3 invariants (components in [0,1], sum 1 within
/// 1e-9). Throws std::invalid_argument on violation.
void validate_categorical(const Categorical3& c);

/// Closed-form KL divergence between diagonal Gaussians of equal dimension:
/// sum_d 1/2 (s_q/s_p + (mu_p-mu_q)^2/s_p - 1 + ln s_p - ln s_q).
double kl_gaussian(const DiagonalGaussian& q, const DiagonalGaussian& p);

/// KL divergence between probability triples with the 0 ln 0 = 0 convention.
/// q_k > 0 with p_k = 0 is a configuration bug and throws.
double kl_categorical(const Categorical3& q, const Categorical3& p);

/// Reparameterized draw: mean + exp(log_variance / 2) * eps, eps ~ N(0, I).
Vec sample_gaussian(const DiagonalGaussian& g, RandomStream& rng);

/// Same draw with the noise supplied by the caller (frozen-eps contract used
/// by the gradient checks).
Vec sample_gaussian_with_noise(const DiagonalGaussian& g, std::span<const double> eps);

/// Accumulates scale * d kl_gaussian / d q into the two gradient spans.
void kl_gaussian_backward_q(const DiagonalGaussian& q, const DiagonalGaussian& p, double scale,
                            std::span<double> d_mean_q, std::span<double> d_logvar_q);

/// Accumulates scale * d kl_gaussian / d p into the two gradient spans.
void kl_gaussian_backward_p(const DiagonalGaussian& q, const DiagonalGaussian& p, double scale,
                            std::span<double> d_mean_p, std::span<double> d_logvar_p);

/// Mean Huber loss over components: 1/2 r^2 for |r| <= delta, else
/// delta (|r| - delta/2). Averaging keeps the scale independent of length.
double huber(std::span<const double> predicted, std::span<const double> target, double delta);

/// d huber / d predicted for a single residual component (before the 1/n
/// mean factor).
inline double huber_derivative(double residual, double delta) {
    if (residual > delta) return delta;
    if (residual < -delta) return -delta;
    return residual;
}

}  // namespace spil
