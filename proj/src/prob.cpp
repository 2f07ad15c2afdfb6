#include "spil/prob.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spil {

void validate_categorical(const Categorical3& c) {
    double sum = 0.0;
    for (double p : c.probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("Categorical3 component outside [0, 1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("Categorical3 components sum to " + std::to_string(sum));
    }
}

double kl_gaussian(const DiagonalGaussian& q, const DiagonalGaussian& p) {
    if (q.mean.size() != q.log_variance.size() || p.mean.size() != p.log_variance.size() ||
        q.dim() != p.dim()) {
        throw std::invalid_argument("kl_gaussian: dimension mismatch");
    }
    double kl = 0.0;
    for (std::size_t d = 0; d < q.dim(); ++d) {
        double lq = q.log_variance[d];
        double lp = p.log_variance[d];
        double dm = p.mean[d] - q.mean[d];
        kl += 0.5 * (std::exp(lq - lp) + dm * dm * std::exp(-lp) - 1.0 + lp - lq);
    }
    return kl;
}

double kl_categorical(const Categorical3& q, const Categorical3& p) {
    validate_categorical(q);
    validate_categorical(p);
    double kl = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        if (q[k] == 0.0) continue;
        if (p[k] == 0.0) {
            throw std::invalid_argument("kl_categorical: q has mass where p is zero");
        }
        kl += q[k] * std::log(q[k] / p[k]);
    }
    return kl;
}

Vec sample_gaussian(const DiagonalGaussian& g, RandomStream& rng) {
    Vec out(g.dim());
    for (std::size_t d = 0; d < out.size(); ++d) {
        out[d] = g.mean[d] + std::exp(0.5 * g.log_variance[d]) * rng.normal();
    }
    return out;
}

Vec sample_gaussian_with_noise(const DiagonalGaussian& g, std::span<const double> eps) {
    if (eps.size() != g.dim()) {
        throw std::invalid_argument("sample_gaussian_with_noise: noise dimension mismatch");
    }
    Vec out(g.dim());
    for (std::size_t d = 0; d < out.size(); ++d) {
        out[d] = g.mean[d] + std::exp(0.5 * g.log_variance[d]) * eps[d];
    }
    return out;
}

void kl_gaussian_backward_q(const DiagonalGaussian& q, const DiagonalGaussian& p, double scale,
                            std::span<double> d_mean_q, std::span<double> d_logvar_q) {
    for (std::size_t d = 0; d < q.dim(); ++d) {
        double inv_vp = std::exp(-p.log_variance[d]);
        d_mean_q[d] += scale * (q.mean[d] - p.mean[d]) * inv_vp;
        d_logvar_q[d] += scale * 0.5 * (std::exp(q.log_variance[d] - p.log_variance[d]) - 1.0);
    }
}

void kl_gaussian_backward_p(const DiagonalGaussian& q, const DiagonalGaussian& p, double scale,
                            std::span<double> d_mean_p, std::span<double> d_logvar_p) {
    for (std::size_t d = 0; d < q.dim(); ++d) {
        double inv_vp = std::exp(-p.log_variance[d]);
        double dm = p.mean[d] - q.mean[d];
        d_mean_p[d] += scale * dm * inv_vp;
        d_logvar_p[d] += scale * 0.5 *
                         (1.0 - std::exp(q.log_variance[d] - p.log_variance[d]) - dm * dm * inv_vp);
    }
}

double huber(std::span<const double> predicted, std::span<const double> target, double delta) {
    if (predicted.size() != target.size()) {
        throw std::invalid_argument("huber: length mismatch");
    }
    if (predicted.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double r = std::abs(predicted[i] - target[i]);
        total += r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
    }
    return total / static_cast<double>(predicted.size());
}

}  // namespace spil
