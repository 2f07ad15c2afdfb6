#include "spil/skill_vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace spil {

namespace {

constexpr std::size_t kActionDim = Action::kDim;

// Gripper slots of a flattened window saturate through tanh.
void apply_gripper_tanh(Vec& flat) {
    for (std::size_t i = kActionDim - 1; i < flat.size(); i += kActionDim) {
        flat[i] = std::tanh(flat[i]);
    }
}

void one_hot3(std::size_t k, Vec& out) {
    out.assign(3, 0.0);
    out[k] = 1.0;
}

}  // namespace

SkillVae::SkillVae(const SpilConfig& cfg)
    : cfg_(cfg),
      encoder_("enc", {cfg.n_h * kActionDim, cfg.enc_hidden, cfg.enc_hidden, 2 * cfg.n_z},
               Activation::tanh, Activation::identity),
      decoder_("dec", {cfg.n_z, cfg.dec_hidden, cfg.dec_hidden, cfg.n_h * kActionDim},
               Activation::tanh, Activation::identity),
      locator_("loc", {3, cfg.loc_hidden, 2 * cfg.n_z}, Activation::tanh, Activation::identity) {}

ParameterSet SkillVae::init_params(RandomStream& rng) const {
    ParameterSet params;
    RandomStream enc_rng = rng.derive(1);
    RandomStream dec_rng = rng.derive(2);
    RandomStream loc_rng = rng.derive(3);
    encoder_.init(params, enc_rng);
    decoder_.init(params, dec_rng);
    locator_.init(params, loc_rng);
    return params;
}

DiagonalGaussian SkillVae::encode(const ParameterSet& params, const ActionSequence& x) const {
    return gaussian_from_head(encoder_.forward(params, x.flatten()));
}

ActionSequence SkillVae::decode(const ParameterSet& params, std::span<const double> z) const {
    Vec flat = decoder_.forward(params, z);
    apply_gripper_tanh(flat);
    return ActionSequence::unflatten(flat);
}

BaseSkillPriors SkillVae::locate_base_skills(const ParameterSet& params) const {
    BaseSkillPriors out;
    Vec input;
    for (std::size_t k = 0; k < 3; ++k) {
        one_hot3(k, input);
        out.priors[k] = gaussian_from_head(locator_.forward(params, input));
    }
    return out;
}

SkillVae::ElboTerms SkillVae::elbo_loss(const ParameterSet& params, const ActionSequence& x,
                                        RandomStream& rng) const {
    Vec eps(cfg_.n_z);
    for (double& e : eps) e = rng.normal();
    return elbo_loss_with_grad(params, x, eps, 1.0, nullptr);
}

SkillVae::ElboTerms SkillVae::elbo_loss_with_grad(const ParameterSet& params, const ActionSequence& x,
                                                  std::span<const double> eps, double scale,
                                                  ParameterSet* grads,
                                                  const Categorical3* labels_override) const {
    if (x.horizon() != cfg_.n_h) throw std::invalid_argument("elbo_loss: horizon mismatch");
    const std::size_t nz = cfg_.n_z;
    const Vec target = x.flatten();

    Mlp::Cache enc_cache;
    Vec enc_raw = encoder_.forward(params, target, grads ? &enc_cache : nullptr);
    DiagonalGaussian q = gaussian_from_head(enc_raw);

    Vec z = sample_gaussian_with_noise(q, eps);

    Mlp::Cache dec_cache;
    Vec dec_raw = decoder_.forward(params, z, grads ? &dec_cache : nullptr);
    Vec recon = dec_raw;
    apply_gripper_tanh(recon);

    Categorical3 labels =
        labels_override ? *labels_override : label_base_skill(x, cfg_.magic_weights()).probs;

    std::array<Mlp::Cache, 3> loc_caches;
    std::array<Vec, 3> loc_raws;
    BaseSkillPriors priors;
    Vec one_hot;
    for (std::size_t k = 0; k < 3; ++k) {
        one_hot3(k, one_hot);
        loc_raws[k] = locator_.forward(params, one_hot, grads ? &loc_caches[k] : nullptr);
        priors.priors[k] = gaussian_from_head(loc_raws[k]);
    }

    ElboTerms terms;
    terms.reconstruction = huber(recon, target, cfg_.huber_delta);
    DiagonalGaussian std_prior = DiagonalGaussian::standard(nz);
    terms.regularizer = kl_gaussian(q, std_prior);
    for (std::size_t k = 0; k < 3; ++k) {
        terms.skill += labels[k] * kl_gaussian(q, priors.priors[k]);
    }
    terms.total = terms.reconstruction + cfg_.beta1 * terms.regularizer + cfg_.beta2 * terms.skill;

    if (!grads) return terms;

    // Reconstruction path.
    const double n = static_cast<double>(target.size());
    Vec d_dec_raw(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        double d = scale * huber_derivative(recon[i] - target[i], cfg_.huber_delta) / n;
        if ((i % kActionDim) == kActionDim - 1) d *= 1.0 - recon[i] * recon[i];
        d_dec_raw[i] = d;
    }
    Vec d_z = decoder_.backward(params, dec_cache, d_dec_raw, grads);

    Vec d_mean(nz, 0.0), d_logvar(nz, 0.0);
    for (std::size_t i = 0; i < nz; ++i) {
        d_mean[i] = d_z[i];
        d_logvar[i] = d_z[i] * eps[i] * 0.5 * std::exp(0.5 * q.log_variance[i]);
    }

    // KL(q || N(0, I)).
    kl_gaussian_backward_q(q, std_prior, scale * cfg_.beta1, d_mean, d_logvar);

    // Base-skill regularizer: gradients reach both the encoder and the
    // locator; the labels are constants.
    for (std::size_t k = 0; k < 3; ++k) {
        double w = scale * cfg_.beta2 * labels[k];
        if (w == 0.0) continue;
        kl_gaussian_backward_q(q, priors.priors[k], w, d_mean, d_logvar);
        Vec d_m(nz, 0.0), d_l(nz, 0.0);
        kl_gaussian_backward_p(q, priors.priors[k], w, d_m, d_l);
        Vec d_loc_raw = gaussian_head_backward(loc_raws[k], d_m, d_l);
        locator_.backward(params, loc_caches[k], d_loc_raw, grads);
    }

    Vec d_enc_raw = gaussian_head_backward(enc_raw, d_mean, d_logvar);
    encoder_.backward(params, enc_cache, d_enc_raw, grads);
    return terms;
}

VaeTrainResult train_skill_vae(const std::vector<ActionSequence>& dataset, const SpilConfig& cfg,
                               RandomStream& rng) {
    if (dataset.empty()) throw std::invalid_argument("train_skill_vae: empty dataset");
    cfg.validate();

    SkillVae vae(cfg);
    RandomStream init_rng = rng.derive(0);
    RandomStream train_rng = rng.derive(1);

    VaeTrainResult result{vae.init_params(init_rng), {}};
    auto prefixes = SkillVae::trainable_prefixes();
    Adam opt(result.params, names_with_prefixes(result.params, prefixes),
             AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});

    ParameterSet grads = result.params.zeros_like();
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
    Vec eps(cfg.n_z);
    result.log.reserve(cfg.vae_steps);

    for (std::size_t step = 0; step < cfg.vae_steps; ++step) {
        grads.fill(0.0);
        VaeTrainLogEntry entry{0, 0, 0, 0};
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const ActionSequence& raw = dataset[train_rng.uniform_int(dataset.size())];
            ActionSequence x = augment_sequence(raw, train_rng, cfg.p_aug);
            for (double& e : eps) e = train_rng.normal();
            auto terms = vae.elbo_loss_with_grad(result.params, x, eps, inv_batch, &grads);
            entry.total += terms.total * inv_batch;
            entry.reconstruction += terms.reconstruction * inv_batch;
            entry.regularizer += terms.regularizer * inv_batch;
            entry.skill += terms.skill * inv_batch;
        }
        if (!std::isfinite(entry.total)) {
            throw std::runtime_error("train_skill_vae: non-finite loss at step " +
                                     std::to_string(step));
        }
        opt.step(result.params, grads);
        result.log.push_back(entry);
    }
    return result;
}

std::array<double, 2> LinearProjector::project(std::span<const double> p) const {
    std::array<double, 2> out{0.0, 0.0};
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t i = 0; i < center.size(); ++i) {
            out[a] += axes[a][i] * (p[i] - center[i]);
        }
    }
    return out;
}

namespace {

// Cyclic Jacobi eigensolver for a symmetric matrix (row-major n x n).
// Deterministic; fine at latent-space sizes.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
    eigvecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = a[p * n + p], aqq = a[q * n + q];
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a[i * n + p], aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double api = a[p * n + i], aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = eigvecs[i * n + p], viq = eigvecs[i * n + q];
                    eigvecs[i * n + p] = c * vip - s * viq;
                    eigvecs[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

}  // namespace

LinearProjector fit_pca_projector(const std::vector<Vec>& points) {
    if (points.empty()) throw std::invalid_argument("fit_pca_projector: empty point set");
    const std::size_t d = points[0].size();
    if (d < 2) throw std::invalid_argument("fit_pca_projector: need at least 2 dimensions");
    LinearProjector proj;
    proj.center.assign(d, 0.0);
    for (const Vec& p : points)
        for (std::size_t i = 0; i < d; ++i) proj.center[i] += p[i];
    for (double& c : proj.center) c /= static_cast<double>(points.size());

    std::vector<double> cov(d * d, 0.0);
    for (const Vec& p : points) {
        for (std::size_t i = 0; i < d; ++i) {
            double di = p[i] - proj.center[i];
            for (std::size_t j = i; j < d; ++j) cov[i * d + j] += di * (p[j] - proj.center[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= static_cast<double>(points.size());
            cov[j * d + i] = cov[i * d + j];
        }

    std::vector<double> eigvals, eigvecs;
    jacobi_eigen(cov, d, eigvals, eigvecs);

    std::array<std::size_t, 2> top{0, 1};
    top[0] = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (eigvals[i] > eigvals[top[0]]) top[0] = i;
    top[1] = top[0] == 0 ? 1 : 0;
    for (std::size_t i = 0; i < d; ++i)
        if (i != top[0] && eigvals[i] > eigvals[top[1]]) top[1] = i;

    for (std::size_t a = 0; a < 2; ++a) {
        proj.axes[a].resize(d);
        for (std::size_t i = 0; i < d; ++i) proj.axes[a][i] = eigvecs[i * d + top[a]];
        // Fix the sign so exports are reproducible regardless of rotation order.
        std::size_t imax = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(proj.axes[a][i]) > std::abs(proj.axes[a][imax])) imax = i;
        if (proj.axes[a][imax] < 0) {
            for (double& v : proj.axes[a]) v = -v;
        }
    }
    return proj;
}

LatentExport export_latent(const SkillVae& vae, const ParameterSet& params,
                           const std::vector<ActionSequence>& dataset,
                           const LinearProjector* projector, const std::filesystem::path& out_dir) {
    if (dataset.empty()) throw std::invalid_argument("export_latent: empty dataset");
    std::vector<Vec> means;
    std::vector<std::size_t> labels;
    means.reserve(dataset.size());
    labels.reserve(dataset.size());
    MagicWeights w = vae.config().magic_weights();
    for (const ActionSequence& x : dataset) {
        means.push_back(vae.encode(params, x).mean);
        auto probs = label_base_skill(x, w).probs;
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < 3; ++k)
            if (probs[k] > probs[argmax]) argmax = k;
        labels.push_back(argmax);
    }

    LinearProjector fitted;
    if (!projector) {
        fitted = fit_pca_projector(means);
        projector = &fitted;
    }

    LatentExport out;
    for (std::size_t i = 0; i < means.size(); ++i) {
        out.points[labels[i]].push_back(projector->project(means[i]));
    }

    std::filesystem::create_directories(out_dir);
    const char* files[3] = {"translation.csv", "rotation.csv", "grasping.csv"};
    for (std::size_t k = 0; k < 3; ++k) {
        std::ofstream f(out_dir / files[k]);
        if (!f) throw std::runtime_error("export_latent: cannot write " + (out_dir / files[k]).string());
        f << "x,y\n";
        for (const auto& p : out.points[k]) {
            f << format_double(p[0]) << "," << format_double(p[1]) << "\n";
        }
    }
    return out;
}

std::vector<ActionSequence> make_primitive_corpus(std::size_t count, std::size_t n_h,
                                                  RandomStream& rng) {
    std::vector<ActionSequence> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t kind = i % 3;
        ActionSequence seq;
        seq.actions.resize(n_h);
        if (kind == 0) {
            // Straight-line reach: one direction, per-step magnitude jitter.
            std::array<double, 3> dir;
            double norm = 0.0;
            for (double& v : dir) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(std::max(norm, 1e-12));
            double mag = rng.uniform(0.02, 0.05);
            for (Action& a : seq.actions) {
                double m = mag * rng.uniform(0.8, 1.2);
                for (std::size_t c = 0; c < 3; ++c) a.translation[c] = dir[c] / norm * m;
            }
        } else if (kind == 1) {
            std::array<double, 3> axis;
            double norm = 0.0;
            for (double& v : axis) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(std::max(norm, 1e-12));
            double mag = rng.uniform(0.04, 0.09);
            for (Action& a : seq.actions) {
                double m = mag * rng.uniform(0.8, 1.2);
                for (std::size_t c = 0; c < 3; ++c) a.rotation[c] = axis[c] / norm * m;
            }
        } else {
            double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            double mag = rng.uniform(0.3, 1.0);
            for (Action& a : seq.actions) {
                a.gripper = std::clamp(sign * mag * rng.uniform(0.8, 1.2), -1.0, 1.0);
            }
        }
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace spil
