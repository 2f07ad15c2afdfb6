#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "spil/actions.hpp"
#include "spil/config.hpp"
#include "spil/nn.hpp"

namespace spil {

/// One Gaussian over the latent space per base skill, produced by the
/// locator from the three one-hot inputs.
struct BaseSkillPriors {
    std::array<DiagonalGaussian, 3> priors;
};

/// Point in the learned latent action space.
struct SkillEmbedding {
    Vec z;
};

/// Stage 1: the skill-embedding VAE with base-skill priors. Owns the
/// encoder (enc.*), decoder / skill generator (dec.*), and base-skill
/// locator (loc.*) topologies; parameters live in a ParameterSet.
class SkillVae {
public:
    explicit SkillVae(const SpilConfig& cfg);

    ParameterSet init_params(RandomStream& rng) const;

    /// Posterior over the latent space for a flattened action window.
    DiagonalGaussian encode(const ParameterSet& params, const ActionSequence& x) const;

    /// Deterministic decode; gripper components saturate to [-1, 1].
    ActionSequence decode(const ParameterSet& params, std::span<const double> z) const;

    BaseSkillPriors locate_base_skills(const ParameterSet& params) const;

    struct ElboTerms {
        double total = 0.0;
        double reconstruction = 0.0;
        double regularizer = 0.0;  // KL(q(z|x) || N(0, I))
        double skill = 0.0;        // sum_k q(y=k|x) KL(q(z|x) || prior_k)
    };

    /// Minimize-form loss: reconstruction + beta1 * regularizer +
    /// beta2 * skill. The base-skill weights come from the magnitude labeler
    /// and receive no gradient.
    ElboTerms elbo_loss(const ParameterSet& params, const ActionSequence& x, RandomStream& rng) const;

    /// Loss with gradients accumulated into grads (scaled by scale), using
    /// caller-frozen reparameterization noise. labels_override replaces the
    /// labeler output (it is a constant either way).
    ElboTerms elbo_loss_with_grad(const ParameterSet& params, const ActionSequence& x,
                                  std::span<const double> eps, double scale, ParameterSet* grads,
                                  const Categorical3* labels_override = nullptr) const;

    const SpilConfig& config() const { return cfg_; }
    static std::vector<std::string> trainable_prefixes() { return {"enc.", "dec.", "loc."}; }

private:
    SpilConfig cfg_;
    Mlp encoder_;
    Mlp decoder_;
    Mlp locator_;
};

struct VaeTrainLogEntry {
    double total, reconstruction, regularizer, skill;
};

struct VaeTrainResult {
    ParameterSet params;
    std::vector<VaeTrainLogEntry> log;
};

/// Runs the stage-1 loop: sample a window, optionally augment, encode,
/// locate, sample one embedding, decode, loss, update. One step is one
/// mini-batch mean. Aborts with a diagnostic on non-finite loss.
VaeTrainResult train_skill_vae(const std::vector<ActionSequence>& dataset, const SpilConfig& cfg,
                               RandomStream& rng);

/// Deterministic 2-D linear projection (used instead of a stochastic
/// embedding so exports reproduce bit-exactly).
struct LinearProjector {
    Vec center;
    std::array<Vec, 2> axes;

    std::array<double, 2> project(std::span<const double> p) const;
};

/// Top-2 principal components of the point set, sign-fixed so the largest
/// component of each axis is positive.
LinearProjector fit_pca_projector(const std::vector<Vec>& points);

struct LatentExport {
    std::array<std::vector<std::array<double, 2>>, 3> points;  // per base skill
};

/// Projects every posterior mean to 2-D and writes translation.csv /
/// rotation.csv / grasping.csv (header "x,y") into out_dir, partitioned by
/// the argmax magnitude label. A null projector means "fit PCA on the set".
LatentExport export_latent(const SkillVae& vae, const ParameterSet& params,
                           const std::vector<ActionSequence>& dataset,
                           const LinearProjector* projector, const std::filesystem::path& out_dir);

/// Synthetic corpus of single-primitive windows (translation / rotation /
/// grasping in equal parts), the stage-1 smoke fixture.
std::vector<ActionSequence> make_primitive_corpus(std::size_t count, std::size_t n_h,
                                                  RandomStream& rng);

}  // namespace spil
