#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "spil/config.hpp"
#include "spil/nn.hpp"
#include "spil/skill_vae.hpp"
#include "spil/toy_env.hpp"

namespace spil {

/// Stage 2: goal-conditioned imitation over the frozen skill space.
/// Trainable parts: context encoder (ctx.*), skill embedding selector
/// (sel.*), base skill selector (bsel.*). Frozen parts loaded from stage 1:
/// skill generator (dec.*) and base skill locator (loc.*).
class SpilPolicy {
public:
    SpilPolicy(const SpilConfig& cfg, std::size_t state_dim, std::size_t n_instructions);

    /// Fresh trainable parameters plus byte-copies of the stage-1 generator
    /// and locator tensors.
    ParameterSet init_params(const ParameterSet& stage1, RandomStream& rng) const;

    /// Fused embedding of state features and goal (hindsight state features
    /// or instruction id).
    Vec encode_context(const ParameterSet& params, std::span<const double> state_feats,
                       const GoalSpec& goal) const;

    struct SkillSlots {
        std::vector<DiagonalGaussian> gaussians;
        std::vector<Categorical3> base_skills;
    };

    /// Broadcasts the context over K slots (slot index added as a learned
    /// embedding), runs the bidirectional selectors, and reads one Gaussian
    /// and one base-skill triple per slot.
    SkillSlots select_skills(const ParameterSet& params, std::span<const double> context,
                             std::size_t k) const;

    struct LossTerms {
        double total = 0.0;
        double reconstruction = 0.0;  // mean Huber over the whole window
        double skill = 0.0;           // mean over slots of sum_y q(y) KL(slot || prior_y)
        double categorical = 0.0;     // mean over slots of KL(q(y) || p(y))
    };

    /// Minimize-form loss of a K*N_h window against the decoded slot
    /// sequence: reconstruction + gamma1 * skill + gamma2 * categorical.
    LossTerms spil_loss(const ParameterSet& params, std::span<const double> window,
                        std::span<const double> context, RandomStream& rng) const;

    /// Full-chain loss with gradients (context encoding included so the
    /// encoder trains); eps is the frozen reparameterization noise
    /// (k_slots * n_z values). Gradients only reach ctx./sel./bsel.
    LossTerms loss_with_grad(const ParameterSet& params, std::span<const double> window,
                             std::span<const double> state_feats, const GoalSpec& goal,
                             std::span<const double> eps, double scale, ParameterSet* grads) const;

    enum class ActMode { mean, sample };

    struct PolicyAction {
        ActionSequence sequence;
        Categorical3 base_skill;  // slot diagnostic
        Vec embedding;
    };

    /// One receding-horizon decision: context -> single slot -> embedding
    /// (slot mean or sample) -> frozen generator.
    PolicyAction act(const ParameterSet& params, std::span<const double> state_feats,
                     const GoalSpec& goal, ActMode mode, RandomStream* rng = nullptr) const;

    /// Frozen locator priors (constant during stage 2).
    BaseSkillPriors priors(const ParameterSet& params) const;

    const SpilConfig& config() const { return cfg_; }
    static std::vector<std::string> trainable_prefixes() { return {"ctx.", "sel.", "bsel."}; }
    static std::vector<std::string> frozen_prefixes() { return {"dec.", "loc."}; }

private:
    struct ForwardCaches;
    LossTerms loss_impl(const ParameterSet& params, std::span<const double> window,
                        std::span<const double> state_feats, const GoalSpec* goal,
                        std::span<const double> context, std::span<const double> eps, double scale,
                        ParameterSet* grads) const;

    SpilConfig cfg_;
    std::size_t state_dim_;
    std::size_t n_instructions_;
    Mlp state_enc_;
    Mlp goal_state_enc_;
    Embedding instr_emb_;
    Mlp fuse_;
    Embedding slot_emb_;
    BiRnn sel_rnn_;
    Mlp sel_head_;
    BiRnn bsel_rnn_;
    Mlp bsel_head_;
    Mlp decoder_;
    Mlp locator_;
};

struct SpilTrainLogEntry {
    double total, reconstruction, skill, categorical;
};

struct SpilTrainResult {
    ParameterSet params;
    std::vector<SpilTrainLogEntry> log;
};

/// Runs the stage-2 loop: each step accumulates the loss over one play batch
/// and one language batch (language windows cycled in a fixed shuffled
/// order) and updates only the trainable parameters; the generator and
/// locator stay bitwise equal to the stage-1 checkpoint.
SpilTrainResult train_spil(const Datasets& data, const ParameterSet& stage1_params,
                           const SpilConfig& cfg, RandomStream& rng);

/// Stage-1 checkpoint compatibility gate used by train_spil callers: throws
/// unless the checkpoint declares stage skill_vae with matching shapes.
void validate_stage1_checkpoint(const std::vector<std::pair<std::string, std::string>>& fields,
                                const SpilConfig& cfg);

}  // namespace spil
