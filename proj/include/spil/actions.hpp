#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "spil/prob.hpp"
#include "spil/random.hpp"

namespace spil {

/// One relative 7-DoF end-effector command: translation (workspace units per
/// step), rotation (radians per step), gripper scalar in [-1, 1] where
/// g >= 0 commands the gripper closed.
struct Action {
    std::array<double, 3> translation{};
    std::array<double, 3> rotation{};
    double gripper = 0.0;

    static constexpr std::size_t kDim = 7;

    void to_flat(double* out) const {
        out[0] = translation[0];
        out[1] = translation[1];
        out[2] = translation[2];
        out[3] = rotation[0];
        out[4] = rotation[1];
        out[5] = rotation[2];
        out[6] = gripper;
    }

    static Action from_flat(const double* in) {
        Action a;
        a.translation = {in[0], in[1], in[2]};
        a.rotation = {in[3], in[4], in[5]};
        a.gripper = in[6];
        return a;
    }

    bool finite() const;
};

/// Fixed-horizon window of actions (the unit a skill embedding encodes).
struct ActionSequence {
    std::vector<Action> actions;

    std::size_t horizon() const { return actions.size(); }

    Vec flatten() const;
    static ActionSequence unflatten(std::span<const double> flat);
};

/// Positive balancing factors for the translation / rotation / grasping
/// magnitude groups (units like meters and radians are not comparable).
struct MagicWeights {
    double w_translation = 1.4;
    double w_rotation = 3.0;
    double w_grasping = 0.75;
};

struct BaseSkillDistribution {
    Categorical3 probs;
};

enum class BaseSkill : std::size_t { translation = 0, rotation = 1, grasping = 2 };

/// Accumulated absolute magnitude of the translation, rotation, and gripper
/// components over the whole sequence.
std::array<double, 3> group_magnitudes(const ActionSequence& x);

/// Stochastic base-skill label: (w_y m_y) / sum_k (w_k m_k) over the group
/// magnitudes. An all-zero sequence labels as the uniform triple; idle
/// segments legitimately occur in play data and the symmetric label is the
/// unbiased choice.
BaseSkillDistribution label_base_skill(const ActionSequence& x, const MagicWeights& w);

/// With probability p_aug, returns a copy of x whose final three actions are
/// zeroed ("still" actions); otherwise returns x unchanged. Requires a
/// horizon of at least 3.
ActionSequence augment_sequence(const ActionSequence& x, RandomStream& rng, double p_aug);

}  // namespace spil
