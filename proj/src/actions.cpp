#include "spil/actions.hpp"

#include <cmath>
#include <stdexcept>

namespace spil {

bool Action::finite() const {
    for (double v : translation)
        if (!std::isfinite(v)) return false;
    for (double v : rotation)
        if (!std::isfinite(v)) return false;
    return std::isfinite(gripper);
}

Vec ActionSequence::flatten() const {
    Vec flat(actions.size() * Action::kDim);
    for (std::size_t i = 0; i < actions.size(); ++i) {
        actions[i].to_flat(flat.data() + i * Action::kDim);
    }
    return flat;
}

ActionSequence ActionSequence::unflatten(std::span<const double> flat) {
    if (flat.size() % Action::kDim != 0) {
        throw std::invalid_argument("ActionSequence::unflatten: length not a multiple of 7");
    }
    ActionSequence seq;
    seq.actions.resize(flat.size() / Action::kDim);
    for (std::size_t i = 0; i < seq.actions.size(); ++i) {
        seq.actions[i] = Action::from_flat(flat.data() + i * Action::kDim);
    }
    return seq;
}

std::array<double, 3> group_magnitudes(const ActionSequence& x) {
    std::array<double, 3> m{0.0, 0.0, 0.0};
    for (const Action& a : x.actions) {
        m[0] += std::abs(a.translation[0]) + std::abs(a.translation[1]) + std::abs(a.translation[2]);
        m[1] += std::abs(a.rotation[0]) + std::abs(a.rotation[1]) + std::abs(a.rotation[2]);
        m[2] += std::abs(a.gripper);
    }
    return m;
}

BaseSkillDistribution label_base_skill(const ActionSequence& x, const MagicWeights& w) {
    if (!(w.w_translation > 0.0 && w.w_rotation > 0.0 && w.w_grasping > 0.0)) {
        throw std::invalid_argument("label_base_skill: magic weights must be positive");
    }
    auto m = group_magnitudes(x);
    double wt = w.w_translation * m[0];
    double wr = w.w_rotation * m[1];
    double wg = w.w_grasping * m[2];
    double denom = wt + wr + wg;
    if (denom == 0.0) {
        return BaseSkillDistribution{Categorical3{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}}};
    }
    return BaseSkillDistribution{Categorical3{{wt / denom, wr / denom, wg / denom}}};
}

ActionSequence augment_sequence(const ActionSequence& x, RandomStream& rng, double p_aug) {
    if (x.horizon() < 3) {
        throw std::invalid_argument("augment_sequence: horizon must be at least 3");
    }
    if (rng.uniform() >= p_aug) return x;
    ActionSequence out = x;
    for (std::size_t i = out.horizon() - 3; i < out.horizon(); ++i) {
        out.actions[i] = Action{};
    }
    return out;
}

}  // namespace spil
