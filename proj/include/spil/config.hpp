#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "spil/actions.hpp"

namespace spil {

/// Flat key/value configuration covering data generation, both training
/// stages, and evaluation. Every knob has a default; where the source
/// material fixes a value, the default is that value.
struct SpilConfig {
    std::uint64_t seed = 0;

    // Skill geometry.
    std::size_t n_h = 5;       // skill horizon
    std::size_t n_z = 20;      // skill embedding dimension
    std::size_t k_slots = 6;   // skills per imitation window

    // Labeling and losses.
    double w_translation = 1.4;
    double w_rotation = 3.0;
    double w_grasping = 0.75;
    double huber_delta = 1.0;
    double beta1 = 1e-4;
    double beta2 = 1e-5;
    double gamma1 = 5e-3;
    double gamma2 = 1e-5;
    double prior_translation = 1.0 / 3.0;
    double prior_rotation = 1.0 / 3.0;
    double prior_grasping = 1.0 / 3.0;

    // Optimization.
    double learning_rate = 1e-4;
    std::size_t batch_size = 64;
    std::size_t vae_steps = 2000;
    std::size_t spil_steps = 2000;
    double p_aug = 0.1;

    // Network sizes.
    std::size_t enc_hidden = 128;
    std::size_t dec_hidden = 128;
    std::size_t loc_hidden = 64;
    std::size_t ctx_hidden = 128;
    std::size_t ctx_dim = 64;
    std::size_t rnn_hidden = 64;
    std::string rnn_cell = "gru";

    // Play-data generation.
    std::size_t n_episodes = 200;
    std::size_t episode_length = 500;
    double lang_fraction = 0.01;
    double expert_noise = 0.2;

    // Evaluation.
    std::size_t n_chains = 200;
    std::size_t task_budget = 300;
    std::size_t n_rollouts = 10;

    MagicWeights magic_weights() const { return {w_translation, w_rotation, w_grasping}; }
    std::array<double, 3> prior_y() const { return {prior_translation, prior_rotation, prior_grasping}; }

    void validate() const;
};

/// Applies "key = value" lines from the file on top of cfg. Blank lines and
/// '#' comments are skipped; unknown keys are validation errors.
void load_config_file(const std::filesystem::path& path, SpilConfig& cfg);

/// Single assignment, same syntax as one config line.
void apply_config_entry(const std::string& key, const std::string& value, SpilConfig& cfg);

/// Canonical listing of every effective key = value, one per line, fixed
/// order. Hashing this gives the config hash reports embed.
std::string serialize_config(const SpilConfig& cfg);

std::uint64_t config_hash(const SpilConfig& cfg);

/// Hash rendered as fixed-width hex (what manifests store).
std::string config_hash_hex(const SpilConfig& cfg);

std::string format_double(double v);

/// Stream-id allocation for the pipeline stages; every run derives its
/// randomness from (config seed, stage stream id).
namespace streams {
inline constexpr std::uint64_t data_gen = 1;
inline constexpr std::uint64_t vae_train = 10;
inline constexpr std::uint64_t spil_train = 20;
inline constexpr std::uint64_t chain_eval = 30;
inline constexpr std::uint64_t mtlc_eval = 31;
inline constexpr std::uint64_t latent_export = 40;
}  // namespace streams

}  // namespace spil
