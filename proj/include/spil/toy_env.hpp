#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spil/actions.hpp"
#include "spil/config.hpp"

namespace spil {

// ---------------------------------------------------------------------------
// Tasks and instructions

enum class TaskId : std::size_t {
    open_drawer = 0,
    close_drawer,
    toggle_switch_on,
    toggle_switch_off,
    move_slider_left,
    move_slider_right,
    push_button,
    lift_red_block,
    lift_blue_block,
    lift_pink_block,
};

inline constexpr std::size_t kNumTasks = 10;

const char* task_name(TaskId id);
TaskId task_from_name(const std::string& name);

/// Ordered instruction vocabulary; the index doubles as the instruction
/// embedding row.
struct InstructionVocab {
    struct Entry {
        TaskId id;
        const char* text;
    };
    static const std::array<Entry, kNumTasks>& entries();
    static std::size_t index_of(TaskId id) { return static_cast<std::size_t>(id); }
};

// ---------------------------------------------------------------------------
// Environment

namespace env {

inline constexpr double kWorkspaceLimit = 1.0;
inline constexpr double kTranslationClamp = 0.05;
inline constexpr double kRotationClamp = 0.1;
inline constexpr double kGraspRadius = 0.05;
inline constexpr double kEngageRadius = 0.05;
inline constexpr double kLiftThreshold = 0.3;
inline constexpr double kBlockRestZ = 0.02;
inline constexpr std::array<double, 3> kGraspOffset{0.0, 0.0, -0.02};

inline constexpr std::array<double, 3> kSliderBase{-0.2, 0.6, 0.15};
inline constexpr std::array<double, 3> kSliderAxis{1.0, 0.0, 0.0};
inline constexpr double kSliderRange = 0.4;
inline constexpr std::array<double, 3> kDrawerBase{0.5, -0.1, 0.05};
inline constexpr std::array<double, 3> kDrawerAxis{0.0, -1.0, 0.0};
inline constexpr double kDrawerRange = 0.4;
inline constexpr std::array<double, 3> kButtonPos{0.4, 0.35, 0.1};
inline constexpr std::array<double, 3> kSwitchPos{-0.45, 0.35, 0.12};
inline constexpr std::array<std::array<double, 3>, 3> kBlockReset{
    {{-0.3, -0.3, kBlockRestZ}, {0.0, -0.35, kBlockRestZ}, {0.3, -0.3, kBlockRestZ}}};
inline constexpr std::array<double, 3> kEeReset{0.0, 0.0, 0.3};

}  // namespace env

/// Full simulator state. Positions live in the workspace box, orientations
/// wrap to (-pi, pi], slider/drawer positions are normalized to [0, 1].
struct EnvState {
    std::array<double, 3> ee_position{};
    std::array<double, 3> ee_orientation{};
    bool gripper_open = true;
    int held_object = -1;  // -1 none, else block index (0 red, 1 blue, 2 pink)
    double slider_pos = 0.5;
    double drawer_pos = 0.0;
    bool button_on = false;
    bool switch_on = false;
    std::array<std::array<double, 3>, 3> block_positions{};
};

EnvState canonical_reset();
EnvState random_reset(RandomStream& rng);

std::array<double, 3> slider_handle(const EnvState& s);
std::array<double, 3> drawer_handle(const EnvState& s);

/// Deterministic kinematic step. Translation integrates (clamped per step
/// and to the workspace box), rotation wraps, the gripper is commanded
/// closed iff g >= 0. A closed gripper grasps the nearest free block within
/// the grasp radius; when empty-handed it drags the slider/drawer along
/// their axes from within the engage radius, toggles the button on
/// press-down contact, and toggles the switch on lateral-push contact.
EnvState step(const EnvState& state, const Action& action);

bool task_success(const EnvState& state, TaskId task);

/// Low-dimensional feature vector standing in for visual observations.
inline constexpr std::size_t kStateDim = 24;
Vec state_features(const EnvState& state);

/// Proportional controller toward the task's current subgoal
/// (align -> approach -> engage/actuate), with bounded per-step magnitudes
/// and optional exploration noise. noise_scale 0 is deterministic.
Action scripted_expert(const EnvState& state, TaskId task, RandomStream& rng, double noise_scale);

// ---------------------------------------------------------------------------
// Goals, episodes, datasets

struct GoalSpec {
    enum class Kind { state_goal, instruction };
    Kind kind = Kind::state_goal;
    Vec goal_features;                // populated iff kind == state_goal
    std::size_t instruction_id = 0;  // populated iff kind == instruction

    static GoalSpec state(Vec features) {
        GoalSpec g;
        g.kind = Kind::state_goal;
        g.goal_features = std::move(features);
        return g;
    }
    static GoalSpec instruction(std::size_t id) {
        GoalSpec g;
        g.kind = Kind::instruction;
        g.instruction_id = id;
        return g;
    }
};

struct Segment {
    std::size_t start = 0;  // first action index
    std::size_t end = 0;    // one past the last action index
    TaskId task = TaskId::open_drawer;
    bool success = false;
};

struct Episode {
    std::vector<Vec> features;  // episode_length + 1 state feature vectors
    std::vector<Action> actions;
    std::vector<Segment> segments;
    /// Starts of windows flagged as language-labeled, with their task.
    std::vector<std::pair<std::size_t, TaskId>> lang_windows;
};

/// Chains uniformly random currently-unsatisfied tasks under the noisy
/// scripted expert until episode_length steps. Exactly
/// ceil(lang_fraction * n_windows) of the extractable windows of length
/// window_len (stride 1, across all episodes) are flagged language-labeled,
/// drawn uniformly among windows fully inside a successful task segment.
std::vector<Episode> generate_play_data(std::size_t n_episodes, std::size_t episode_length,
                                        double lang_fraction, std::size_t window_len,
                                        double expert_noise, RandomStream& rng);

struct PlayWindowRef {
    std::uint32_t episode = 0;
    std::uint32_t start = 0;
};

struct LangWindowRef {
    std::uint32_t episode = 0;
    std::uint32_t start = 0;
    TaskId task = TaskId::open_drawer;
};

/// The three training views over one episode collection. Windows are
/// references; assemble_* materializes them.
struct Datasets {
    std::vector<Episode> episodes;
    std::size_t k_slots = 0;
    std::size_t n_h = 0;
    std::vector<PlayWindowRef> play;  // goal = hindsight final state
    std::vector<LangWindowRef> lang;  // goal = instruction id
    std::vector<PlayWindowRef> vae;   // all length-n_h action slices

    std::size_t window_len() const { return k_slots * n_h; }
};

Datasets make_datasets(std::vector<Episode> episodes, std::size_t k_slots, std::size_t n_h);

/// Flat K*N_h*7 action window starting at ref.start.
Vec assemble_window(const Datasets& data, PlayWindowRef ref);
Vec assemble_window(const Datasets& data, LangWindowRef ref);
ActionSequence assemble_vae_sequence(const Datasets& data, PlayWindowRef ref);
const Vec& window_start_features(const Datasets& data, std::uint32_t episode, std::uint32_t start);
const Vec& window_goal_features(const Datasets& data, PlayWindowRef ref);

/// All stage-1 sequences materialized (what train_skill_vae consumes).
std::vector<ActionSequence> materialize_vae_dataset(const Datasets& data);

// ---------------------------------------------------------------------------
// Dataset directory layout: manifest.txt plus little-endian binary arrays.

struct DatasetMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::size_t window_len = 0;
};

void save_dataset(const std::filesystem::path& dir, const std::vector<Episode>& episodes,
                  const DatasetMeta& meta);
std::vector<Episode> load_dataset(const std::filesystem::path& dir, DatasetMeta* meta = nullptr);

}  // namespace spil
