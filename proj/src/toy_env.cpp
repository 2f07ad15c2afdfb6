#include "spil/toy_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spil {

namespace {

using std::array;

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

double clamp_mag(double v, double lim) { return std::clamp(v, -lim, lim); }

double dist3(const array<double, 3>& a, const array<double, 3>& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Expert controller gains and margins.
constexpr double kMaxStep = 0.045;
constexpr double kMaxRot = 0.09;
constexpr double kIdleGrip = -0.08;
constexpr double kApproachTol = 0.025;
constexpr double kAlignThreshold = 0.25;

double widget_yaw(TaskId task) {
    switch (task) {
        case TaskId::move_slider_left:
        case TaskId::move_slider_right:
            return 0.5;
        case TaskId::open_drawer:
        case TaskId::close_drawer:
            return -0.5;
        case TaskId::push_button:
            return 0.3;
        case TaskId::toggle_switch_on:
        case TaskId::toggle_switch_off:
            return -0.3;
        case TaskId::lift_red_block:
            return 0.4;
        case TaskId::lift_blue_block:
            return -0.4;
        case TaskId::lift_pink_block:
            return 0.6;
    }
    return 0.0;
}

}  // namespace

const char* task_name(TaskId id) {
    switch (id) {
        case TaskId::open_drawer: return "open_drawer";
        case TaskId::close_drawer: return "close_drawer";
        case TaskId::toggle_switch_on: return "toggle_switch_on";
        case TaskId::toggle_switch_off: return "toggle_switch_off";
        case TaskId::move_slider_left: return "move_slider_left";
        case TaskId::move_slider_right: return "move_slider_right";
        case TaskId::push_button: return "push_button";
        case TaskId::lift_red_block: return "lift_red_block";
        case TaskId::lift_blue_block: return "lift_blue_block";
        case TaskId::lift_pink_block: return "lift_pink_block";
    }
    throw std::invalid_argument("task_name: unknown task id");
}

TaskId task_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kNumTasks; ++i) {
        TaskId id = static_cast<TaskId>(i);
        if (name == task_name(id)) return id;
    }
    throw std::invalid_argument("unknown task name: " + name);
}

const std::array<InstructionVocab::Entry, kNumTasks>& InstructionVocab::entries() {
    static const std::array<Entry, kNumTasks> table = {{
        {TaskId::open_drawer, "open the drawer"},
        {TaskId::close_drawer, "close the drawer"},
        {TaskId::toggle_switch_on, "turn the switch on"},
        {TaskId::toggle_switch_off, "turn the switch off"},
        {TaskId::move_slider_left, "move the slider to the left"},
        {TaskId::move_slider_right, "move the slider to the right"},
        {TaskId::push_button, "push the button"},
        {TaskId::lift_red_block, "lift the red block"},
        {TaskId::lift_blue_block, "lift the blue block"},
        {TaskId::lift_pink_block, "lift the pink block"},
    }};
    return table;
}

EnvState canonical_reset() {
    EnvState s;
    s.ee_position = env::kEeReset;
    s.ee_orientation = {0.0, 0.0, 0.0};
    s.gripper_open = true;
    s.held_object = -1;
    s.slider_pos = 0.5;
    s.drawer_pos = 0.0;
    s.button_on = false;
    s.switch_on = false;
    s.block_positions = env::kBlockReset;
    return s;
}

EnvState random_reset(RandomStream& rng) {
    EnvState s = canonical_reset();
    for (std::size_t c = 0; c < 2; ++c) s.ee_position[c] = rng.uniform(-0.6, 0.6);
    s.ee_position[2] = rng.uniform(0.1, 0.6);
    for (double& o : s.ee_orientation) o = rng.uniform(-0.8, 0.8);
    s.slider_pos = rng.uniform(0.0, 1.0);
    s.drawer_pos = rng.uniform(0.0, 1.0);
    s.button_on = rng.uniform() < 0.5;
    s.switch_on = rng.uniform() < 0.5;
    for (std::size_t b = 0; b < 3; ++b) {
        s.block_positions[b][0] = env::kBlockReset[b][0] + rng.uniform(-0.08, 0.08);
        s.block_positions[b][1] = env::kBlockReset[b][1] + rng.uniform(-0.08, 0.08);
        s.block_positions[b][2] = env::kBlockRestZ;
    }
    return s;
}

std::array<double, 3> slider_handle(const EnvState& s) {
    array<double, 3> h = env::kSliderBase;
    for (std::size_t c = 0; c < 3; ++c) h[c] += env::kSliderAxis[c] * s.slider_pos * env::kSliderRange;
    return h;
}

std::array<double, 3> drawer_handle(const EnvState& s) {
    array<double, 3> h = env::kDrawerBase;
    for (std::size_t c = 0; c < 3; ++c) h[c] += env::kDrawerAxis[c] * s.drawer_pos * env::kDrawerRange;
    return h;
}

EnvState step(const EnvState& state, const Action& action) {
    if (!action.finite()) throw std::invalid_argument("step: non-finite action");

    EnvState next = state;

    array<double, 3> applied{};
    for (std::size_t c = 0; c < 3; ++c) {
        double t = clamp_mag(action.translation[c], env::kTranslationClamp);
        double moved = std::clamp(state.ee_position[c] + t, -env::kWorkspaceLimit, env::kWorkspaceLimit);
        applied[c] = moved - state.ee_position[c];
        next.ee_position[c] = moved;
    }
    for (std::size_t c = 0; c < 3; ++c) {
        double r = clamp_mag(action.rotation[c], env::kRotationClamp);
        next.ee_orientation[c] = wrap_angle(state.ee_orientation[c] + r);
    }

    const bool closed = action.gripper >= 0.0;

    if (state.held_object >= 0) {
        if (closed) {
            for (std::size_t c = 0; c < 3; ++c) {
                next.block_positions[state.held_object][c] = next.ee_position[c] + env::kGraspOffset[c];
            }
        } else {
            // Release: the block settles on the table under the gripper.
            next.block_positions[state.held_object][0] = next.ee_position[0] + env::kGraspOffset[0];
            next.block_positions[state.held_object][1] = next.ee_position[1] + env::kGraspOffset[1];
            next.block_positions[state.held_object][2] = env::kBlockRestZ;
            next.held_object = -1;
        }
    } else if (closed) {
        int nearest = -1;
        double best = env::kGraspRadius;
        for (int b = 0; b < 3; ++b) {
            double d = dist3(next.ee_position, state.block_positions[b]);
            if (d <= best) {
                best = d;
                nearest = b;
            }
        }
        if (nearest >= 0) {
            next.held_object = nearest;
            for (std::size_t c = 0; c < 3; ++c) {
                next.block_positions[nearest][c] = next.ee_position[c] + env::kGraspOffset[c];
            }
        }
    }

    if (closed && next.held_object < 0) {
        // Slider / drawer drag: engaged when the step began at the handle.
        if (dist3(state.ee_position, slider_handle(state)) <= env::kEngageRadius) {
            double along = applied[0] * env::kSliderAxis[0] + applied[1] * env::kSliderAxis[1] +
                           applied[2] * env::kSliderAxis[2];
            next.slider_pos = std::clamp(state.slider_pos + along / env::kSliderRange, 0.0, 1.0);
        }
        if (dist3(state.ee_position, drawer_handle(state)) <= env::kEngageRadius) {
            double along = applied[0] * env::kDrawerAxis[0] + applied[1] * env::kDrawerAxis[1] +
                           applied[2] * env::kDrawerAxis[2];
            next.drawer_pos = std::clamp(state.drawer_pos + along / env::kDrawerRange, 0.0, 1.0);
        }
        // Button: pressing down through the button top toggles it.
        bool crossed_down = state.ee_position[2] > env::kButtonPos[2] &&
                            next.ee_position[2] <= env::kButtonPos[2] && applied[2] < 0.0;
        double button_xy = std::hypot(next.ee_position[0] - env::kButtonPos[0],
                                      next.ee_position[1] - env::kButtonPos[1]);
        if (crossed_down && button_xy <= env::kEngageRadius) {
            next.button_on = !next.button_on;
        }
        // Switch: a lateral push through the switch plane toggles it.
        double prev_dx = state.ee_position[0] - env::kSwitchPos[0];
        double new_dx = next.ee_position[0] - env::kSwitchPos[0];
        bool crossed_lateral = std::abs(applied[0]) > 1e-12 && prev_dx * new_dx <= 0.0 &&
                               prev_dx != new_dx;
        double switch_yz = std::hypot(next.ee_position[1] - env::kSwitchPos[1],
                                      next.ee_position[2] - env::kSwitchPos[2]);
        if (crossed_lateral && switch_yz <= env::kEngageRadius) {
            next.switch_on = !next.switch_on;
        }
    }

    next.gripper_open = !closed;
    return next;
}

bool task_success(const EnvState& state, TaskId task) {
    switch (task) {
        case TaskId::open_drawer: return state.drawer_pos >= 0.8;
        case TaskId::close_drawer: return state.drawer_pos <= 0.2;
        case TaskId::toggle_switch_on: return state.switch_on;
        case TaskId::toggle_switch_off: return !state.switch_on;
        case TaskId::move_slider_left: return state.slider_pos <= 0.2;
        case TaskId::move_slider_right: return state.slider_pos >= 0.8;
        case TaskId::push_button: return state.button_on;
        case TaskId::lift_red_block:
        case TaskId::lift_blue_block:
        case TaskId::lift_pink_block: {
            int b = static_cast<int>(task) - static_cast<int>(TaskId::lift_red_block);
            return state.held_object == b && state.block_positions[b][2] >= env::kLiftThreshold;
        }
    }
    throw std::invalid_argument("task_success: unknown task id");
}

Vec state_features(const EnvState& s) {
    Vec f;
    f.reserve(kStateDim);
    for (double v : s.ee_position) f.push_back(v);
    for (double v : s.ee_orientation) f.push_back(v);
    f.push_back(s.gripper_open ? 1.0 : 0.0);
    for (int b = -1; b < 3; ++b) f.push_back(s.held_object == b ? 1.0 : 0.0);
    f.push_back(s.slider_pos);
    f.push_back(s.drawer_pos);
    f.push_back(s.button_on ? 1.0 : 0.0);
    f.push_back(s.switch_on ? 1.0 : 0.0);
    for (const auto& b : s.block_positions)
        for (double v : b) f.push_back(v);
    return f;
}

namespace {

struct Move {
    array<double, 3> t{};
    array<double, 3> r{};
    double g = kIdleGrip;
};

// Rotation command toward the widget yaw, rolling pitch/roll back to zero.
array<double, 3> rotation_toward(const EnvState& s, double yaw_target) {
    return {clamp_mag(-0.5 * s.ee_orientation[0], kMaxRot),
            clamp_mag(-0.5 * s.ee_orientation[1], kMaxRot),
            clamp_mag(0.6 * wrap_angle(yaw_target - s.ee_orientation[2]), kMaxRot)};
}

Move approach(const EnvState& s, const array<double, 3>& target, double yaw_target) {
    Move m;
    double yaw_err = std::abs(wrap_angle(yaw_target - s.ee_orientation[2]));
    if (yaw_err > kAlignThreshold && dist3(s.ee_position, target) > 0.15) {
        m.r = rotation_toward(s, yaw_target);
        return m;  // align in place first
    }
    // Direction-preserving step limit (per-component clamping would bend
    // diagonal approach lines).
    double max_c = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        m.t[c] = 0.9 * (target[c] - s.ee_position[c]);
        max_c = std::max(max_c, std::abs(m.t[c]));
    }
    if (max_c > kMaxStep) {
        for (double& v : m.t) v *= kMaxStep / max_c;
    }
    m.r = rotation_toward(s, yaw_target);
    return m;
}

Move idle_move() { return Move{}; }

Move widget_drag(const EnvState& s, TaskId task) {
    const bool slider = task == TaskId::move_slider_left || task == TaskId::move_slider_right;
    const array<double, 3> handle = slider ? slider_handle(s) : drawer_handle(s);
    const array<double, 3>& axis = slider ? env::kSliderAxis : env::kDrawerAxis;
    const double pos = slider ? s.slider_pos : s.drawer_pos;
    const double target = (task == TaskId::move_slider_right || task == TaskId::open_drawer) ? 1.0 : 0.0;

    if (dist3(s.ee_position, handle) > kApproachTol) {
        return approach(s, handle, widget_yaw(task));
    }
    Move m;
    double dir = target > pos ? 1.0 : -1.0;
    for (std::size_t c = 0; c < 3; ++c) m.t[c] = axis[c] * dir * kMaxStep;
    m.g = 1.0;
    return m;
}

Move button_press(const EnvState& s) {
    array<double, 3> hover = env::kButtonPos;
    hover[2] += 0.10;
    double xy = std::hypot(s.ee_position[0] - env::kButtonPos[0], s.ee_position[1] - env::kButtonPos[1]);
    if (xy <= 0.02 && s.ee_position[2] <= hover[2] + 0.03 && s.ee_position[2] > env::kButtonPos[2]) {
        Move m;
        m.t = {0.0, 0.0, -kMaxStep};
        m.g = 1.0;
        return m;
    }
    return approach(s, hover, widget_yaw(TaskId::push_button));
}

Move switch_push(const EnvState& s) {
    array<double, 3> side = env::kSwitchPos;
    side[0] -= 0.10;
    bool lane = std::abs(s.ee_position[1] - env::kSwitchPos[1]) <= 0.02 &&
                std::abs(s.ee_position[2] - env::kSwitchPos[2]) <= 0.02;
    if (lane && s.ee_position[0] >= side[0] - 0.03 && s.ee_position[0] <= env::kSwitchPos[0] + 0.02) {
        Move m;
        m.t = {kMaxStep, 0.0, 0.0};
        m.g = 1.0;
        return m;
    }
    return approach(s, side, widget_yaw(TaskId::toggle_switch_on));
}

Move block_lift(const EnvState& s, TaskId task) {
    const int b = static_cast<int>(task) - static_cast<int>(TaskId::lift_red_block);
    if (s.held_object == b) {
        Move m;
        m.t = {0.0, 0.0, kMaxStep};
        m.g = 1.0;
        return m;
    }
    if (s.held_object >= 0) {
        Move m;
        m.g = -1.0;  // drop whatever is in hand first
        return m;
    }
    array<double, 3> grasp_pose = s.block_positions[b];
    for (std::size_t c = 0; c < 3; ++c) grasp_pose[c] -= env::kGraspOffset[c];
    if (dist3(s.ee_position, grasp_pose) > 0.02) {
        return approach(s, grasp_pose, widget_yaw(task));
    }
    Move m;
    for (std::size_t c = 0; c < 3; ++c) m.t[c] = clamp_mag(grasp_pose[c] - s.ee_position[c], kMaxStep);
    m.g = 1.0;
    return m;
}

}  // namespace

Action scripted_expert(const EnvState& state, TaskId task, RandomStream& rng, double noise_scale) {
    Move m;
    if (task_success(state, task)) {
        m = idle_move();
        if (state.held_object >= 0) m.g = 1.0;  // keep a lifted block lifted
    } else {
        switch (task) {
            case TaskId::open_drawer:
            case TaskId::close_drawer:
            case TaskId::move_slider_left:
            case TaskId::move_slider_right:
                m = widget_drag(state, task);
                break;
            case TaskId::push_button:
                m = button_press(state);
                break;
            case TaskId::toggle_switch_on:
            case TaskId::toggle_switch_off:
                m = switch_push(state);
                break;
            case TaskId::lift_red_block:
            case TaskId::lift_blue_block:
            case TaskId::lift_pink_block:
                m = block_lift(state, task);
                break;
        }
    }

    Action a;
    a.translation = m.t;
    a.rotation = m.r;
    a.gripper = m.g;
    if (noise_scale > 0.0) {
        for (std::size_t c = 0; c < 3; ++c) {
            a.translation[c] = clamp_mag(a.translation[c] + noise_scale * 0.015 * rng.normal(),
                                         env::kTranslationClamp);
            a.rotation[c] = clamp_mag(a.rotation[c] + noise_scale * 0.03 * rng.normal(),
                                      env::kRotationClamp);
        }
        a.gripper = std::clamp(a.gripper + noise_scale * 0.02 * rng.normal(), -1.0, 1.0);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Play-data generation

std::vector<Episode> generate_play_data(std::size_t n_episodes, std::size_t episode_length,
                                        double lang_fraction, std::size_t window_len,
                                        double expert_noise, RandomStream& rng) {
    if (!(lang_fraction >= 0.0 && lang_fraction <= 1.0)) {
        throw std::invalid_argument("generate_play_data: lang_fraction outside [0, 1]");
    }
    constexpr std::size_t kSegmentCap = 120;

    std::vector<Episode> episodes(n_episodes);
    for (std::size_t e = 0; e < n_episodes; ++e) {
        RandomStream ep_rng = rng.derive(e);
        Episode& ep = episodes[e];
        EnvState state = random_reset(ep_rng);
        ep.features.push_back(state_features(state));

        std::size_t t = 0;
        while (t < episode_length) {
            // Uniform choice among currently-unsatisfied tasks.
            std::array<TaskId, kNumTasks> candidates;
            std::size_t n_cand = 0;
            for (std::size_t i = 0; i < kNumTasks; ++i) {
                TaskId id = static_cast<TaskId>(i);
                if (!task_success(state, id)) candidates[n_cand++] = id;
            }
            TaskId task = candidates[ep_rng.uniform_int(n_cand)];

            Segment seg;
            seg.start = t;
            seg.task = task;
            std::size_t seg_steps = 0;
            while (t < episode_length && seg_steps < kSegmentCap) {
                Action a = scripted_expert(state, task, ep_rng, expert_noise);
                state = step(state, a);
                ep.actions.push_back(a);
                ep.features.push_back(state_features(state));
                ++t;
                ++seg_steps;
                if (task_success(state, task)) {
                    seg.success = true;
                    break;
                }
            }
            if (seg.success) {
                // Settle at the reached goal for a while. This teaches the
                // hold-at-goal behavior and keeps segments long enough to
                // contain full imitation windows.
                std::size_t settle = 10 + ep_rng.uniform_int(16);
                for (std::size_t k = 0; k < settle && t < episode_length; ++k) {
                    Action a = scripted_expert(state, task, ep_rng, expert_noise);
                    state = step(state, a);
                    ep.actions.push_back(a);
                    ep.features.push_back(state_features(state));
                    ++t;
                }
            }
            seg.end = t;
            ep.segments.push_back(seg);
        }
    }

    // Flag exactly ceil(lang_fraction * n_windows) windows, drawn uniformly
    // among windows fully inside a successful segment.
    std::size_t n_windows = 0;
    for (const Episode& ep : episodes) {
        if (ep.actions.size() >= window_len) n_windows += ep.actions.size() - window_len + 1;
    }
    struct Eligible {
        std::uint32_t episode, start;
        TaskId task;
    };
    std::vector<Eligible> eligible;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        for (const Segment& seg : episodes[e].segments) {
            if (!seg.success || seg.end - seg.start < window_len) continue;
            for (std::size_t s = seg.start; s + window_len <= seg.end; ++s) {
                eligible.push_back({static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(s),
                                    seg.task});
            }
        }
    }
    std::size_t n_flag = static_cast<std::size_t>(
        std::ceil(lang_fraction * static_cast<double>(n_windows)));
    n_flag = std::min(n_flag, eligible.size());

    // Partial Fisher-Yates keeps the draw order (and so the flag set) a pure
    // function of the stream.
    for (std::size_t i = 0; i < n_flag; ++i) {
        std::size_t j = i + rng.uniform_int(eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
    }
    std::vector<Eligible> flagged(eligible.begin(), eligible.begin() + n_flag);
    std::sort(flagged.begin(), flagged.end(), [](const Eligible& a, const Eligible& b) {
        return a.episode != b.episode ? a.episode < b.episode : a.start < b.start;
    });
    for (const Eligible& f : flagged) {
        episodes[f.episode].lang_windows.emplace_back(f.start, f.task);
    }
    return episodes;
}

// ---------------------------------------------------------------------------
// Dataset views

Datasets make_datasets(std::vector<Episode> episodes, std::size_t k_slots, std::size_t n_h) {
    Datasets d;
    d.episodes = std::move(episodes);
    d.k_slots = k_slots;
    d.n_h = n_h;
    const std::size_t W = k_slots * n_h;
    for (std::size_t e = 0; e < d.episodes.size(); ++e) {
        const Episode& ep = d.episodes[e];
        if (ep.actions.size() < W) {
            throw std::invalid_argument("make_datasets: window longer than episode");
        }
        for (std::size_t s = 0; s + W <= ep.actions.size(); ++s) {
            d.play.push_back({static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(s)});
        }
        for (const auto& [start, task] : ep.lang_windows) {
            d.lang.push_back({static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(start), task});
        }
        for (std::size_t s = 0; s + n_h <= ep.actions.size(); ++s) {
            d.vae.push_back({static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(s)});
        }
    }
    return d;
}

namespace {
Vec flatten_actions(const Episode& ep, std::size_t start, std::size_t count) {
    Vec out(count * Action::kDim);
    for (std::size_t i = 0; i < count; ++i) {
        ep.actions[start + i].to_flat(out.data() + i * Action::kDim);
    }
    return out;
}
}  // namespace

Vec assemble_window(const Datasets& data, PlayWindowRef ref) {
    return flatten_actions(data.episodes[ref.episode], ref.start, data.window_len());
}

Vec assemble_window(const Datasets& data, LangWindowRef ref) {
    return flatten_actions(data.episodes[ref.episode], ref.start, data.window_len());
}

ActionSequence assemble_vae_sequence(const Datasets& data, PlayWindowRef ref) {
    const Episode& ep = data.episodes[ref.episode];
    ActionSequence seq;
    seq.actions.assign(ep.actions.begin() + ref.start, ep.actions.begin() + ref.start + data.n_h);
    return seq;
}

const Vec& window_start_features(const Datasets& data, std::uint32_t episode, std::uint32_t start) {
    return data.episodes[episode].features[start];
}

const Vec& window_goal_features(const Datasets& data, PlayWindowRef ref) {
    return data.episodes[ref.episode].features[ref.start + data.window_len()];
}

std::vector<ActionSequence> materialize_vae_dataset(const Datasets& data) {
    std::vector<ActionSequence> out;
    out.reserve(data.vae.size());
    for (const PlayWindowRef& ref : data.vae) out.push_back(assemble_vae_sequence(data, ref));
    return out;
}

// ---------------------------------------------------------------------------
// Dataset files

void save_dataset(const std::filesystem::path& dir, const std::vector<Episode>& episodes,
                  const DatasetMeta& meta) {
    std::filesystem::create_directories(dir);

    std::size_t n_segments = 0, n_labels = 0;
    for (const Episode& ep : episodes) {
        n_segments += ep.segments.size();
        n_labels += ep.lang_windows.size();
    }

    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write dataset manifest");
    manifest << "format: spil-dataset-v1\n";
    manifest << "n_episodes: " << episodes.size() << "\n";
    manifest << "state_dim: " << kStateDim << "\n";
    manifest << "window_len: " << meta.window_len << "\n";
    manifest << "seed: " << meta.seed << "\n";
    manifest << "config_hash: " << meta.config_hash << "\n";
    manifest << "segment_count: " << n_segments << "\n";
    manifest << "label_count: " << n_labels << "\n";
    manifest << "episode_lengths:";
    for (const Episode& ep : episodes) manifest << " " << ep.actions.size();
    manifest << "\n";
    manifest.close();

    std::ofstream states(dir / "states.bin", std::ios::binary);
    std::ofstream actions(dir / "actions.bin", std::ios::binary);
    std::ofstream segments(dir / "segments.bin", std::ios::binary);
    std::ofstream labels(dir / "labels.bin", std::ios::binary);
    if (!states || !actions || !segments || !labels) {
        throw std::runtime_error("cannot write dataset arrays in " + dir.string());
    }

    for (std::size_t e = 0; e < episodes.size(); ++e) {
        const Episode& ep = episodes[e];
        for (const Vec& f : ep.features) {
            states.write(reinterpret_cast<const char*>(f.data()),
                         static_cast<std::streamsize>(f.size() * sizeof(double)));
        }
        Vec flat = flatten_actions(ep, 0, ep.actions.size());
        actions.write(reinterpret_cast<const char*>(flat.data()),
                      static_cast<std::streamsize>(flat.size() * sizeof(double)));
        for (const Segment& s : ep.segments) {
            std::int32_t row[5] = {static_cast<std::int32_t>(e), static_cast<std::int32_t>(s.start),
                                   static_cast<std::int32_t>(s.end),
                                   static_cast<std::int32_t>(s.task), s.success ? 1 : 0};
            segments.write(reinterpret_cast<const char*>(row), sizeof(row));
        }
        for (const auto& [start, task] : ep.lang_windows) {
            std::int32_t row[3] = {static_cast<std::int32_t>(e), static_cast<std::int32_t>(start),
                                   static_cast<std::int32_t>(task)};
            labels.write(reinterpret_cast<const char*>(row), sizeof(row));
        }
    }
}

std::vector<Episode> load_dataset(const std::filesystem::path& dir, DatasetMeta* meta) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot read dataset manifest in " + dir.string());
    std::size_t n_episodes = 0, state_dim = 0, n_segments = 0, n_labels = 0;
    std::vector<std::size_t> lengths;
    DatasetMeta local;
    std::string line;
    while (std::getline(manifest, line)) {
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        std::istringstream value(line.substr(colon + 1));
        if (key == "n_episodes") value >> n_episodes;
        else if (key == "state_dim") value >> state_dim;
        else if (key == "window_len") value >> local.window_len;
        else if (key == "seed") value >> local.seed;
        else if (key == "config_hash") value >> local.config_hash;
        else if (key == "segment_count") value >> n_segments;
        else if (key == "label_count") value >> n_labels;
        else if (key == "episode_lengths") {
            std::size_t L;
            while (value >> L) lengths.push_back(L);
        }
    }
    if (lengths.size() != n_episodes) throw std::runtime_error("dataset manifest inconsistent");
    if (state_dim != kStateDim) throw std::runtime_error("dataset state_dim mismatch");
    if (meta) *meta = local;

    std::ifstream states(dir / "states.bin", std::ios::binary);
    std::ifstream actions(dir / "actions.bin", std::ios::binary);
    std::ifstream segments(dir / "segments.bin", std::ios::binary);
    std::ifstream labels(dir / "labels.bin", std::ios::binary);
    if (!states || !actions || !segments || !labels) {
        throw std::runtime_error("dataset arrays missing in " + dir.string());
    }

    std::vector<Episode> episodes(n_episodes);
    for (std::size_t e = 0; e < n_episodes; ++e) {
        Episode& ep = episodes[e];
        std::size_t L = lengths[e];
        ep.features.assign(L + 1, Vec(state_dim));
        for (Vec& f : ep.features) {
            states.read(reinterpret_cast<char*>(f.data()),
                        static_cast<std::streamsize>(state_dim * sizeof(double)));
        }
        Vec flat(L * Action::kDim);
        actions.read(reinterpret_cast<char*>(flat.data()),
                     static_cast<std::streamsize>(flat.size() * sizeof(double)));
        ep.actions.resize(L);
        for (std::size_t i = 0; i < L; ++i) {
            ep.actions[i] = Action::from_flat(flat.data() + i * Action::kDim);
        }
        if (!states || !actions) throw std::runtime_error("dataset arrays truncated");
    }
    for (std::size_t i = 0; i < n_segments; ++i) {
        std::int32_t row[5];
        segments.read(reinterpret_cast<char*>(row), sizeof(row));
        if (!segments) throw std::runtime_error("segments.bin truncated");
        Segment s;
        s.start = static_cast<std::size_t>(row[1]);
        s.end = static_cast<std::size_t>(row[2]);
        s.task = static_cast<TaskId>(row[3]);
        s.success = row[4] != 0;
        episodes[static_cast<std::size_t>(row[0])].segments.push_back(s);
    }
    for (std::size_t i = 0; i < n_labels; ++i) {
        std::int32_t row[3];
        labels.read(reinterpret_cast<char*>(row), sizeof(row));
        if (!labels) throw std::runtime_error("labels.bin truncated");
        episodes[static_cast<std::size_t>(row[0])].lang_windows.emplace_back(
            static_cast<std::size_t>(row[1]), static_cast<TaskId>(row[2]));
    }
    return episodes;
}

}  // namespace spil
