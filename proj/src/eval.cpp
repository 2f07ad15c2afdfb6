#include "spil/eval.hpp"

#include <fstream>
#include <stdexcept>

namespace spil {

TaskValidity::TaskValidity() = default;

bool TaskValidity::valid(TaskId task) const {
    switch (task) {
        case TaskId::open_drawer: return !drawer_open_;
        case TaskId::close_drawer: return drawer_open_;
        case TaskId::toggle_switch_on: return !switch_on_;
        case TaskId::toggle_switch_off: return switch_on_;
        case TaskId::move_slider_left: return slider_ != -1;
        case TaskId::move_slider_right: return slider_ != 1;
        case TaskId::push_button: return !button_on_;
        case TaskId::lift_red_block: return held_block_ != 0;
        case TaskId::lift_blue_block: return held_block_ != 1;
        case TaskId::lift_pink_block: return held_block_ != 2;
    }
    throw std::invalid_argument("TaskValidity::valid: unknown task");
}

void TaskValidity::apply(TaskId task) {
    switch (task) {
        case TaskId::open_drawer: drawer_open_ = true; break;
        case TaskId::close_drawer: drawer_open_ = false; break;
        case TaskId::toggle_switch_on: switch_on_ = true; break;
        case TaskId::toggle_switch_off: switch_on_ = false; break;
        case TaskId::move_slider_left: slider_ = -1; break;
        case TaskId::move_slider_right: slider_ = 1; break;
        case TaskId::push_button: button_on_ = true; break;
        case TaskId::lift_red_block: held_block_ = 0; break;
        case TaskId::lift_blue_block: held_block_ = 1; break;
        case TaskId::lift_pink_block: held_block_ = 2; break;
    }
}

std::vector<TaskId> TaskValidity::valid_tasks() const {
    std::vector<TaskId> out;
    for (std::size_t i = 0; i < kNumTasks; ++i) {
        TaskId id = static_cast<TaskId>(i);
        if (valid(id)) out.push_back(id);
    }
    return out;
}

ChainSpec sample_chain(RandomStream& rng, std::size_t task_budget) {
    ChainSpec spec;
    spec.task_budget = task_budget;
    TaskValidity validity;
    for (std::size_t i = 0; i < kChainLength; ++i) {
        std::vector<TaskId> candidates = validity.valid_tasks();
        spec.tasks[i] = candidates[rng.uniform_int(candidates.size())];
        validity.apply(spec.tasks[i]);
    }
    return spec;
}

ActionSequence SpilRolloutPolicy::plan(const EnvState& state, const GoalSpec& goal) {
    return policy_->act(*params_, state_features(state), goal, SpilPolicy::ActMode::mean).sequence;
}

ActionSequence ExpertRolloutPolicy::plan(const EnvState& state, const GoalSpec& goal) {
    if (goal.kind != GoalSpec::Kind::instruction) {
        throw std::invalid_argument("ExpertRolloutPolicy: needs an instruction goal");
    }
    TaskId task = InstructionVocab::entries()[goal.instruction_id].id;
    ActionSequence seq;
    seq.actions.reserve(n_h_);
    EnvState sim = state;
    RandomStream unused(0, 0);
    for (std::size_t i = 0; i < n_h_; ++i) {
        Action a = scripted_expert(sim, task, unused, 0.0);
        sim = step(sim, a);
        seq.actions.push_back(a);
    }
    return seq;
}

ActionSequence NullRolloutPolicy::plan(const EnvState&, const GoalSpec&) {
    ActionSequence seq;
    seq.actions.assign(n_h_, Action{});
    return seq;
}

namespace {

/// Executes one task inside a chain; returns true on success, leaving state
/// at the moment of success (or wherever the budget ran out).
bool run_task(RolloutPolicy& policy, EnvState& state, TaskId task, std::size_t budget) {
    GoalSpec goal = GoalSpec::instruction(InstructionVocab::index_of(task));
    if (task_success(state, task)) return true;
    std::size_t steps = 0;
    while (steps < budget) {
        ActionSequence seq = policy.plan(state, goal);
        for (const Action& a : seq.actions) {
            state = step(state, a);
            ++steps;
            if (task_success(state, task)) return true;
            if (steps >= budget) break;
        }
    }
    return false;
}

}  // namespace

EvalReport run_chain_eval(RolloutPolicy& policy, std::size_t n_chains, std::size_t task_budget,
                          std::size_t n_h, RandomStream& rng) {
    (void)n_h;
    EvalReport report;
    report.n_chains = n_chains;
    std::array<std::size_t, kChainLength + 1> completed_hist{};

    for (std::size_t chain = 0; chain < n_chains; ++chain) {
        ChainSpec spec = sample_chain(rng, task_budget);
        EnvState state = canonical_reset();
        std::size_t completed = 0;
        for (TaskId task : spec.tasks) {
            report.task_attempts[static_cast<std::size_t>(task)] += 1;
            if (!run_task(policy, state, task, spec.task_budget)) break;
            report.task_successes[static_cast<std::size_t>(task)] += 1;
            ++completed;
        }
        completed_hist[completed] += 1;
    }

    std::size_t total = 0;
    for (std::size_t k = kChainLength; k >= 1; --k) {
        total += completed_hist[k] * k;
    }
    std::size_t at_least = 0;
    for (std::size_t k = kChainLength; k >= 1; --k) {
        at_least += completed_hist[k];
        report.rates[k - 1] = static_cast<double>(at_least) / static_cast<double>(n_chains);
    }
    report.avg_len = static_cast<double>(total) / static_cast<double>(n_chains);
    return report;
}

double sum_rate_identity(const EvalReport& report) {
    double s = 0.0;
    for (double r : report.rates) s += r;
    return s;
}

EnvState task_start_state(TaskId task) {
    // Fixed per-task start; tasks the canonical reset already satisfies get
    // the opposite widget state so the rollout has work to do.
    EnvState s = canonical_reset();
    if (task == TaskId::close_drawer) s.drawer_pos = 1.0;
    if (task == TaskId::toggle_switch_off) s.switch_on = true;
    return s;
}

TaskTable run_single_task_eval(RolloutPolicy& policy, std::size_t n_rollouts,
                               std::size_t task_budget, std::size_t n_h) {
    (void)n_h;
    TaskTable table;
    table.n_rollouts = n_rollouts;
    for (std::size_t i = 0; i < kNumTasks; ++i) {
        TaskId task = static_cast<TaskId>(i);
        std::size_t wins = 0;
        for (std::size_t r = 0; r < n_rollouts; ++r) {
            EnvState state = task_start_state(task);
            if (run_task(policy, state, task, task_budget)) ++wins;
        }
        table.success[i] = static_cast<double>(wins) / static_cast<double>(n_rollouts);
    }
    return table;
}

void write_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                       const SpilConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "eval_report.csv");
    if (!csv) throw std::runtime_error("cannot write eval report in " + dir.string());
    csv << "metric,value\n";
    for (std::size_t k = 0; k < kChainLength; ++k) {
        csv << "rate_" << (k + 1) << "," << format_double(report.rates[k]) << "\n";
    }
    csv << "avg_len," << format_double(report.avg_len) << "\n";
    for (std::size_t i = 0; i < kNumTasks; ++i) {
        double frac = report.task_attempts[i] == 0
                          ? 0.0
                          : static_cast<double>(report.task_successes[i]) /
                                static_cast<double>(report.task_attempts[i]);
        csv << "task_" << task_name(static_cast<TaskId>(i)) << "," << format_double(frac) << "\n";
    }
    csv << "n_chains," << report.n_chains << "\n";
    csv << "seed," << report.seed << "\n";
    csv << "config_hash," << report.config_hash << "\n";

    std::ofstream manifest(dir / "report_manifest.txt");
    manifest << "report: chain_eval\n";
    manifest << "config_hash: " << report.config_hash << "\n";
    manifest << "seed: " << report.seed << "\n";
    manifest << serialize_config(cfg);
}

void write_task_table(const std::filesystem::path& dir, const TaskTable& table,
                      const SpilConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "task_success.csv");
    if (!csv) throw std::runtime_error("cannot write task table in " + dir.string());
    csv << "task,success\n";
    for (std::size_t i = 0; i < kNumTasks; ++i) {
        csv << task_name(static_cast<TaskId>(i)) << "," << format_double(table.success[i]) << "\n";
    }
    csv << "n_rollouts," << table.n_rollouts << "\n";
    csv << "seed," << table.seed << "\n";
    csv << "config_hash," << table.config_hash << "\n";

    std::ofstream manifest(dir / "report_manifest.txt");
    manifest << "report: single_task_eval\n";
    manifest << "config_hash: " << table.config_hash << "\n";
    manifest << "seed: " << table.seed << "\n";
    manifest << serialize_config(cfg);
}

}  // namespace spil
