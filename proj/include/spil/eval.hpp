#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "spil/config.hpp"
#include "spil/policy.hpp"
#include "spil/toy_env.hpp"

namespace spil {

/// One five-task evaluation chain.
inline constexpr std::size_t kChainLength = 5;

struct ChainSpec {
    std::array<TaskId, kChainLength> tasks;
    std::size_t task_budget = 300;
};

/// Tracks which tasks are meaningful next steps given the nominal effect of
/// the tasks executed so far (a task that the previous task already
/// satisfies is excluded, e.g. open_drawer twice in a row).
class TaskValidity {
public:
    TaskValidity();  // canonical reset summary
    bool valid(TaskId task) const;
    void apply(TaskId task);
    std::vector<TaskId> valid_tasks() const;

private:
    bool drawer_open_ = false;
    bool switch_on_ = false;
    bool button_on_ = false;
    int slider_ = 0;  // -1 left, 0 middle, +1 right
    int held_block_ = -1;
};

/// Samples a compatible chain (uniform among valid successors at each
/// position).
ChainSpec sample_chain(RandomStream& rng, std::size_t task_budget);

struct EvalReport {
    std::array<double, kChainLength> rates{};  // completing >= k tasks in a row
    double avg_len = 0.0;
    std::array<std::size_t, kNumTasks> task_attempts{};
    std::array<std::size_t, kNumTasks> task_successes{};
    std::size_t n_chains = 0;
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// Anything that can plan the next skill from the current state and a goal
/// instruction; the harness executes the returned actions step by step.
class RolloutPolicy {
public:
    virtual ~RolloutPolicy() = default;
    virtual ActionSequence plan(const EnvState& state, const GoalSpec& goal) = 0;
};

/// The learned policy in receding-horizon mode (mean embedding).
class SpilRolloutPolicy : public RolloutPolicy {
public:
    SpilRolloutPolicy(const SpilPolicy& policy, const ParameterSet& params)
        : policy_(&policy), params_(&params) {}
    ActionSequence plan(const EnvState& state, const GoalSpec& goal) override;

private:
    const SpilPolicy* policy_;
    const ParameterSet* params_;
};

/// The scripted expert wrapped as a skill policy: simulates itself forward
/// n_h steps and returns those actions (the env is deterministic).
class ExpertRolloutPolicy : public RolloutPolicy {
public:
    explicit ExpertRolloutPolicy(std::size_t n_h) : n_h_(n_h) {}
    ActionSequence plan(const EnvState& state, const GoalSpec& goal) override;

private:
    std::size_t n_h_;
};

/// Emits all-zero skills (the floor every report must score 0 on).
class NullRolloutPolicy : public RolloutPolicy {
public:
    explicit NullRolloutPolicy(std::size_t n_h) : n_h_(n_h) {}
    ActionSequence plan(const EnvState&, const GoalSpec&) override;

private:
    std::size_t n_h_;
};

/// Runs n_chains sampled chains from the canonical reset; tasks are issued
/// sequentially as instruction goals and a chain stops at the first failure.
EvalReport run_chain_eval(RolloutPolicy& policy, std::size_t n_chains, std::size_t task_budget,
                          std::size_t n_h, RandomStream& rng);

struct TaskTable {
    std::array<double, kNumTasks> success{};
    std::size_t n_rollouts = 0;
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// Fixed per-task start state (canonical reset, with the widget flipped for
/// the two tasks the reset would otherwise already satisfy).
EnvState task_start_state(TaskId task);

/// Per-task success over n_rollouts from the fixed per-task start.
TaskTable run_single_task_eval(RolloutPolicy& policy, std::size_t n_rollouts,
                               std::size_t task_budget, std::size_t n_h);

/// avg_len recomputed as the sum of the >=k rates; equals avg_len exactly
/// (both reduce the same integer counts).
double sum_rate_identity(const EvalReport& report);

void write_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                       const SpilConfig& cfg);
void write_task_table(const std::filesystem::path& dir, const TaskTable& table,
                      const SpilConfig& cfg);

}  // namespace spil
