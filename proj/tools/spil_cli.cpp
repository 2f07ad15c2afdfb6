#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "spil/config.hpp"
#include "spil/eval.hpp"
#include "spil/policy.hpp"
#include "spil/props.hpp"
#include "spil/skill_vae.hpp"
#include "spil/toy_env.hpp"

namespace {

using namespace spil;

void require_artifact(const std::filesystem::path& path, const std::string& what,
                      const std::string& hint) {
    if (!std::filesystem::exists(path)) {
        throw std::invalid_argument(what + " not found at " + path.string() + " (" + hint + ")");
    }
}

Datasets load_datasets(const std::filesystem::path& data_dir, const SpilConfig& cfg) {
    require_artifact(data_dir / "manifest.txt", "dataset", "run gen-data first");
    return make_datasets(load_dataset(data_dir), cfg.k_slots, cfg.n_h);
}

std::pair<ParameterSet, std::vector<std::pair<std::string, std::string>>> load_stage1(
    const std::filesystem::path& dir, const SpilConfig& cfg) {
    require_artifact(dir / "manifest.txt", "stage-1 checkpoint", "run train-vae first");
    std::vector<std::pair<std::string, std::string>> fields;
    ParameterSet params = load_checkpoint(dir, &fields);
    validate_stage1_checkpoint(fields, cfg);
    return {std::move(params), std::move(fields)};
}

void write_vae_log(const std::filesystem::path& dir, const std::vector<VaeTrainLogEntry>& log) {
    std::ofstream f(dir / "train_log.csv");
    f << "step,total,reconstruction,regularizer,skill\n";
    for (std::size_t i = 0; i < log.size(); ++i) {
        f << i << "," << format_double(log[i].total) << "," << format_double(log[i].reconstruction)
          << "," << format_double(log[i].regularizer) << "," << format_double(log[i].skill) << "\n";
    }
}

void write_spil_log(const std::filesystem::path& dir, const std::vector<SpilTrainLogEntry>& log) {
    std::ofstream f(dir / "train_log.csv");
    f << "step,total,reconstruction,skill,categorical\n";
    for (std::size_t i = 0; i < log.size(); ++i) {
        f << i << "," << format_double(log[i].total) << "," << format_double(log[i].reconstruction)
          << "," << format_double(log[i].skill) << "," << format_double(log[i].categorical) << "\n";
    }
}

int run_gen_data(const SpilConfig& cfg, const std::filesystem::path& out) {
    RandomStream rng(cfg.seed, streams::data_gen);
    auto episodes = generate_play_data(cfg.n_episodes, cfg.episode_length, cfg.lang_fraction,
                                       cfg.k_slots * cfg.n_h, cfg.expert_noise, rng);
    DatasetMeta meta{cfg.seed, config_hash_hex(cfg), cfg.k_slots * cfg.n_h};
    save_dataset(out, episodes, meta);
    std::size_t n_lang = 0;
    for (const auto& ep : episodes) n_lang += ep.lang_windows.size();
    std::cout << "wrote " << episodes.size() << " episodes (" << n_lang
              << " language-labeled windows) to " << out.string() << "\n";
    return 0;
}

int run_train_vae(const SpilConfig& cfg, const std::filesystem::path& data_dir,
                  const std::filesystem::path& out) {
    Datasets data = load_datasets(data_dir, cfg);
    auto sequences = materialize_vae_dataset(data);
    RandomStream rng(cfg.seed, streams::vae_train);
    VaeTrainResult result = train_skill_vae(sequences, cfg, rng);
    save_checkpoint(out, result.params,
                    {{"stage", "skill_vae"},
                     {"seed", std::to_string(cfg.seed)},
                     {"config_hash", config_hash_hex(cfg)},
                     {"n_z", std::to_string(cfg.n_z)},
                     {"n_h", std::to_string(cfg.n_h)}});
    write_vae_log(out, result.log);
    std::cout << "trained skill VAE for " << result.log.size() << " steps on " << sequences.size()
              << " sequences; checkpoint at " << out.string() << "\n";
    return 0;
}

int run_train_spil(const SpilConfig& cfg, const std::filesystem::path& data_dir,
                   const std::filesystem::path& vae_dir, const std::filesystem::path& out) {
    auto [stage1, fields] = load_stage1(vae_dir, cfg);
    Datasets data = load_datasets(data_dir, cfg);
    RandomStream rng(cfg.seed, streams::spil_train);
    SpilTrainResult result = train_spil(data, stage1, cfg, rng);
    save_checkpoint(out, result.params,
                    {{"stage", "spil"},
                     {"seed", std::to_string(cfg.seed)},
                     {"config_hash", config_hash_hex(cfg)},
                     {"stage1_config_hash", checkpoint_field(fields, "config_hash")},
                     {"n_z", std::to_string(cfg.n_z)},
                     {"n_h", std::to_string(cfg.n_h)}});
    write_spil_log(out, result.log);
    std::cout << "trained policy for " << result.log.size() << " steps (" << data.play.size()
              << " play / " << data.lang.size() << " lang windows); checkpoint at " << out.string()
              << "\n";
    return 0;
}

std::pair<SpilPolicy, ParameterSet> load_policy(const std::filesystem::path& dir,
                                                const SpilConfig& cfg) {
    require_artifact(dir / "manifest.txt", "policy checkpoint", "run train-spil first");
    std::vector<std::pair<std::string, std::string>> fields;
    ParameterSet params = load_checkpoint(dir, &fields);
    if (checkpoint_field(fields, "stage") != "spil") {
        throw std::invalid_argument("checkpoint at " + dir.string() + " is not a spil policy");
    }
    return {SpilPolicy(cfg, kStateDim, kNumTasks), std::move(params)};
}

std::unique_ptr<RolloutPolicy> make_rollout_policy(const std::string& kind, const SpilPolicy& policy,
                                                   const ParameterSet& params, std::size_t n_h) {
    if (kind == "spil") return std::make_unique<SpilRolloutPolicy>(policy, params);
    if (kind == "expert") return std::make_unique<ExpertRolloutPolicy>(n_h);
    if (kind == "null") return std::make_unique<NullRolloutPolicy>(n_h);
    throw std::invalid_argument("unknown policy kind: " + kind);
}

int run_eval_chains(const SpilConfig& cfg, const std::filesystem::path& spil_dir,
                    const std::string& kind, const std::filesystem::path& out) {
    SpilPolicy policy(cfg, kStateDim, kNumTasks);
    ParameterSet params;
    if (kind == "spil") {
        auto loaded = load_policy(spil_dir, cfg);
        policy = std::move(loaded.first);
        params = std::move(loaded.second);
    }
    auto rollout = make_rollout_policy(kind, policy, params, cfg.n_h);
    RandomStream rng(cfg.seed, streams::chain_eval);
    EvalReport report = run_chain_eval(*rollout, cfg.n_chains, cfg.task_budget, cfg.n_h, rng);
    report.config_hash = config_hash_hex(cfg);
    report.seed = cfg.seed;
    write_eval_report(out, report, cfg);
    std::cout << "chain eval (" << kind << "): avg_len=" << format_double(report.avg_len)
              << " over " << report.n_chains << " chains; report at " << out.string() << "\n";
    return 0;
}

int run_eval_mtlc(const SpilConfig& cfg, const std::filesystem::path& spil_dir,
                  const std::string& kind, const std::filesystem::path& out) {
    SpilPolicy policy(cfg, kStateDim, kNumTasks);
    ParameterSet params;
    if (kind == "spil") {
        auto loaded = load_policy(spil_dir, cfg);
        policy = std::move(loaded.first);
        params = std::move(loaded.second);
    }
    auto rollout = make_rollout_policy(kind, policy, params, cfg.n_h);
    TaskTable table = run_single_task_eval(*rollout, cfg.n_rollouts, cfg.task_budget, cfg.n_h);
    table.config_hash = config_hash_hex(cfg);
    table.seed = cfg.seed;
    write_task_table(out, table, cfg);
    double avg = 0.0;
    for (double s : table.success) avg += s / kNumTasks;
    std::cout << "single-task eval (" << kind << "): mean success=" << format_double(avg)
              << "; table at " << out.string() << "\n";
    return 0;
}

int run_export_latent(const SpilConfig& cfg, const std::filesystem::path& vae_dir,
                      const std::filesystem::path& data_dir, const std::filesystem::path& out) {
    auto [stage1, fields] = load_stage1(vae_dir, cfg);
    Datasets data = load_datasets(data_dir, cfg);
    auto sequences = materialize_vae_dataset(data);
    SkillVae vae(cfg);
    LatentExport exp = export_latent(vae, stage1, sequences, nullptr, out);
    std::cout << "exported latent projection: " << exp.points[0].size() << " translation, "
              << exp.points[1].size() << " rotation, " << exp.points[2].size()
              << " grasping points to " << out.string() << "\n";
    return 0;
}

int run_check() {
    PropertyReport report = run_property_suite();
    std::cout << format_property_report(report);
    return report.all_pass ? 0 : 2;
}

int run_ablate(SpilConfig cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& vae_dir, const std::filesystem::path& out) {
    cfg.gamma1 = 0.0;
    cfg.gamma2 = 0.0;
    int rc = run_train_spil(cfg, data_dir, vae_dir, out / "spil_ablation");
    if (rc != 0) return rc;
    return run_eval_chains(cfg, out / "spil_ablation", "spil", out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skill-prior imitation learning on a kinematic tabletop environment"};
    app.require_subcommand(1);

    std::string config_path, data_dir, vae_dir, spil_dir, out_dir = "out", policy_kind = "spil";
    std::uint64_t seed = 0;
    bool seed_given = false;

    app.add_option("--config", config_path, "flat key = value configuration file")->each([](const std::string&) {});
    app.add_option("--seed", seed, "override the config seed")->each([&seed_given](const std::string&) {
        seed_given = true;
    });
    app.add_option("--out", out_dir, "output directory");
    app.fallthrough();

    auto* gen = app.add_subcommand("gen-data", "generate play data with the scripted experts");
    auto* tv = app.add_subcommand("train-vae", "train the stage-1 skill embedding space");
    tv->add_option("--data", data_dir, "dataset directory")->required();
    auto* ts = app.add_subcommand("train-spil", "train the stage-2 goal-conditioned policy");
    ts->add_option("--data", data_dir, "dataset directory")->required();
    ts->add_option("--vae", vae_dir, "stage-1 checkpoint directory")->required();
    auto* ec = app.add_subcommand("eval-chains", "evaluate five-task instruction chains");
    ec->add_option("--spil", spil_dir, "policy checkpoint directory");
    ec->add_option("--policy", policy_kind, "spil | expert | null");
    auto* em = app.add_subcommand("eval-mtlc", "evaluate each task from the canonical reset");
    em->add_option("--spil", spil_dir, "policy checkpoint directory");
    em->add_option("--policy", policy_kind, "spil | expert | null");
    auto* el = app.add_subcommand("export-latent", "project posterior means to 2-D csv files");
    el->add_option("--vae", vae_dir, "stage-1 checkpoint directory")->required();
    el->add_option("--data", data_dir, "dataset directory")->required();
    auto* ck = app.add_subcommand("check", "run the property suite");
    auto* ab = app.add_subcommand("ablate", "retrain and evaluate with gamma1 = gamma2 = 0");
    ab->add_option("--data", data_dir, "dataset directory")->required();
    ab->add_option("--vae", vae_dir, "stage-1 checkpoint directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        SpilConfig cfg;
        if (!config_path.empty()) load_config_file(config_path, cfg);
        if (seed_given) cfg.seed = seed;
        cfg.validate();
        std::filesystem::path out(out_dir);

        if (gen->parsed()) return run_gen_data(cfg, out);
        if (tv->parsed()) return run_train_vae(cfg, data_dir, out);
        if (ts->parsed()) return run_train_spil(cfg, data_dir, vae_dir, out);
        if (ec->parsed()) {
            if (policy_kind == "spil" && spil_dir.empty()) {
                throw std::invalid_argument("--spil checkpoint directory required for policy=spil");
            }
            return run_eval_chains(cfg, spil_dir, policy_kind, out);
        }
        if (em->parsed()) {
            if (policy_kind == "spil" && spil_dir.empty()) {
                throw std::invalid_argument("--spil checkpoint directory required for policy=spil");
            }
            return run_eval_mtlc(cfg, spil_dir, policy_kind, out);
        }
        if (el->parsed()) return run_export_latent(cfg, vae_dir, data_dir, out);
        if (ck->parsed()) return run_check();
        if (ab->parsed()) return run_ablate(cfg, data_dir, vae_dir, out);
        std::cerr << app.help();
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}
