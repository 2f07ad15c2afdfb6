#include "spil/props.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "spil/eval.hpp"
#include "spil/policy.hpp"
#include "spil/skill_vae.hpp"
#include "spil/toy_env.hpp"

namespace spil {

namespace {

void add(PropertyReport& rep, const std::string& name, double measured, double threshold,
         bool upper_bound = true) {
    PropertyCheck c{name, measured, threshold, upper_bound,
                    upper_bound ? measured <= threshold : measured >= threshold};
    rep.all_pass = rep.all_pass && c.pass;
    rep.checks.push_back(c);
}

ActionSequence random_sequence(RandomStream& rng, std::size_t n_h) {
    ActionSequence seq;
    seq.actions.resize(n_h);
    for (Action& a : seq.actions) {
        for (double& v : a.translation) v = rng.uniform(-0.05, 0.05);
        for (double& v : a.rotation) v = rng.uniform(-0.1, 0.1);
        a.gripper = rng.uniform(-1.0, 1.0);
    }
    return seq;
}

DiagonalGaussian random_gaussian(RandomStream& rng, std::size_t d) {
    DiagonalGaussian g;
    g.mean.resize(d);
    g.log_variance.resize(d);
    for (double& v : g.mean) v = rng.uniform(-2.0, 2.0);
    for (double& v : g.log_variance) v = rng.uniform(-2.0, 2.0);
    return g;
}

// Small config used by the gradient / assembly checks: full architecture,
// desk-toy sizes, double precision.
SpilConfig mini_config() {
    SpilConfig cfg;
    cfg.n_h = 5;
    cfg.n_z = 6;
    cfg.k_slots = 2;
    cfg.enc_hidden = 16;
    cfg.dec_hidden = 16;
    cfg.loc_hidden = 8;
    cfg.ctx_hidden = 12;
    cfg.ctx_dim = 10;
    cfg.rnn_hidden = 8;
    cfg.beta1 = 0.3;  // large weights so every term participates measurably
    cfg.beta2 = 0.2;
    cfg.gamma1 = 0.4;
    cfg.gamma2 = 0.3;
    return cfg;
}

Vec random_features(RandomStream& rng) {
    Vec f(kStateDim);
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    return f;
}

// --- Eq. (1) labeling identities -----------------------------------------

void check_labeling(PropertyReport& rep) {
    RandomStream rng(2024, 1);
    MagicWeights w;
    double max_sum_dev = 0.0, min_prob = 0.0, max_scale_dev = 0.0, max_perm_dev = 0.0;
    bool monotone_ok = true;
    for (int i = 0; i < 10000; ++i) {
        ActionSequence x = random_sequence(rng, 5);
        auto p = label_base_skill(x, w).probs;
        max_sum_dev = std::max(max_sum_dev,
                               std::abs(p.probs[0] + p.probs[1] + p.probs[2] - 1.0));
        min_prob = std::min({min_prob, p.probs[0], p.probs[1], p.probs[2]});
        for (double c : {1e-3, 1.0, 1e3}) {
            ActionSequence scaled = x;
            for (Action& a : scaled.actions) {
                for (double& v : a.translation) v *= c;
                for (double& v : a.rotation) v *= c;
                a.gripper *= c;
            }
            auto q = label_base_skill(scaled, w).probs;
            for (std::size_t k = 0; k < 3; ++k) {
                max_scale_dev = std::max(max_scale_dev, std::abs(q.probs[k] - p.probs[k]));
            }
        }
        ActionSequence permuted = x;
        std::swap(permuted.actions[0], permuted.actions[4]);
        std::swap(permuted.actions[1], permuted.actions[3]);
        auto q = label_base_skill(permuted, w).probs;
        for (std::size_t k = 0; k < 3; ++k) {
            max_perm_dev = std::max(max_perm_dev, std::abs(q.probs[k] - p.probs[k]));
        }
        if (i < 1000) {
            ActionSequence more_grip = x;
            bool had_grip = false;
            for (Action& a : more_grip.actions) {
                if (a.gripper != 0.0) had_grip = true;
                a.gripper *= 2.0;
            }
            if (had_grip) {
                auto g = label_base_skill(more_grip, w).probs;
                if (!(g.probs[2] > p.probs[2])) monotone_ok = false;
            }
        }
    }
    add(rep, "eq1.normalization(max |sum-1|, 1e4 seqs)", max_sum_dev, 1e-12);
    add(rep, "eq1.nonnegativity(min prob)", min_prob, 0.0, false);
    add(rep, "eq1.scale_invariance(max dev, c in {1e-3,1,1e3})", max_scale_dev, 1e-12);
    add(rep, "eq1.permutation_invariance(max dev)", max_perm_dev, 1e-12);
    add(rep, "eq1.gripper_monotonicity(all strict)", monotone_ok ? 1.0 : 0.0, 1.0, false);

    // Worked examples against the hand oracle.
    ActionSequence pure;
    pure.actions.assign(5, Action{{0.1, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.0});
    auto p_pure = label_base_skill(pure, w).probs;
    double hand_dev = std::abs(p_pure.probs[0] - 1.0) + std::abs(p_pure.probs[1]) +
                      std::abs(p_pure.probs[2]);
    ActionSequence ones;
    ones.actions.assign(5, Action{{0.2, 0.0, 0.0}, {0.0, 0.2, 0.0}, 0.2});  // magnitudes (1,1,1)
    auto p_ones = label_base_skill(ones, w).probs;
    double denom = 1.4 + 3.0 + 0.75;
    hand_dev = std::max(hand_dev, std::abs(p_ones.probs[0] - 1.4 / denom));
    hand_dev = std::max(hand_dev, std::abs(p_ones.probs[1] - 3.0 / denom));
    hand_dev = std::max(hand_dev, std::abs(p_ones.probs[2] - 0.75 / denom));
    add(rep, "eq1.worked_examples(max dev vs hand oracle)", hand_dev, 1e-9);
}

// --- KL / Huber / sampler --------------------------------------------------

void check_prob_core(PropertyReport& rep) {
    RandomStream rng(2024, 2);
    double max_self = 0.0, min_kl = 0.0;
    for (int i = 0; i < 1000; ++i) {
        DiagonalGaussian q = random_gaussian(rng, 4);
        DiagonalGaussian p = random_gaussian(rng, 4);
        max_self = std::max(max_self, std::abs(kl_gaussian(q, q)));
        min_kl = std::min(min_kl, kl_gaussian(q, p));
    }
    add(rep, "kl_gaussian.self_zero(max, 1000 draws)", max_self, 0.0);
    add(rep, "kl_gaussian.nonnegative(min, 1000 pairs)", min_kl, 0.0, false);

    // Monte-Carlo agreement: E_q[ln q - ln p] over 1e6 samples.
    double worst_rel = 0.0;
    for (int pair = 0; pair < 10; ++pair) {
        DiagonalGaussian q = random_gaussian(rng, 3);
        DiagonalGaussian p = random_gaussian(rng, 3);
        double exact = kl_gaussian(q, p);
        double mc = 0.0;
        const int n = 1000000;
        for (int s = 0; s < n; ++s) {
            double logq = 0.0, logp = 0.0;
            for (std::size_t d = 0; d < 3; ++d) {
                double z = q.mean[d] + std::exp(0.5 * q.log_variance[d]) * rng.normal();
                double dq = z - q.mean[d];
                double dp = z - p.mean[d];
                logq += -0.5 * (q.log_variance[d] + dq * dq * std::exp(-q.log_variance[d]));
                logp += -0.5 * (p.log_variance[d] + dp * dp * std::exp(-p.log_variance[d]));
            }
            mc += (logq - logp - mc) / (s + 1);
        }
        worst_rel = std::max(worst_rel, std::abs(mc - exact) / std::max(std::abs(exact), 1e-12));
    }
    add(rep, "kl_gaussian.monte_carlo(worst rel err, 10 pairs x 1e6)", worst_rel, 0.01);

    double cat_self = kl_categorical(Categorical3{{0.2, 0.5, 0.3}}, Categorical3{{0.2, 0.5, 0.3}});
    double cat_min = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double a = rng.uniform(0.01, 1), b = rng.uniform(0.01, 1), c = rng.uniform(0.01, 1);
        double s = a + b + c;
        double d = rng.uniform(0.01, 1), e = rng.uniform(0.01, 1), f = rng.uniform(0.01, 1);
        double t = d + e + f;
        cat_min = std::min(cat_min, kl_categorical(Categorical3{{a / s, b / s, c / s}},
                                                   Categorical3{{d / t, e / t, f / t}}));
    }
    add(rep, "kl_categorical.self_zero", std::abs(cat_self), 0.0);
    add(rep, "kl_categorical.nonnegative(min, 1000 pairs)", cat_min, 0.0, false);

    // Huber C1 continuity at |r| = delta.
    double delta = 1.0;
    double h = 1e-7;
    auto slope = [&](double r) {
        Vec a{r + 1e-7}, b{r - 1e-7}, t{0.0};
        return (huber(a, t, delta) - huber(b, t, delta)) / 2e-7;
    };
    double kink = std::abs(slope(delta + h) - slope(delta - h));
    add(rep, "huber.c1_continuity(slope gap at delta)", kink, 1e-5);

    // Sampler statistics, D = 20, 1e5 draws.
    DiagonalGaussian g = random_gaussian(rng, 20);
    RandomStream srng(7, 99);
    Vec mean(20, 0.0), m2(20, 0.0);
    const int n_draws = 100000;
    for (int i = 0; i < n_draws; ++i) {
        Vec z = sample_gaussian(g, srng);
        for (std::size_t d = 0; d < 20; ++d) {
            double delta1 = z[d] - mean[d];
            mean[d] += delta1 / (i + 1);
            m2[d] += delta1 * (z[d] - mean[d]);
        }
    }
    double worst_mean = 0.0, worst_var = 0.0;
    for (std::size_t d = 0; d < 20; ++d) {
        double sd = std::exp(0.5 * g.log_variance[d]);
        worst_mean = std::max(worst_mean, std::abs(mean[d] - g.mean[d]) / sd);
        double var = m2[d] / n_draws;
        worst_var = std::max(worst_var, std::abs(var / std::exp(g.log_variance[d]) - 1.0));
    }
    add(rep, "sampler.mean(worst standardized dev, 1e5 draws)", worst_mean, 0.02);
    add(rep, "sampler.variance(worst rel dev)", worst_var, 0.03);

    RandomStream a(42, 5), b(42, 5);
    DiagonalGaussian std20 = DiagonalGaussian::standard(20);
    Vec za = sample_gaussian(std20, a), zb = sample_gaussian(std20, b);
    double det_dev = 0.0;
    for (std::size_t d = 0; d < 20; ++d) det_dev = std::max(det_dev, std::abs(za[d] - zb[d]));
    add(rep, "sampler.determinism(same seed/stream)", det_dev, 0.0);

    RandomStream arng(11, 3);
    int augmented = 0;
    ActionSequence probe = random_sequence(arng, 5);
    for (int i = 0; i < 10000; ++i) {
        ActionSequence out = augment_sequence(probe, arng, 0.5);
        if (out.actions[4].gripper == 0.0 && out.actions[4].translation[0] == 0.0 &&
            out.actions[2].translation[0] == 0.0) {
            ++augmented;
        }
    }
    add(rep, "augment.frequency(|freq-0.5|, 1e4 draws)", std::abs(augmented / 10000.0 - 0.5), 0.02);
}

// --- Gradient checks and term assembly --------------------------------------

void check_gradients(PropertyReport& rep) {
    SpilConfig cfg = mini_config();
    RandomStream rng(31, 7);

    // Stage-1 loss.
    SkillVae vae(cfg);
    double worst_vae = 0.0;
    for (int inst = 0; inst < 2; ++inst) {
        RandomStream init = rng.derive(inst);
        ParameterSet params = vae.init_params(init);
        ActionSequence x = random_sequence(rng, cfg.n_h);
        Vec eps(cfg.n_z);
        for (double& e : eps) e = rng.normal();
        ParameterSet grads = params.zeros_like();
        vae.elbo_loss_with_grad(params, x, eps, 1.0, &grads);
        RandomStream pick = rng.derive(100 + inst);
        double err = gradient_check(
            [&](const ParameterSet& p) { return vae.elbo_loss_with_grad(p, x, eps, 1.0, nullptr).total; },
            params, grads, pick, {}, 200);
        worst_vae = std::max(worst_vae, err);
    }
    add(rep, "grad.eq2(max rel err, 2 instances)", worst_vae, 1e-4);

    // Negative control: a planted gradient error must be flagged.
    {
        RandomStream init = rng.derive(55);
        ParameterSet params = vae.init_params(init);
        ActionSequence x = random_sequence(rng, cfg.n_h);
        Vec eps(cfg.n_z);
        for (double& e : eps) e = rng.normal();
        ParameterSet grads = params.zeros_like();
        vae.elbo_loss_with_grad(params, x, eps, 1.0, &grads);
        grads.at("enc.W0").data[3] += 0.5;  // the planted error
        RandomStream pick = rng.derive(56);
        double err = gradient_check(
            [&](const ParameterSet& p) { return vae.elbo_loss_with_grad(p, x, eps, 1.0, nullptr).total; },
            params, grads, pick, {"enc.W0"}, params.at("enc.W0").size());
        add(rep, "grad.negative_control(planted error detected)", err, 1e-4, false);
    }

    // Stage-2 loss.
    SpilPolicy policy(cfg, kStateDim, kNumTasks);
    double worst_spil = 0.0, worst_frozen = 0.0;
    for (int inst = 0; inst < 2; ++inst) {
        RandomStream s1init = rng.derive(200 + inst);
        ParameterSet stage1 = SkillVae(cfg).init_params(s1init);
        RandomStream pinit = rng.derive(300 + inst);
        ParameterSet params = policy.init_params(stage1, pinit);

        Vec window(cfg.k_slots * cfg.n_h * Action::kDim);
        for (double& v : window) v = rng.uniform(-0.3, 0.3);
        Vec feats = random_features(rng);
        GoalSpec goal = inst % 2 == 0 ? GoalSpec::state(random_features(rng))
                                      : GoalSpec::instruction(inst % kNumTasks);
        Vec eps(cfg.k_slots * cfg.n_z);
        for (double& e : eps) e = rng.normal();

        ParameterSet grads = params.zeros_like();
        policy.loss_with_grad(params, window, feats, goal, eps, 1.0, &grads);

        auto trainable = names_with_prefixes(params, std::array<std::string, 3>{"ctx.", "sel.", "bsel."});
        RandomStream pick = rng.derive(400 + inst);
        double err = gradient_check(
            [&](const ParameterSet& p) {
                return policy.loss_with_grad(p, window, feats, goal, eps, 1.0, nullptr).total;
            },
            params, grads, pick, trainable, 200);
        worst_spil = std::max(worst_spil, err);

        for (const std::string& n : names_with_prefixes(params, std::array<std::string, 2>{"dec.", "loc."})) {
            for (double v : grads.at(n).data) worst_frozen = std::max(worst_frozen, std::abs(v));
        }
    }
    add(rep, "grad.eq5(max rel err, trainables, 2 instances)", worst_spil, 1e-4);
    add(rep, "grad.eq5_frozen(max |d theta,kappa|)", worst_frozen, 0.0);

    // Term assembly on 100 random instances, both losses.
    double worst_asm2 = 0.0, worst_asm5 = 0.0;
    SkillVae vae2(cfg);
    RandomStream arng(77, 2);
    RandomStream ainit = arng.derive(0);
    ParameterSet vp = vae2.init_params(ainit);
    RandomStream s1i = arng.derive(1);
    ParameterSet s1 = SkillVae(cfg).init_params(s1i);
    RandomStream pi = arng.derive(2);
    ParameterSet pp = policy.init_params(s1, pi);
    for (int i = 0; i < 100; ++i) {
        ActionSequence x = random_sequence(arng, cfg.n_h);
        Vec eps(cfg.n_z);
        for (double& e : eps) e = arng.normal();
        auto t = vae2.elbo_loss_with_grad(vp, x, eps, 1.0, nullptr);
        double assembled = t.reconstruction + cfg.beta1 * t.regularizer + cfg.beta2 * t.skill;
        worst_asm2 = std::max(worst_asm2, std::abs(t.total - assembled));

        Vec window(cfg.k_slots * cfg.n_h * Action::kDim);
        for (double& v : window) v = arng.uniform(-0.3, 0.3);
        Vec feats = random_features(arng);
        GoalSpec goal = GoalSpec::state(random_features(arng));
        Vec eps5(cfg.k_slots * cfg.n_z);
        for (double& e : eps5) e = arng.normal();
        auto t5 = policy.loss_with_grad(pp, window, feats, goal, eps5, 1.0, nullptr);
        double assembled5 = t5.reconstruction + cfg.gamma1 * t5.skill + cfg.gamma2 * t5.categorical;
        worst_asm5 = std::max(worst_asm5, std::abs(t5.total - assembled5));
    }
    add(rep, "assembly.eq2(max |total-sum|, 100 instances)", worst_asm2, 1e-9);
    add(rep, "assembly.eq5(max |total-sum|, 100 instances)", worst_asm5, 1e-9);

    // Labeler output is a constant: grads must not change when the labels
    // are supplied externally as fixed values.
    {
        RandomStream init = rng.derive(500);
        ParameterSet params = vae.init_params(init);
        ActionSequence x = random_sequence(rng, cfg.n_h);
        Vec eps(cfg.n_z);
        for (double& e : eps) e = rng.normal();
        ParameterSet g1 = params.zeros_like(), g2 = params.zeros_like();
        vae.elbo_loss_with_grad(params, x, eps, 1.0, &g1);
        Categorical3 fixed = label_base_skill(x, cfg.magic_weights()).probs;
        vae.elbo_loss_with_grad(params, x, eps, 1.0, &g2, &fixed);
        double dev = 0.0;
        for (const std::string& n : params.names()) {
            for (std::size_t i = 0; i < g1.at(n).size(); ++i) {
                dev = std::max(dev, std::abs(g1.at(n).data[i] - g2.at(n).data[i]));
            }
        }
        add(rep, "grad.eq2_labels_constant(max grad dev)", dev, 0.0);
    }
}

// --- Simulator and datasets --------------------------------------------------

void check_env(PropertyReport& rep) {
    RandomStream rng(5150, 0);
    double max_abs_pos = 0.0, max_abs_wrap = 0.0;
    bool all_finite = true, grasp_ok = true;
    EnvState state = random_reset(rng);
    for (int i = 0; i < 100000; ++i) {
        Action a;
        for (double& v : a.translation) v = rng.uniform(-0.2, 0.2);
        for (double& v : a.rotation) v = rng.uniform(-0.5, 0.5);
        a.gripper = rng.uniform(-1.0, 1.0);
        state = step(state, a);
        for (double v : state.ee_position) {
            if (!std::isfinite(v)) all_finite = false;
            max_abs_pos = std::max(max_abs_pos, std::abs(v));
        }
        for (double v : state.ee_orientation) {
            if (!std::isfinite(v)) all_finite = false;
            max_abs_wrap = std::max(max_abs_wrap, std::abs(v));
        }
        if (state.held_object >= 0) {
            const auto& b = state.block_positions[state.held_object];
            for (std::size_t c = 0; c < 3; ++c) {
                if (std::abs(b[c] - (state.ee_position[c] + env::kGraspOffset[c])) > 1e-12) {
                    grasp_ok = false;
                }
            }
        }
        if (i % 20000 == 19999) state = random_reset(rng);
    }
    add(rep, "env.finite_and_boxed(max |ee|, 1e5 steps)", all_finite ? max_abs_pos : 1e9, 1.0);
    add(rep, "env.orientation_wrapped(max |angle|)", max_abs_wrap, 3.14159265358979 + 1e-12);
    add(rep, "env.grasp_tracking(held block at offset)", grasp_ok ? 0.0 : 1.0, 0.0);

    // Expert closure: every task from 20 random resets within 300 steps.
    RandomStream reset_rng(99, 1);
    std::size_t worst_steps = 0;
    bool all_solved = true;
    for (int r = 0; r < 20; ++r) {
        EnvState start = random_reset(reset_rng);
        for (std::size_t ti = 0; ti < kNumTasks; ++ti) {
            TaskId task = static_cast<TaskId>(ti);
            EnvState s = start;
            RandomStream dummy(0, 0);
            std::size_t steps = 0;
            while (!task_success(s, task) && steps < 300) {
                s = step(s, scripted_expert(s, task, dummy, 0.0));
                ++steps;
            }
            if (!task_success(s, task)) all_solved = false;
            worst_steps = std::max(worst_steps, steps);
        }
    }
    add(rep, "env.expert_closure(worst steps, 20 resets x 10 tasks)",
        all_solved ? static_cast<double>(worst_steps) : 1e9, 300.0);

    // Dataset counting at a non-trivial fraction.
    RandomStream gen_rng(4242, 0);
    const std::size_t n_ep = 8, ep_len = 120, window = 30;
    auto episodes = generate_play_data(n_ep, ep_len, 0.37, window, 0.2, gen_rng);
    std::size_t n_windows = 0, n_lang = 0;
    for (const auto& ep : episodes) {
        n_windows += ep.actions.size() - window + 1;
        n_lang += ep.lang_windows.size();
    }
    std::size_t expected = static_cast<std::size_t>(std::ceil(0.37 * static_cast<double>(n_windows)));
    std::size_t eligible = 0;
    for (const auto& ep : episodes) {
        for (const auto& seg : ep.segments) {
            if (seg.success && seg.end - seg.start >= window) eligible += seg.end - seg.start - window + 1;
        }
    }
    expected = std::min(expected, eligible);
    add(rep, "data.lang_count(|count-formula|)",
        std::abs(static_cast<double>(n_lang) - static_cast<double>(expected)), 0.0);

    auto data = make_datasets(std::move(episodes), 6, 5);
    std::size_t expected_vae = n_ep * (ep_len - 5 + 1);
    add(rep, "data.vae_count(|count-formula|)",
        std::abs(static_cast<double>(data.vae.size()) - static_cast<double>(expected_vae)), 0.0);
}

// --- Evaluation harness --------------------------------------------------

void check_eval(PropertyReport& rep) {
    NullRolloutPolicy null_policy(5);
    RandomStream rng(7, 7);
    EvalReport null_rep = run_chain_eval(null_policy, 20, 60, 5, rng);
    add(rep, "eval.null_policy(avg len)", null_rep.avg_len, 0.0);

    ExpertRolloutPolicy expert(5);
    RandomStream rng2(7, 8);
    EvalReport exp_rep = run_chain_eval(expert, 20, 300, 5, rng2);
    bool monotone = true;
    for (std::size_t k = 1; k < kChainLength; ++k) {
        if (exp_rep.rates[k] > exp_rep.rates[k - 1]) monotone = false;
    }
    add(rep, "eval.monotonic_rates", monotone ? 0.0 : 1.0, 0.0);
    add(rep, "eval.sum_rate_identity(|avg - sum rates|)",
        std::abs(exp_rep.avg_len - sum_rate_identity(exp_rep)), 1e-12);
    add(rep, "eval.expert_chains(avg len, 20 chains)", exp_rep.avg_len, 4.9, false);

    // Checkpoint round-trip is bit-exact.
    SpilConfig cfg = mini_config();
    RandomStream crng(3, 3);
    ParameterSet params = SkillVae(cfg).init_params(crng);
    auto dir = std::filesystem::temp_directory_path() / "spil_prop_ckpt";
    save_checkpoint(dir, params, {{"stage", "skill_vae"}, {"seed", "3"}});
    ParameterSet loaded = load_checkpoint(dir);
    double dev = 0.0;
    for (const std::string& n : params.names()) {
        const Vec& a = params.at(n).data;
        const Vec& b = loaded.at(n).data;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) dev += 1.0;
        }
    }
    add(rep, "checkpoint.bit_exact_roundtrip(mismatched doubles)", dev, 0.0);
}

}  // namespace

PropertyReport run_property_suite() {
    PropertyReport rep;
    check_labeling(rep);
    check_prob_core(rep);
    check_gradients(rep);
    check_env(rep);
    check_eval(rep);
    return rep;
}

std::string format_property_report(const PropertyReport& report) {
    std::ostringstream out;
    for (const PropertyCheck& c : report.checks) {
        out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  measured=" << c.measured
            << (c.upper_bound ? " <= " : " >= ") << c.threshold << "\n";
    }
    out << (report.all_pass ? "ALL CHECKS PASSED" : "CHECKS FAILED") << " ("
        << report.checks.size() << " checks)\n";
    return out.str();
}

}  // namespace spil
