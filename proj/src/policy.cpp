#include "spil/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spil {

namespace {

constexpr std::size_t kActionDim = Action::kDim;

void one_hot3(std::size_t k, Vec& out) {
    out.assign(3, 0.0);
    out[k] = 1.0;
}

// Stable log-softmax over 3 logits.
std::array<double, 3> log_softmax3(std::span<const double> logits) {
    double m = std::max({logits[0], logits[1], logits[2]});
    double lse = 0.0;
    for (std::size_t i = 0; i < 3; ++i) lse += std::exp(logits[i] - m);
    lse = m + std::log(lse);
    return {logits[0] - lse, logits[1] - lse, logits[2] - lse};
}

}  // namespace

SpilPolicy::SpilPolicy(const SpilConfig& cfg, std::size_t state_dim, std::size_t n_instructions)
    : cfg_(cfg),
      state_dim_(state_dim),
      n_instructions_(n_instructions),
      state_enc_("ctx.state", {state_dim, cfg.ctx_hidden, cfg.ctx_dim}, Activation::tanh,
                 Activation::identity),
      goal_state_enc_("ctx.goal", {state_dim, cfg.ctx_hidden, cfg.ctx_dim}, Activation::tanh,
                      Activation::identity),
      instr_emb_("ctx.instr", n_instructions, cfg.ctx_dim),
      fuse_("ctx.fuse", {2 * cfg.ctx_dim, cfg.ctx_hidden, cfg.ctx_dim}, Activation::tanh,
            Activation::identity),
      slot_emb_("sel.slot", cfg.k_slots, cfg.ctx_dim),
      sel_rnn_("sel.rnn", cfg.ctx_dim, cfg.rnn_hidden, rnn_cell_from_string(cfg.rnn_cell)),
      sel_head_("sel.head", {2 * cfg.rnn_hidden, 2 * cfg.n_z}, Activation::tanh,
                Activation::identity),
      bsel_rnn_("bsel.rnn", cfg.ctx_dim, cfg.rnn_hidden, rnn_cell_from_string(cfg.rnn_cell)),
      bsel_head_("bsel.head", {2 * cfg.rnn_hidden, 3}, Activation::tanh, Activation::identity),
      decoder_("dec", {cfg.n_z, cfg.dec_hidden, cfg.dec_hidden, cfg.n_h * kActionDim},
               Activation::tanh, Activation::identity),
      locator_("loc", {3, cfg.loc_hidden, 2 * cfg.n_z}, Activation::tanh, Activation::identity) {}

ParameterSet SpilPolicy::init_params(const ParameterSet& stage1, RandomStream& rng) const {
    ParameterSet params;
    RandomStream r0 = rng.derive(1);
    RandomStream r1 = rng.derive(2);
    RandomStream r2 = rng.derive(3);
    RandomStream r3 = rng.derive(4);
    RandomStream r4 = rng.derive(5);
    RandomStream r5 = rng.derive(6);
    RandomStream r6 = rng.derive(7);
    RandomStream r7 = rng.derive(8);
    RandomStream r8 = rng.derive(9);
    state_enc_.init(params, r0);
    goal_state_enc_.init(params, r1);
    instr_emb_.init(params, r2);
    fuse_.init(params, r3);
    slot_emb_.init(params, r4);
    sel_rnn_.init(params, r5);
    sel_head_.init(params, r6);
    bsel_rnn_.init(params, r7);
    bsel_head_.init(params, r8);

    // Frozen generator and locator: byte-copied from stage 1.
    RandomStream probe(0, 0);
    ParameterSet expected;
    decoder_.init(expected, probe);
    locator_.init(expected, probe);
    for (const std::string& name : expected.names()) {
        if (!stage1.has(name)) {
            throw std::invalid_argument("stage-1 checkpoint missing tensor " + name);
        }
        const Tensor& src = stage1.at(name);
        if (src.shape != expected.at(name).shape) {
            throw std::invalid_argument("stage-1 tensor shape mismatch for " + name);
        }
        params.add(name, src.shape).data = src.data;
    }
    return params;
}

Vec SpilPolicy::encode_context(const ParameterSet& params, std::span<const double> state_feats,
                               const GoalSpec& goal) const {
    Vec state_emb = state_enc_.forward(params, state_feats);
    Vec goal_emb;
    if (goal.kind == GoalSpec::Kind::state_goal) {
        goal_emb = goal_state_enc_.forward(params, goal.goal_features);
    } else {
        if (goal.instruction_id >= n_instructions_) {
            throw std::out_of_range("encode_context: instruction id out of vocabulary");
        }
        goal_emb = instr_emb_.forward(params, goal.instruction_id);
    }
    Vec fused(2 * cfg_.ctx_dim);
    std::copy(state_emb.begin(), state_emb.end(), fused.begin());
    std::copy(goal_emb.begin(), goal_emb.end(), fused.begin() + cfg_.ctx_dim);
    return fuse_.forward(params, fused);
}

SpilPolicy::SkillSlots SpilPolicy::select_skills(const ParameterSet& params,
                                                 std::span<const double> context,
                                                 std::size_t k) const {
    if (k == 0) throw std::invalid_argument("select_skills: k must be at least 1");
    if (k > slot_emb_.rows()) throw std::invalid_argument("select_skills: k exceeds slot table");
    std::vector<Vec> inputs(k, Vec(context.begin(), context.end()));
    for (std::size_t s = 0; s < k; ++s) {
        Vec e = slot_emb_.forward(params, s);
        for (std::size_t i = 0; i < e.size(); ++i) inputs[s][i] += e[i];
    }
    std::vector<Vec> sel_out = sel_rnn_.forward(params, inputs);
    std::vector<Vec> bsel_out = bsel_rnn_.forward(params, inputs);

    SkillSlots slots;
    slots.gaussians.reserve(k);
    slots.base_skills.reserve(k);
    for (std::size_t s = 0; s < k; ++s) {
        slots.gaussians.push_back(gaussian_from_head(sel_head_.forward(params, sel_out[s])));
        Vec logits = bsel_head_.forward(params, bsel_out[s]);
        auto lq = log_softmax3(logits);
        Categorical3 c;
        for (std::size_t y = 0; y < 3; ++y) c.probs[y] = std::exp(lq[y]);
        slots.base_skills.push_back(c);
    }
    return slots;
}

SpilPolicy::LossTerms SpilPolicy::spil_loss(const ParameterSet& params,
                                            std::span<const double> window,
                                            std::span<const double> context,
                                            RandomStream& rng) const {
    Vec eps(cfg_.k_slots * cfg_.n_z);
    for (double& e : eps) e = rng.normal();
    return loss_impl(params, window, {}, nullptr, context, eps, 1.0, nullptr);
}

SpilPolicy::LossTerms SpilPolicy::loss_with_grad(const ParameterSet& params,
                                                 std::span<const double> window,
                                                 std::span<const double> state_feats,
                                                 const GoalSpec& goal, std::span<const double> eps,
                                                 double scale, ParameterSet* grads) const {
    return loss_impl(params, window, state_feats, &goal, {}, eps, scale, grads);
}

SpilPolicy::LossTerms SpilPolicy::loss_impl(const ParameterSet& params,
                                            std::span<const double> window,
                                            std::span<const double> state_feats,
                                            const GoalSpec* goal, std::span<const double> context,
                                            std::span<const double> eps, double scale,
                                            ParameterSet* grads) const {
    const std::size_t K = cfg_.k_slots;
    const std::size_t nz = cfg_.n_z;
    const std::size_t seq_len = cfg_.n_h * kActionDim;
    if (window.size() != K * seq_len) {
        throw std::invalid_argument("spil_loss: window length is not k_slots * n_h actions");
    }
    if (eps.size() != K * nz) throw std::invalid_argument("spil_loss: noise length mismatch");

    const bool want_cache = grads != nullptr;

    // Context (optionally through the encoder so its gradient flows).
    Mlp::Cache state_cache, fuse_cache, goal_cache;
    Vec fused_in;
    Vec c;
    if (goal) {
        Vec state_emb = state_enc_.forward(params, state_feats, want_cache ? &state_cache : nullptr);
        Vec goal_emb;
        if (goal->kind == GoalSpec::Kind::state_goal) {
            goal_emb = goal_state_enc_.forward(params, goal->goal_features,
                                               want_cache ? &goal_cache : nullptr);
        } else {
            if (goal->instruction_id >= n_instructions_) {
                throw std::out_of_range("spil_loss: instruction id out of vocabulary");
            }
            goal_emb = instr_emb_.forward(params, goal->instruction_id);
        }
        fused_in.resize(2 * cfg_.ctx_dim);
        std::copy(state_emb.begin(), state_emb.end(), fused_in.begin());
        std::copy(goal_emb.begin(), goal_emb.end(), fused_in.begin() + cfg_.ctx_dim);
        c = fuse_.forward(params, fused_in, want_cache ? &fuse_cache : nullptr);
    } else {
        c.assign(context.begin(), context.end());
    }

    // Slot inputs.
    std::vector<Vec> inputs(K, c);
    for (std::size_t s = 0; s < K; ++s) {
        Vec e = slot_emb_.forward(params, s);
        for (std::size_t i = 0; i < e.size(); ++i) inputs[s][i] += e[i];
    }

    BiRnn::Cache sel_cache, bsel_cache;
    std::vector<Vec> sel_out = sel_rnn_.forward(params, inputs, want_cache ? &sel_cache : nullptr);
    std::vector<Vec> bsel_out = bsel_rnn_.forward(params, inputs, want_cache ? &bsel_cache : nullptr);

    std::vector<Mlp::Cache> sel_head_caches(K), bsel_head_caches(K), dec_caches(K);
    std::vector<Vec> sel_raws(K), logits(K), recon(K), dec_raws(K);
    std::vector<DiagonalGaussian> slot_gaussians(K);
    std::vector<std::array<double, 3>> log_q(K);

    for (std::size_t s = 0; s < K; ++s) {
        sel_raws[s] = sel_head_.forward(params, sel_out[s], want_cache ? &sel_head_caches[s] : nullptr);
        slot_gaussians[s] = gaussian_from_head(sel_raws[s]);
        logits[s] =
            bsel_head_.forward(params, bsel_out[s], want_cache ? &bsel_head_caches[s] : nullptr);
        log_q[s] = log_softmax3(logits[s]);

        Vec z = sample_gaussian_with_noise(slot_gaussians[s], eps.subspan(s * nz, nz));
        dec_raws[s] = decoder_.forward(params, z, want_cache ? &dec_caches[s] : nullptr);
        recon[s] = dec_raws[s];
        for (std::size_t i = kActionDim - 1; i < recon[s].size(); i += kActionDim) {
            recon[s][i] = std::tanh(recon[s][i]);
        }
    }

    BaseSkillPriors pri = priors(params);
    const std::array<double, 3> p_y = cfg_.prior_y();

    LossTerms terms;
    Vec full_recon(K * seq_len);
    for (std::size_t s = 0; s < K; ++s) {
        std::copy(recon[s].begin(), recon[s].end(), full_recon.begin() + s * seq_len);
    }
    terms.reconstruction = huber(full_recon, window, cfg_.huber_delta);

    std::vector<std::array<double, 3>> slot_kls(K);
    for (std::size_t s = 0; s < K; ++s) {
        Categorical3 q;
        for (std::size_t y = 0; y < 3; ++y) q.probs[y] = std::exp(log_q[s][y]);
        double weighted = 0.0;
        for (std::size_t y = 0; y < 3; ++y) {
            slot_kls[s][y] = kl_gaussian(slot_gaussians[s], pri.priors[y]);
            weighted += q.probs[y] * slot_kls[s][y];
        }
        terms.skill += weighted / static_cast<double>(K);
        double cat = 0.0;
        for (std::size_t y = 0; y < 3; ++y) {
            if (q.probs[y] > 0.0) cat += q.probs[y] * (log_q[s][y] - std::log(p_y[y]));
        }
        terms.categorical += cat / static_cast<double>(K);
    }
    terms.total = terms.reconstruction + cfg_.gamma1 * terms.skill + cfg_.gamma2 * terms.categorical;

    if (!grads) return terms;

    // --- Backward ---
    const double inv_n = 1.0 / static_cast<double>(window.size());
    std::vector<Vec> d_sel_out(K), d_bsel_out(K);
    for (std::size_t s = 0; s < K; ++s) {
        // Reconstruction through the frozen generator: input gradient only.
        Vec d_dec_raw(seq_len);
        for (std::size_t i = 0; i < seq_len; ++i) {
            double r = recon[s][i] - window[s * seq_len + i];
            double d = scale * huber_derivative(r, cfg_.huber_delta) * inv_n;
            if ((i % kActionDim) == kActionDim - 1) d *= 1.0 - recon[s][i] * recon[s][i];
            d_dec_raw[i] = d;
        }
        Vec d_z = decoder_.backward(params, dec_caches[s], d_dec_raw, nullptr);

        Vec d_mean(nz, 0.0), d_logvar(nz, 0.0);
        for (std::size_t i = 0; i < nz; ++i) {
            d_mean[i] = d_z[i];
            d_logvar[i] =
                d_z[i] * eps[s * nz + i] * 0.5 * std::exp(0.5 * slot_gaussians[s].log_variance[i]);
        }

        std::array<double, 3> q;
        for (std::size_t y = 0; y < 3; ++y) q[y] = std::exp(log_q[s][y]);

        // Base-skill regularizer: into the slot Gaussian (priors frozen) and
        // into the selector logits through the q weights.
        double weighted = 0.0;
        for (std::size_t y = 0; y < 3; ++y) weighted += q[y] * slot_kls[s][y];
        for (std::size_t y = 0; y < 3; ++y) {
            double w = scale * cfg_.gamma1 * q[y] / static_cast<double>(K);
            if (w != 0.0) {
                kl_gaussian_backward_q(slot_gaussians[s], pri.priors[y], w, d_mean, d_logvar);
            }
        }
        Vec d_logits(3, 0.0);
        for (std::size_t y = 0; y < 3; ++y) {
            d_logits[y] += scale * cfg_.gamma1 / static_cast<double>(K) * q[y] *
                           (slot_kls[s][y] - weighted);
        }

        // Categorical regularizer.
        double cat = 0.0;
        std::array<double, 3> s_y{};
        for (std::size_t y = 0; y < 3; ++y) {
            s_y[y] = log_q[s][y] - std::log(p_y[y]);
            cat += q[y] * s_y[y];
        }
        for (std::size_t y = 0; y < 3; ++y) {
            d_logits[y] += scale * cfg_.gamma2 / static_cast<double>(K) * q[y] * (s_y[y] - cat);
        }

        Vec d_sel_raw = gaussian_head_backward(sel_raws[s], d_mean, d_logvar);
        d_sel_out[s] = sel_head_.backward(params, sel_head_caches[s], d_sel_raw, grads);
        d_bsel_out[s] = bsel_head_.backward(params, bsel_head_caches[s], d_logits, grads);
    }

    std::vector<Vec> d_in_sel = sel_rnn_.backward(params, sel_cache, d_sel_out, grads);
    std::vector<Vec> d_in_bsel = bsel_rnn_.backward(params, bsel_cache, d_bsel_out, grads);

    Vec d_c(cfg_.ctx_dim, 0.0);
    for (std::size_t s = 0; s < K; ++s) {
        Vec d_slot(cfg_.ctx_dim);
        for (std::size_t i = 0; i < cfg_.ctx_dim; ++i) {
            d_slot[i] = d_in_sel[s][i] + d_in_bsel[s][i];
            d_c[i] += d_slot[i];
        }
        slot_emb_.backward(s, d_slot, grads);
    }

    if (goal) {
        Vec d_fused = fuse_.backward(params, fuse_cache, d_c, grads);
        std::span<const double> d_state_emb(d_fused.data(), cfg_.ctx_dim);
        std::span<const double> d_goal_emb(d_fused.data() + cfg_.ctx_dim, cfg_.ctx_dim);
        state_enc_.backward(params, state_cache, d_state_emb, grads);
        if (goal->kind == GoalSpec::Kind::state_goal) {
            goal_state_enc_.backward(params, goal_cache, d_goal_emb, grads);
        } else {
            instr_emb_.backward(goal->instruction_id, d_goal_emb, grads);
        }
    }
    return terms;
}

SpilPolicy::PolicyAction SpilPolicy::act(const ParameterSet& params,
                                         std::span<const double> state_feats, const GoalSpec& goal,
                                         ActMode mode, RandomStream* rng) const {
    Vec c = encode_context(params, state_feats, goal);
    SkillSlots slots = select_skills(params, c, 1);
    PolicyAction out;
    if (mode == ActMode::sample) {
        if (!rng) throw std::invalid_argument("act: sample mode needs a random stream");
        out.embedding = sample_gaussian(slots.gaussians[0], *rng);
    } else {
        out.embedding = slots.gaussians[0].mean;
    }
    Vec flat = decoder_.forward(params, out.embedding);
    for (std::size_t i = kActionDim - 1; i < flat.size(); i += kActionDim) {
        flat[i] = std::tanh(flat[i]);
    }
    out.sequence = ActionSequence::unflatten(flat);
    out.base_skill = slots.base_skills[0];
    return out;
}

BaseSkillPriors SpilPolicy::priors(const ParameterSet& params) const {
    BaseSkillPriors out;
    Vec input;
    for (std::size_t k = 0; k < 3; ++k) {
        one_hot3(k, input);
        out.priors[k] = gaussian_from_head(locator_.forward(params, input));
    }
    return out;
}

void validate_stage1_checkpoint(const std::vector<std::pair<std::string, std::string>>& fields,
                                const SpilConfig& cfg) {
    if (checkpoint_field(fields, "stage") != "skill_vae") {
        throw std::invalid_argument("checkpoint stage mismatch: expected skill_vae, got " +
                                    checkpoint_field(fields, "stage"));
    }
    if (checkpoint_field(fields, "n_z") != std::to_string(cfg.n_z) ||
        checkpoint_field(fields, "n_h") != std::to_string(cfg.n_h)) {
        throw std::invalid_argument("stage-1 checkpoint latent geometry incompatible with config");
    }
}

SpilTrainResult train_spil(const Datasets& data, const ParameterSet& stage1_params,
                           const SpilConfig& cfg, RandomStream& rng) {
    cfg.validate();
    if (data.play.empty()) throw std::invalid_argument("train_spil: empty play dataset");
    if (data.lang.empty()) throw std::invalid_argument("train_spil: empty language dataset");
    if (data.k_slots != cfg.k_slots || data.n_h != cfg.n_h) {
        throw std::invalid_argument("train_spil: dataset window geometry mismatch");
    }

    SpilPolicy policy(cfg, kStateDim, kNumTasks);
    RandomStream init_rng = rng.derive(0);
    RandomStream train_rng = rng.derive(1);
    RandomStream shuffle_rng = rng.derive(2);

    SpilTrainResult result{policy.init_params(stage1_params, init_rng), {}};
    auto prefixes = SpilPolicy::trainable_prefixes();
    Adam opt(result.params, names_with_prefixes(result.params, prefixes),
             AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});

    // The language stream is ~1% the size of the play stream; cycle it in a
    // fixed shuffled order.
    std::vector<std::size_t> lang_order(data.lang.size());
    std::iota(lang_order.begin(), lang_order.end(), 0);
    for (std::size_t i = lang_order.size(); i > 1; --i) {
        std::swap(lang_order[i - 1], lang_order[shuffle_rng.uniform_int(i)]);
    }
    std::size_t lang_cursor = 0;

    ParameterSet grads = result.params.zeros_like();
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
    Vec eps(cfg.k_slots * cfg.n_z);
    result.log.reserve(cfg.spil_steps);

    for (std::size_t step = 0; step < cfg.spil_steps; ++step) {
        grads.fill(0.0);
        SpilTrainLogEntry entry{0, 0, 0, 0};
        for (int stream = 0; stream < 2; ++stream) {
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                Vec window;
                const Vec* start_feats = nullptr;
                GoalSpec goal;
                if (stream == 0) {
                    const PlayWindowRef& ref = data.play[train_rng.uniform_int(data.play.size())];
                    window = assemble_window(data, ref);
                    start_feats = &window_start_features(data, ref.episode, ref.start);
                    goal = GoalSpec::state(window_goal_features(data, ref));
                } else {
                    const LangWindowRef& ref = data.lang[lang_order[lang_cursor]];
                    lang_cursor = (lang_cursor + 1) % lang_order.size();
                    window = assemble_window(data, ref);
                    start_feats = &window_start_features(data, ref.episode, ref.start);
                    goal = GoalSpec::instruction(InstructionVocab::index_of(ref.task));
                }
                for (double& e : eps) e = train_rng.normal();
                auto terms =
                    policy.loss_with_grad(result.params, window, *start_feats, goal, eps, inv_batch,
                                          &grads);
                entry.total += terms.total * inv_batch;
                entry.reconstruction += terms.reconstruction * inv_batch;
                entry.skill += terms.skill * inv_batch;
                entry.categorical += terms.categorical * inv_batch;
            }
        }
        if (!std::isfinite(entry.total)) {
            throw std::runtime_error("train_spil: non-finite loss at step " + std::to_string(step));
        }
        opt.step(result.params, grads);
        result.log.push_back(entry);
    }
    return result;
}

}  // namespace spil
