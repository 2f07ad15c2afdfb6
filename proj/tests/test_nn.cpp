#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "spil/nn.hpp"

using namespace spil;

TEST_CASE("dense forward matches an independent matrix-multiply oracle") {
    Mlp net("f", {3, 4, 2}, Activation::tanh, Activation::identity);
    ParameterSet ps;
    RandomStream rng(1, 0);
    net.init(ps, rng);

    Vec x{0.3, -0.7, 1.1};
    Vec y = net.forward(ps, x);

    // Oracle: explicit loops over the same tensors.
    const auto& w0 = ps.at("f.W0");
    const auto& b0 = ps.at("f.b0");
    const auto& w1 = ps.at("f.W1");
    const auto& b1 = ps.at("f.b1");
    Vec h(4);
    for (int i = 0; i < 4; ++i) {
        double acc = b0.data[i];
        for (int j = 0; j < 3; ++j) acc += w0.data[i * 3 + j] * x[j];
        h[i] = std::tanh(acc);
    }
    for (int i = 0; i < 2; ++i) {
        double acc = b1.data[i];
        for (int j = 0; j < 4; ++j) acc += w1.data[i * 4 + j] * h[j];
        CHECK(y[i] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("dense degenerate cases") {
    Mlp id("f", {3, 3}, Activation::identity, Activation::identity);
    ParameterSet ps;
    ps.add("f.W0", {3, 3});
    ps.add("f.b0", {3});
    for (int i = 0; i < 3; ++i) ps.at("f.W0").data[i * 3 + i] = 1.0;  // identity weights
    Vec x{1.0, -2.0, 0.5};
    CHECK(id.forward(ps, x) == x);

    ps.at("f.W0").data.assign(9, 0.0);
    ps.at("f.b0").data = {4.0, 5.0, 6.0};
    CHECK(id.forward(ps, x) == Vec{4.0, 5.0, 6.0});

    CHECK_THROWS_AS(id.forward(ps, Vec{1.0}), std::invalid_argument);
}

namespace {

// Scalar-by-scalar GRU oracle: same parameter layout, explicit recurrences.
std::vector<Vec> gru_oracle(const ParameterSet& ps, const std::string& sub,
                            const std::vector<Vec>& inputs, std::size_t in_dim, std::size_t h_dim,
                            bool reverse) {
    const auto& W = ps.at(sub + ".W").data;
    const auto& U = ps.at(sub + ".U").data;
    const auto& b = ps.at(sub + ".b").data;
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<Vec> hs(inputs.size(), Vec(h_dim, 0.0));
    Vec h(h_dim, 0.0);
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        std::size_t t = reverse ? inputs.size() - 1 - s : s;
        Vec nh(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) {
            auto dot = [&](std::size_t row) {
                double acc = 0.0;
                for (std::size_t j = 0; j < in_dim; ++j) acc += W[row * in_dim + j] * inputs[t][j];
                return acc;
            };
            auto udot = [&](std::size_t row) {
                double acc = 0.0;
                for (std::size_t j = 0; j < h_dim; ++j) acc += U[row * h_dim + j] * h[j];
                return acc;
            };
            double r = sig(dot(i) + udot(i) + b[i]);
            double z = sig(dot(h_dim + i) + udot(h_dim + i) + b[h_dim + i]);
            double n = std::tanh(dot(2 * h_dim + i) + r * udot(2 * h_dim + i) + b[2 * h_dim + i]);
            nh[i] = (1.0 - z) * n + z * h[i];
        }
        h = nh;
        hs[t] = h;
    }
    return hs;
}

}  // namespace

TEST_CASE("birnn forward equals the unrolled oracle (gru)") {
    BiRnn rnn("r", 3, 2, RnnCell::gru);
    ParameterSet ps;
    RandomStream rng(2, 0);
    rnn.init(ps, rng);

    std::vector<Vec> seq{{0.1, -0.2, 0.3}, {1.0, 0.5, -0.5}, {-0.3, 0.7, 0.2}};
    auto out = rnn.forward(ps, seq);
    auto fw = gru_oracle(ps, "r.fw", seq, 3, 2, false);
    auto bw = gru_oracle(ps, "r.bw", seq, 3, 2, true);
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(out[t][i] == doctest::Approx(fw[t][i]).epsilon(1e-10));
            CHECK(out[t][2 + i] == doctest::Approx(bw[t][i]).epsilon(1e-10));
        }
    }

    auto single = rnn.forward(ps, {seq[0]});
    CHECK(single.size() == 1);
    auto single2 = rnn.forward(ps, {seq[0]});
    CHECK(single[0] == single2[0]);

    CHECK_THROWS_AS(rnn.forward(ps, {}), std::invalid_argument);
}

TEST_CASE("birnn zero parameters give a constant fixed point per step") {
    BiRnn rnn("r", 2, 3, RnnCell::gru);
    ParameterSet ps;
    RandomStream rng(3, 0);
    rnn.init(ps, rng);
    for (const char* n : {"r.fw.W", "r.fw.U", "r.fw.b", "r.bw.W", "r.bw.U", "r.bw.b"}) {
        ps.at(n).data.assign(ps.at(n).size(), 0.0);
    }
    std::vector<Vec> seq(4, Vec{0.0, 0.0});
    auto out = rnn.forward(ps, seq);
    for (std::size_t t = 0; t < 4; ++t) CHECK(out[t] == out[0]);
}

namespace {

double rnn_loss(const BiRnn& rnn, const ParameterSet& ps, const std::vector<Vec>& seq) {
    auto out = rnn.forward(ps, seq);
    double loss = 0.0;
    for (const Vec& o : out)
        for (double v : o) loss += 0.5 * v * v;
    return loss;
}

}  // namespace

TEST_CASE("birnn gradients pass finite differences (both cells)") {
    for (RnnCell cell : {RnnCell::gru, RnnCell::lstm}) {
        CAPTURE(to_string(cell));
        BiRnn rnn("r", 3, 4, cell);
        ParameterSet ps;
        RandomStream rng(4, static_cast<std::uint64_t>(cell));
        rnn.init(ps, rng);
        std::vector<Vec> seq;
        for (int t = 0; t < 5; ++t) {
            Vec x(3);
            for (double& v : x) v = rng.uniform(-1, 1);
            seq.push_back(x);
        }
        BiRnn::Cache cache;
        auto out = rnn.forward(ps, seq, &cache);
        ParameterSet grads = ps.zeros_like();
        std::vector<Vec> d_out = out;  // dL/dout = out for the quadratic loss
        rnn.backward(ps, cache, d_out, &grads);

        RandomStream pick(5, 0);
        double err = gradient_check([&](const ParameterSet& p) { return rnn_loss(rnn, p, seq); },
                                    ps, grads, pick, {}, 200);
        CHECK(err < 1e-5);  // roundoff-limited; the acceptance bound is 1e-4
    }
}

TEST_CASE("birnn input gradients are exact") {
    BiRnn rnn("r", 3, 4, RnnCell::gru);
    ParameterSet ps;
    RandomStream rng(6, 0);
    rnn.init(ps, rng);
    std::vector<Vec> seq;
    for (int t = 0; t < 3; ++t) {
        Vec x(3);
        for (double& v : x) v = rng.uniform(-1, 1);
        seq.push_back(x);
    }
    BiRnn::Cache cache;
    auto out = rnn.forward(ps, seq, &cache);
    auto d_in = rnn.backward(ps, cache, out, nullptr);

    double h = 1e-6;
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
            auto seq_p = seq;
            seq_p[t][j] += h;
            auto seq_m = seq;
            seq_m[t][j] -= h;
            double fd = (rnn_loss(rnn, ps, seq_p) - rnn_loss(rnn, ps, seq_m)) / (2 * h);
            CHECK(d_in[t][j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("adam null update leaves fresh parameters unchanged") {
    ParameterSet ps;
    ps.add("p", {1});
    ps.at("p").data[0] = 1.0;
    Adam opt(ps, {"p"}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    ParameterSet g = ps.zeros_like();
    opt.step(ps, g);
    CHECK(ps.at("p").data[0] == 1.0);
    CHECK(opt.step_count() == 1);
}

TEST_CASE("adam matches the hand-stepped first update") {
    ParameterSet ps;
    ps.add("p", {1});
    ps.at("p").data[0] = 1.0;
    Adam opt(ps, {"p"}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    ParameterSet g = ps.zeros_like();
    g.at("p").data[0] = 1.0;
    opt.step(ps, g);
    // Bias-corrected first step: mhat = g, vhat = g^2 -> update ~= lr.
    CHECK(ps.at("p").data[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam is deterministic over 100 steps") {
    auto run = [] {
        ParameterSet ps;
        ps.add("w", {8});
        RandomStream rng(7, 0);
        for (double& v : ps.at("w").data) v = rng.uniform(-1, 1);
        Adam opt(ps, {"w"}, AdamConfig{1e-2, 0.9, 0.999, 1e-8});
        ParameterSet g = ps.zeros_like();
        for (int s = 0; s < 100; ++s) {
            for (std::size_t i = 0; i < 8; ++i) g.at("w").data[i] = ps.at("w").data[i];
            opt.step(ps, g);
        }
        return ps.at("w").data;
    };
    CHECK(run() == run());
}

TEST_CASE("gradient_check on an exact quadratic") {
    ParameterSet ps;
    ps.add("p", {10});
    RandomStream rng(8, 0);
    for (double& v : ps.at("p").data) {
        v = rng.uniform(0.25, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    ParameterSet grads = ps.zeros_like();
    grads.at("p").data = ps.at("p").data;
    RandomStream pick(9, 0);
    double err = gradient_check(
        [](const ParameterSet& p) {
            double l = 0.0;
            for (double v : p.at("p").data) l += 0.5 * v * v;
            return l;
        },
        ps, grads, pick);
    CHECK(err < 1e-8);
}

TEST_CASE("checkpoint round trip is bit exact") {
    ParameterSet ps;
    RandomStream rng(10, 0);
    Mlp net("m", {5, 7, 3}, Activation::tanh, Activation::identity);
    net.init(ps, rng);
    ps.at("m.b0").data[2] = 0.1 + 0.2;  // a value with a non-terminating binary fraction

    auto dir = std::filesystem::temp_directory_path() / "spil_test_ckpt";
    save_checkpoint(dir, ps, {{"stage", "skill_vae"}, {"seed", "10"}, {"config_hash", "feed"}});

    std::vector<std::pair<std::string, std::string>> fields;
    ParameterSet back = load_checkpoint(dir, &fields);
    CHECK(checkpoint_field(fields, "stage") == "skill_vae");
    CHECK(checkpoint_field(fields, "seed") == "10");
    CHECK(back.names() == ps.names());
    for (const std::string& n : ps.names()) {
        CHECK(back.at(n).shape == ps.at(n).shape);
        CHECK(back.at(n).data == ps.at(n).data);
    }
}

TEST_CASE("gaussian head bounds the log variance smoothly") {
    Vec raw{0.5, -0.3, 100.0, -100.0};
    DiagonalGaussian g = gaussian_from_head(raw);
    CHECK(g.mean == Vec{0.5, -0.3});
    CHECK(g.log_variance[0] <= kLogVarBound);
    CHECK(g.log_variance[0] == doctest::Approx(kLogVarBound).epsilon(1e-4));
    CHECK(g.log_variance[1] == doctest::Approx(-kLogVarBound).epsilon(1e-4));
}
