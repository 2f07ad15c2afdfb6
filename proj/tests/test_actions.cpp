#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spil/actions.hpp"

using namespace spil;

namespace {

ActionSequence constant_sequence(std::size_t n, const Action& a) {
    ActionSequence s;
    s.actions.assign(n, a);
    return s;
}

ActionSequence random_sequence(RandomStream& rng, std::size_t n) {
    ActionSequence s;
    s.actions.resize(n);
    for (Action& a : s.actions) {
        for (double& v : a.translation) v = rng.uniform(-0.05, 0.05);
        for (double& v : a.rotation) v = rng.uniform(-0.1, 0.1);
        a.gripper = rng.uniform(-1.0, 1.0);
    }
    return s;
}

}  // namespace

TEST_CASE("group_magnitudes sums absolute values per group") {
    auto zero = constant_sequence(5, Action{});
    auto mz = group_magnitudes(zero);
    CHECK(mz[0] == 0.0);
    CHECK(mz[1] == 0.0);
    CHECK(mz[2] == 0.0);

    auto pure = constant_sequence(5, Action{{0.1, 0, 0}, {0, 0, 0}, 0});
    auto mp = group_magnitudes(pure);
    CHECK(mp[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mp[1] == 0.0);
    CHECK(mp[2] == 0.0);

    // Hand summation: per step |0.1|+|0.1| = 0.2 translation, |0.2| rotation, |1| grip.
    auto mixed = constant_sequence(5, Action{{0.1, 0.1, 0}, {0, 0, 0.2}, 1.0});
    auto mm = group_magnitudes(mixed);
    CHECK(mm[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mm[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mm[2] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("label_base_skill implements the weighted magnitude ratio") {
    MagicWeights w;  // 1.4 / 3.0 / 0.75
    auto pure = constant_sequence(5, Action{{0.1, 0, 0}, {0, 0, 0}, 0});
    auto p = label_base_skill(pure, w).probs;
    CHECK(p.probs[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.probs[1] == 0.0);
    CHECK(p.probs[2] == 0.0);

    // Magnitudes (1, 1, 1): hand evaluation of the ratio with the default weights.
    auto ones = constant_sequence(5, Action{{0.2, 0, 0}, {0, 0.2, 0}, 0.2});
    auto q = label_base_skill(ones, w).probs;
    CHECK(q.probs[0] == doctest::Approx(0.2718446601941747).epsilon(1e-9));
    CHECK(q.probs[1] == doctest::Approx(0.5825242718446602).epsilon(1e-9));
    CHECK(q.probs[2] == doctest::Approx(0.1456310679611650).epsilon(1e-9));

    auto zero = constant_sequence(5, Action{});
    auto u = label_base_skill(zero, w).probs;
    CHECK(u.probs[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(u.probs[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(u.probs[2] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("label invariants over random sequences") {
    MagicWeights w;
    RandomStream rng(11, 0);
    for (int i = 0; i < 10000; ++i) {
        ActionSequence x = random_sequence(rng, 5);
        auto p = label_base_skill(x, w).probs;
        CHECK(std::abs(p.probs[0] + p.probs[1] + p.probs[2] - 1.0) <= 1e-12);
        CHECK(p.probs[0] >= 0.0);
        CHECK(p.probs[1] >= 0.0);
        CHECK(p.probs[2] >= 0.0);
    }

    RandomStream rng2(12, 0);
    for (int i = 0; i < 200; ++i) {
        ActionSequence x = random_sequence(rng2, 5);
        auto p = label_base_skill(x, w).probs;
        for (double c : {1e-3, 1e3}) {
            ActionSequence scaled = x;
            for (Action& a : scaled.actions) {
                for (double& v : a.translation) v *= c;
                for (double& v : a.rotation) v *= c;
                a.gripper *= c;
            }
            auto q = label_base_skill(scaled, w).probs;
            for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(q.probs[k] - p.probs[k]) <= 1e-12);
        }
        ActionSequence perm = x;
        std::rotate(perm.actions.begin(), perm.actions.begin() + 2, perm.actions.end());
        auto q = label_base_skill(perm, w).probs;
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(q.probs[k] - p.probs[k]) <= 1e-12);

        // Strictly more gripper magnitude -> strictly higher grasping probability.
        ActionSequence grip = x;
        bool has_grip = false;
        for (Action& a : grip.actions) {
            if (std::abs(a.gripper) > 1e-9) has_grip = true;
            a.gripper *= 3.0;
        }
        if (has_grip) {
            auto g = label_base_skill(grip, w).probs;
            CHECK(g.probs[2] > p.probs[2]);
        }
    }
}

TEST_CASE("augment_sequence zeroes exactly the last three actions") {
    RandomStream rng(13, 0);
    ActionSequence x = random_sequence(rng, 5);

    RandomStream off(14, 0);
    ActionSequence same = augment_sequence(x, off, 0.0);
    CHECK(same.flatten() == x.flatten());

    RandomStream on(15, 0);
    ActionSequence aug = augment_sequence(x, on, 1.0);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(aug.actions[i].translation == x.actions[i].translation);
        CHECK(aug.actions[i].rotation == x.actions[i].rotation);
        CHECK(aug.actions[i].gripper == x.actions[i].gripper);
    }
    for (std::size_t i = 2; i < 5; ++i) {
        CHECK(aug.actions[i].translation == std::array<double, 3>{0, 0, 0});
        CHECK(aug.actions[i].rotation == std::array<double, 3>{0, 0, 0});
        CHECK(aug.actions[i].gripper == 0.0);
    }

    ActionSequence tiny = constant_sequence(2, Action{});
    RandomStream r(16, 0);
    CHECK_THROWS_AS(augment_sequence(tiny, r, 0.5), std::invalid_argument);

    // Frequency oracle at p = 0.5.
    RandomStream freq(17, 0);
    ActionSequence probe = random_sequence(freq, 5);
    int hits = 0;
    for (int i = 0; i < 10000; ++i) {
        ActionSequence out = augment_sequence(probe, freq, 0.5);
        if (out.actions[4].gripper == 0.0 && out.actions[4].translation[2] == 0.0) ++hits;
    }
    CHECK(std::abs(hits / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("flatten round trip") {
    RandomStream rng(18, 0);
    ActionSequence x = random_sequence(rng, 7);
    Vec flat = x.flatten();
    CHECK(flat.size() == 49);
    ActionSequence back = ActionSequence::unflatten(flat);
    CHECK(back.flatten() == flat);
}
