#include "support.hpp"

#include "peakrl/core/error.hpp"
#include "peakrl/core/mdp.hpp"
#include "peakrl/core/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace peakrl;
using peakrl::testing::make_instance;
using peakrl::testing::Rows;

TEST_CASE("sample_transition follows deterministic rows") {
    auto inst = make_instance({{{1.0, 0.0}, {0.0, 1.0}}, {{0.5, 0.5}, {0.5, 0.5}}},
                              {{1, 1}, {1, 1}}, {}, 0.9);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        CHECK(sample_transition(inst, 0, 0, rng) == 0);
        CHECK(sample_transition(inst, 0, 1, rng) == 1);
    }
}

TEST_CASE("sample_transition frequency of a fair row lies in the binomial band") {
    auto inst = make_instance({{{0.5, 0.5}}, {{0.5, 0.5}}}, {{1}, {1}}, {}, 0.9);
    Rng rng(20240611);
    const int n = 100000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += sample_transition(inst, 0, 0, rng) == 0;
    const double freq = static_cast<double>(zeros) / n;
    // 99.99% normal band for Binomial(1e5, 0.5) is about +-0.0062.
    CHECK(std::abs(freq - 0.5) < 3.9 * std::sqrt(0.25 / n));
    CHECK(freq >= 0.49);
    CHECK(freq <= 0.51);
}

TEST_CASE("sample_transition is reproducible for a fixed seed") {
    auto inst = make_instance({{{0.2, 0.3, 0.5}}, {{0.6, 0.2, 0.2}}, {{0.1, 0.1, 0.8}}},
                              {{1}, {1}, {1}}, {}, 0.9);
    Rng a(99), b(99);
    for (int i = 0; i < 500; ++i) {
        StateId s = static_cast<StateId>(i % 3);
        CHECK(sample_transition(inst, s, 0, a) == sample_transition(inst, s, 0, b));
    }
}

TEST_CASE("sample_transition rejects out-of-range indices") {
    auto inst = make_instance({{{1.0}}}, {{1}}, {}, 0.9);
    Rng rng(1);
    CHECK_THROWS_AS(sample_transition(inst, 1, 0, rng), IndexError);
    CHECK_THROWS_AS(sample_transition(inst, 0, 1, rng), IndexError);
}

TEST_CASE("instance validation names the offending pair") {
    try {
        make_instance({{{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.4}, {0.5, 0.5}}}, {{1, 1}, {1, 1}}, {}, 0.9);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("(s=1, a=0)") != std::string::npos);
    }
    CHECK_THROWS_AS(make_instance({{{1.0}}}, {{2.0}}, {}, 0.9, 1.0), ValidationError);
    CHECK_THROWS_AS(make_instance({{{1.0}}}, {{1.0}}, {{{-1.5}}}, 0.9, 1.0), ValidationError);
    CHECK_THROWS_AS(make_instance({{{1.0}}}, {{1.0}}, {}, 1.0), ValidationError);
    CHECK_THROWS_AS(make_instance({{{1.1, -0.1}}, {{0.5, 0.5}}}, {{1}, {1}}, {}, 0.5), ValidationError);
}

TEST_CASE("kernel tolerance admits 15-digit inputs") {
    const double third = 0.333333333333333;
    CHECK_NOTHROW(make_instance({{{third, third, third}}, {{third, third, third}}, {{third, third, third}}},
                                {{1}, {1}, {1}}, {}, 0.9));
    CHECK_THROWS_AS(make_instance({{{0.5, 0.5 - 2e-9}}, {{0.5, 0.5}}}, {{1}, {1}}, {}, 0.9),
                    ValidationError);
}

TEST_CASE("shift_reward") {
    SUBCASE("r = -1, c = 1, eps = 0.1") {
        auto shifted = shift_reward(make_instance({{{1.0}}}, {{-1.0}}, {}, 0.9), 0.1);
        CHECK(shifted.reward(0, 0) == doctest::Approx(0.1));
        CHECK(shifted.bound_c() == doctest::Approx(2.1));
        CHECK(shifted.reward_shift() == doctest::Approx(1.1));
    }
    SUBCASE("r = 0, c = 1, eps = 0.5") {
        auto shifted = shift_reward(make_instance({{{1.0}}}, {{0.0}}, {}, 0.9), 0.5);
        CHECK(shifted.reward(0, 0) == doctest::Approx(1.5));
    }
    SUBCASE("nonpositive epsilon") {
        auto inst = make_instance({{{1.0}}}, {{0.0}}, {}, 0.9);
        CHECK_THROWS_AS(shift_reward(inst, 0.0), ArgumentError);
        CHECK_THROWS_AS(shift_reward(inst, -1.0), ArgumentError);
    }
    SUBCASE("constraints untouched and ensure_positive_reward is idempotent on positive rewards") {
        auto inst = make_instance({{{1.0}}}, {{-0.5}}, {{{0.3}}}, 0.9);
        auto shifted = shift_reward(inst, 0.1);
        CHECK(shifted.constraint(0, 0, 0) == 0.3);
        CHECK(default_shift_epsilon(inst) == doctest::Approx(0.1));
        auto positive = make_instance({{{1.0}}}, {{0.5}}, {}, 0.9);
        CHECK(ensure_positive_reward(positive).reward(0, 0) == 0.5);
        CHECK(ensure_positive_reward(inst).reward(0, 0) > 0.0);
    }
}

TEST_CASE("check_unichain") {
    CHECK(check_unichain(make_instance({{{0.5, 0.5}}, {{0.5, 0.5}}}, {{1}, {1}}, {}, 0.9)).passed);

    auto split = check_unichain(make_instance({{{1.0, 0.0}}, {{0.0, 1.0}}}, {{1}, {1}}, {}, 0.9));
    CHECK_FALSE(split.passed);
    REQUIRE(split.violating_policy.has_value());
    CHECK(split.violating_policy->size() == 2);

    // Independent check: every 3-state 2-action kernel with entries >= 0.05 is a complete graph.
    Rng rng(5);
    std::vector<Rows> kernel(3, Rows(2, std::vector<double>(3)));
    for (auto& per_state : kernel)
        for (auto& row : per_state) {
            double sum = 0.0;
            for (auto& p : row) sum += (p = 0.05 + rng.uniform());
            for (auto& p : row) p /= sum;
        }
    auto report = check_unichain(make_instance(kernel, {{1, 1}, {1, 1}, {1, 1}}, {}, 0.9));
    CHECK(report.passed);
    CHECK(report.policies_checked == 8);
}

TEST_CASE("check_unichain requires every state to reach every other") {
    // State 2 is transient under every policy.
    auto transient = make_instance({{{0.0, 1.0, 0.0}}, {{1.0, 0.0, 0.0}}, {{1.0, 0.0, 0.0}}},
                                   {{1}, {1}, {1}}, {}, 0.9);
    CHECK_FALSE(check_unichain(transient).passed);
    // Action 1 in state 0 makes 0 absorbing while 1 stays absorbing.
    auto two = make_instance({{{0.0, 1.0}, {1.0, 0.0}}, {{0.0, 1.0}, {0.0, 1.0}}}, {{1, 1}, {1, 1}}, {}, 0.9);
    CHECK_FALSE(check_unichain(two).passed);
}

TEST_CASE("check_recurrent_state") {
    auto full = make_instance({{{0.5, 0.5}, {0.3, 0.7}}, {{0.5, 0.5}, {0.9, 0.1}}}, {{1, 1}, {1, 1}}, {}, 0.9);
    CHECK(check_recurrent_state(full, 0).passed);
    CHECK(check_recurrent_state(full, 1).passed);

    auto absorbing = make_instance({{{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.5}, {0.0, 1.0}}}, {{1, 1}, {1, 1}}, {}, 0.9);
    auto report = check_recurrent_state(absorbing, 0);
    CHECK_FALSE(report.passed);
    REQUIRE(report.violating_policy.has_value());
    CHECK((*report.violating_policy)[1] == 1);

    Rows uniform(3, std::vector<double>(3, 1.0 / 3.0));
    CHECK(check_recurrent_state(make_instance({uniform, uniform, uniform}, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}, {}, 0.9), 2)
              .passed);
    CHECK_THROWS_AS(check_recurrent_state(full, 2), IndexError);
}

TEST_CASE("policy enumeration guard") {
    MdpData d;
    d.n_states = 13;
    d.n_actions = 3;
    d.kernel.assign(13 * 3 * 13, 1.0 / 13.0);
    d.reward.assign(13 * 3, 1.0);
    d.gamma = 0.9;
    auto inst = MdpInstance::create(d);
    CHECK_THROWS_AS(check_unichain(inst), CapabilityError);
}

TEST_CASE("StochasticPolicy and VisitCounter") {
    StateActionTable probs(2, 2);
    probs(0, 0) = 0.4;
    probs(0, 1) = 0.6;
    probs(1, 1) = 1.0;
    StochasticPolicy pi(probs);
    CHECK(pi.support(0).size() == 2);
    CHECK(pi.support(1) == std::vector<ActionId>{1});

    probs(1, 1) = 0.9;
    CHECK_THROWS_AS(StochasticPolicy{probs}, ValidationError);

    VisitCounter counter(2, 3);
    CHECK(counter.record(1, 2) == 1);
    CHECK(counter.record(1, 2) == 2);
    CHECK(counter.record(0, 0) == 1);
    CHECK(counter.total_steps() == 3);
    CHECK(counter.count(1, 2) == 2);
    std::uint64_t sum = 0;
    for (auto c : counter.counts()) sum += c;
    CHECK(sum == counter.total_steps());
}

TEST_CASE("derive_seed gives distinct reproducible streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(derive_seed(42, r));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(42, 7) == derive_seed(42, 7));
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
