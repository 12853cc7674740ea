#include "peakrl/peakrl.h"

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

namespace {

const char* kRunning = R"({"n_states":1,"n_actions":2,"gamma":0.5,"bound_c":1,
  "kernel":[[[1.0],[1.0]]],"reward":[[1,1]],"constraints":[[[0.2,-0.1]]]})";

} // namespace

TEST_CASE("version and status strings") {
    CHECK(std::string(prl_version()).size() > 0);
    CHECK(std::string(prl_status_string(PRL_OK)) == "ok");
    CHECK(std::string(prl_status_string(static_cast<prl_status>(999))).size() > 0);
}

TEST_CASE("instance lifecycle") {
    prl_instance* inst = nullptr;
    REQUIRE(prl_instance_from_json(kRunning, &inst) == PRL_OK);
    size_t s = 0, a = 0, j = 0;
    REQUIRE(prl_instance_dims(inst, &s, &a, &j) == PRL_OK);
    CHECK(s == 1);
    CHECK(a == 2);
    CHECK(j == 1);

    char* text = nullptr;
    REQUIRE(prl_instance_to_json(inst, &text) == PRL_OK);
    CHECK(std::string(text).find("kernel") != std::string::npos);
    prl_string_free(text);

    prl_instance* shifted = nullptr;
    REQUIRE(prl_instance_shift_reward(inst, 0.5, &shifted) == PRL_OK);
    CHECK(prl_instance_shift_reward(inst, -1.0, &shifted) == PRL_ERR_ARGUMENT);
    prl_instance_free(shifted);
    prl_instance_free(inst);
    prl_instance_free(nullptr);
}

TEST_CASE("errors map to status codes") {
    prl_instance* inst = nullptr;
    CHECK(prl_instance_from_json("{", &inst) == PRL_ERR_PARSE);
    CHECK(std::string(prl_last_error()).size() > 0);
    CHECK(prl_instance_from_json(R"({"n_states":1,"n_actions":1,"bound_c":1,"kernel":[[[0.5]]],"reward":[[1]]})", &inst) ==
          PRL_ERR_VALIDATION);
    CHECK(std::string(prl_last_error()).find("(s=0, a=0)") != std::string::npos);
    CHECK(prl_instance_load_file("/nonexistent/instance.json", &inst) == PRL_ERR_IO);
    CHECK(prl_instance_from_json(nullptr, &inst) == PRL_ERR_ARGUMENT);
}

TEST_CASE("transform through the C API") {
    double bound = 0.0;
    REQUIRE(prl_clip_bound(1.0, 0.9, PRL_MODE_DISCOUNTED, &bound) == PRL_OK);
    CHECK(std::abs(bound - 9.0) < 1e-12);
    REQUIRE(prl_clip_bound(2.5, 0.0, PRL_MODE_AVERAGE, &bound) == PRL_OK);
    CHECK(bound == 2.5);
    CHECK(prl_clip_bound(1.0, 1.5, PRL_MODE_DISCOUNTED, &bound) == PRL_ERR_ARGUMENT);

    const double ok[] = {0.2, 0.1};
    const double bad[] = {0.2, -0.01};
    double out = 0.0;
    REQUIRE(prl_transform_sample(0.5, ok, 2, 9.0, &out) == PRL_OK);
    CHECK(out == 0.5);
    REQUIRE(prl_transform_sample(0.5, bad, 2, 9.0, &out) == PRL_OK);
    CHECK(out == -9.0);
    REQUIRE(prl_transform_sample(0.7, nullptr, 0, 9.0, &out) == PRL_OK);
    CHECK(out == 0.7);
}

TEST_CASE("validate and solve") {
    prl_instance* inst = nullptr;
    REQUIRE(prl_instance_from_json(kRunning, &inst) == PRL_OK);
    char* report = nullptr;
    int passed = 0;
    REQUIRE(prl_validate(inst, &report, &passed) == PRL_OK);
    CHECK(passed == 1);
    prl_string_free(report);

    int verdict = -1;
    REQUIRE(prl_solve(inst, PRL_MODE_AUTO, 0.0, &report, &verdict) == PRL_OK);
    CHECK(verdict == PRL_FEASIBLE);
    CHECK(std::string(report).find("q_star") != std::string::npos);
    prl_string_free(report);
    prl_instance_free(inst);
}

TEST_CASE("learner handle") {
    prl_instance* inst = nullptr;
    REQUIRE(prl_instance_from_json(kRunning, &inst) == PRL_OK);
    prl_learner* learner = nullptr;
    REQUIRE(prl_learner_create(inst, R"({"seed": 4})", &learner) == PRL_OK);
    prl_instance_free(inst);

    uint64_t violations = 0;
    REQUIRE(prl_learner_run(learner, 50000, &violations) == PRL_OK);
    CHECK(violations > 0);
    CHECK(violations < 5000);

    std::vector<double> q(2);
    REQUIRE(prl_learner_q(learner, q.data(), q.size()) == PRL_OK);
    CHECK(std::abs(q[0] - 2.0) < 0.05);
    CHECK(q[0] > q[1]);
    CHECK(prl_learner_q(learner, q.data(), 1) == PRL_ERR_ARGUMENT);

    std::vector<uint64_t> visits(2);
    REQUIRE(prl_learner_visits(learner, visits.data(), visits.size()) == PRL_OK);
    CHECK(visits[0] + visits[1] == 50000);

    size_t bytes = 0;
    REQUIRE(prl_learner_state_size(learner, &bytes) == PRL_OK);
    CHECK(bytes > 0);
    prl_learner_free(learner);

    CHECK(prl_learner_create(nullptr, "{}", &learner) == PRL_ERR_ARGUMENT);
}

TEST_CASE("audit and learn") {
    char* report = nullptr;
    int passed = 0;
    REQUIRE(prl_audit(R"({"count": 5, "seed": 3})", &report, &passed) == PRL_OK);
    CHECK(passed == 1);
    prl_string_free(report);
    CHECK(prl_audit(R"({"count": 0})", &report, &passed) == PRL_ERR_CONFIG);
    CHECK(prl_learn(R"({"replications": 1})", ".", &report) == PRL_ERR_CONFIG);
}
