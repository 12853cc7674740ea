#include "peakrl/peakrl.h"

#include "peakrl/core/experiment.hpp"

#include <cstring>
#include <memory>
#include <new>
#include <string>

struct prl_instance {
    std::shared_ptr<const peakrl::MdpInstance> inst;
};

struct prl_learner {
    std::shared_ptr<const peakrl::MdpInstance> inst;
    peakrl::InstanceEnvironment env;
    peakrl::Learner learner;
    std::vector<double> samples;
};

namespace {

thread_local std::string g_last_error;

prl_status fail(prl_status status, const char* what) {
    g_last_error = what;
    return status;
}

template <class F>
prl_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return PRL_OK;
    } catch (const peakrl::IndexError& e) {
        return fail(PRL_ERR_INDEX, e.what());
    } catch (const peakrl::ArgumentError& e) {
        return fail(PRL_ERR_ARGUMENT, e.what());
    } catch (const peakrl::ValidationError& e) {
        return fail(PRL_ERR_VALIDATION, e.what());
    } catch (const peakrl::CapabilityError& e) {
        return fail(PRL_ERR_CAPABILITY, e.what());
    } catch (const peakrl::NumericError& e) {
        return fail(PRL_ERR_NUMERIC, e.what());
    } catch (const peakrl::InfeasibleError& e) {
        return fail(PRL_ERR_INFEASIBLE, e.what());
    } catch (const peakrl::ConfigError& e) {
        return fail(PRL_ERR_CONFIG, e.what());
    } catch (const peakrl::ParseError& e) {
        return fail(PRL_ERR_PARSE, e.what());
    } catch (const peakrl::IoError& e) {
        return fail(PRL_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PRL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PRL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PRL_ERR_INTERNAL, "unknown exception");
    }
}

void require(const void* p, const char* name) {
    if (!p) throw peakrl::ArgumentError(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

peakrl::Mode to_mode(int mode) {
    if (mode == PRL_MODE_DISCOUNTED) return peakrl::Mode::discounted;
    if (mode == PRL_MODE_AVERAGE) return peakrl::Mode::average;
    throw peakrl::ArgumentError("unknown mode " + std::to_string(mode));
}

prl_instance* wrap(peakrl::MdpInstance inst) {
    return new prl_instance{std::make_shared<const peakrl::MdpInstance>(std::move(inst))};
}

} // namespace

extern "C" {

const char* prl_version(void) { return "1.0.0"; }

const char* prl_status_string(prl_status status) {
    switch (status) {
    case PRL_OK: return "ok";
    case PRL_ERR_INDEX: return "index error";
    case PRL_ERR_ARGUMENT: return "argument error";
    case PRL_ERR_VALIDATION: return "validation error";
    case PRL_ERR_CAPABILITY: return "capability error";
    case PRL_ERR_NUMERIC: return "numeric error";
    case PRL_ERR_INFEASIBLE: return "infeasible";
    case PRL_ERR_CONFIG: return "configuration error";
    case PRL_ERR_PARSE: return "parse error";
    case PRL_ERR_IO: return "i/o error";
    case PRL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* prl_last_error(void) { return g_last_error.c_str(); }

void prl_string_free(char* s) { std::free(s); }

prl_status prl_instance_load_file(const char* path, prl_instance** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = wrap(peakrl::io::load_instance(path));
    });
}

prl_status prl_instance_from_json(const char* json, prl_instance** out) {
    return guarded([&] {
        require(json, "json");
        require(out, "out");
        *out = wrap(peakrl::io::environment_from_json(peakrl::io::parse_json(json)));
    });
}

void prl_instance_free(prl_instance* inst) { delete inst; }

prl_status prl_instance_dims(const prl_instance* inst, size_t* n_states, size_t* n_actions, size_t* n_constraints) {
    return guarded([&] {
        require(inst, "inst");
        if (n_states) *n_states = inst->inst->n_states();
        if (n_actions) *n_actions = inst->inst->n_actions();
        if (n_constraints) *n_constraints = inst->inst->n_constraints();
    });
}

prl_status prl_instance_to_json(const prl_instance* inst, char** out) {
    return guarded([&] {
        require(inst, "inst");
        require(out, "out");
        *out = dup_string(peakrl::io::instance_to_json(*inst->inst).dump());
    });
}

prl_status prl_instance_shift_reward(const prl_instance* inst, double epsilon, prl_instance** out) {
    return guarded([&] {
        require(inst, "inst");
        require(out, "out");
        *out = wrap(peakrl::shift_reward(*inst->inst, epsilon));
    });
}

prl_status prl_clip_bound(double c, double gamma, int mode, double* out) {
    return guarded([&] {
        require(out, "out");
        const auto m = to_mode(mode);
        *out = peakrl::clip_bound(c, m == peakrl::Mode::discounted ? std::optional<double>(gamma) : std::nullopt, m)
                   .value;
    });
}

prl_status prl_transform_sample(double reward, const double* constraint_samples, size_t n_constraints,
                                double clip_bound, double* out) {
    return guarded([&] {
        require(out, "out");
        if (n_constraints > 0) require(constraint_samples, "constraint_samples");
        if (!(clip_bound > 0.0)) throw peakrl::ArgumentError("clip bound must be positive");
        *out = peakrl::transform_sample(reward, {constraint_samples, n_constraints},
                                        peakrl::ClipBound{peakrl::Mode::discounted, clip_bound});
    });
}

prl_status prl_validate(const prl_instance* inst, char** report_json, int* all_passed) {
    return guarded([&] {
        require(inst, "inst");
        require(report_json, "report_json");
        auto result = peakrl::validate_instance(*inst->inst);
        if (all_passed) *all_passed = result.code == peakrl::ExitCode::success;
        *report_json = dup_string(result.report.dump(2));
    });
}

prl_status prl_solve(const prl_instance* inst, int mode, double tol, char** solution_json, int* verdict) {
    return guarded([&] {
        require(inst, "inst");
        require(solution_json, "solution_json");
        peakrl::SolveOptions opts;
        if (mode != PRL_MODE_AUTO) opts.mode = to_mode(mode);
        if (tol > 0.0) opts.tol = tol;
        auto result = peakrl::solve_instance(*inst->inst, opts);
        if (verdict) {
            const auto status = result.report["verdict"]["status"].get<std::string>();
            *verdict = status == "feasible" ? PRL_FEASIBLE : status == "infeasible" ? PRL_INFEASIBLE : PRL_INCONCLUSIVE;
        }
        *solution_json = dup_string(result.report.dump(2));
    });
}

prl_status prl_audit(const char* params_json, char** report_json, int* all_passed) {
    return guarded([&] {
        require(report_json, "report_json");
        const auto params = peakrl::audit_params_from_json(
            params_json ? peakrl::io::parse_json(params_json) : peakrl::io::Json::object());
        auto result = peakrl::audit_battery(params);
        if (all_passed) *all_passed = result.code == peakrl::ExitCode::success;
        *report_json = dup_string(result.report.dump(2));
    });
}

prl_status prl_learn(const char* config_json, const char* base_dir, char** summary_json) {
    return guarded([&] {
        require(config_json, "config_json");
        require(summary_json, "summary_json");
        auto config = peakrl::experiment_config_from_json(peakrl::io::parse_json(config_json, "<config>"),
                                                          base_dir ? base_dir : ".");
        auto result = peakrl::run_experiment(config);
        *summary_json = dup_string(result.report.dump(2));
    });
}

prl_status prl_learner_create(const prl_instance* inst, const char* learner_json, prl_learner** out) {
    return guarded([&] {
        require(inst, "inst");
        require(out, "out");
        const auto cfg = peakrl::io::learner_config_from_json(
            learner_json ? peakrl::io::parse_json(learner_json, "<learner>") : peakrl::io::Json::object());
        const auto& mdp = *inst->inst;
        const double gamma = peakrl::resolve_gamma(cfg, mdp.gamma());
        const auto bound = peakrl::clip_bound(
            mdp.bound_c(), cfg.mode == peakrl::Mode::discounted ? std::optional<double>(gamma) : std::nullopt, cfg.mode);
        *out = new prl_learner{inst->inst, peakrl::InstanceEnvironment(*inst->inst),
                               peakrl::Learner(mdp.n_states(), mdp.n_actions(), bound, gamma, cfg),
                               std::vector<double>(mdp.n_constraints())};
    });
}

void prl_learner_free(prl_learner* learner) { delete learner; }

prl_status prl_learner_run(prl_learner* h, uint64_t steps, uint64_t* violations) {
    return guarded([&] {
        require(h, "learner");
        uint64_t violated = 0;
        for (uint64_t k = 0; k < steps; ++k) {
            const auto s = h->learner.state();
            const auto a = h->learner.act();
            const auto obs = h->env.step(s, a, h->samples, h->learner.rng());
            violated += peakrl::violates(h->samples);
            h->learner.observe(a, obs.reward, h->samples, obs.next_state);
        }
        if (violations) *violations = violated;
    });
}

prl_status prl_learner_q(const prl_learner* h, double* out, size_t len) {
    return guarded([&] {
        require(h, "learner");
        require(out, "out");
        const auto flat = h->learner.q().flat();
        if (len < flat.size()) throw peakrl::ArgumentError("output buffer too small");
        std::copy(flat.begin(), flat.end(), out);
    });
}

prl_status prl_learner_visits(const prl_learner* h, uint64_t* out, size_t len) {
    return guarded([&] {
        require(h, "learner");
        require(out, "out");
        const auto counts = h->learner.visits().counts();
        if (len < counts.size()) throw peakrl::ArgumentError("output buffer too small");
        std::copy(counts.begin(), counts.end(), out);
    });
}

prl_status prl_learner_state_size(const prl_learner* h, size_t* bytes) {
    return guarded([&] {
        require(h, "learner");
        require(bytes, "bytes");
        *bytes = h->learner.footprint().bytes;
    });
}

} // extern "C"
