// Command-line front end: train, evaluate, export-profile, gradcheck, simulate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qmrl/env.hpp"
#include "qmrl/harness/config.hpp"
#include "qmrl/harness/experiment.hpp"
#include "qmrl/harness/profile.hpp"
#include "qmrl/metrics.hpp"
#include "qmrl/nn/gaussian.hpp"
#include "qmrl/nn/gradcheck.hpp"
#include "qmrl/nn/layers.hpp"

namespace {

using namespace qmrl;

int fail(const std::string& verb, const std::string& kind, const std::string& message, int code) {
    const nlohmann::json line = {{"status", "error"}, {"verb", verb}, {"kind", kind}, {"message", message}};
    std::cerr << line.dump() << '\n';
    return code;
}

struct CommonOptions {
    std::string config;
    std::string preset = "paper";
    std::string out;
    std::vector<std::uint64_t> seeds;
};

harness::ExperimentConfig build_config(const CommonOptions& o) {
    auto cfg = o.config.empty() ? harness::preset(o.preset) : harness::load_config(o.config, o.preset);
    if (!o.out.empty()) {
        cfg.output_dir = o.out;
    }
    if (!o.seeds.empty()) {
        cfg.seeds = o.seeds;
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "JSON configuration file");
    cmd->add_option("-p,--preset", o.preset, "Base preset: paper or desk")->capture_default_str();
    cmd->add_option("-o,--out", o.out, "Output directory");
}

// Gradient checks of every layer type on small random problems.
int run_gradcheck(std::uint64_t seed, double tolerance) {
    Rng rng(seed);
    bool ok = true;
    auto report = [&](const char* name, const nn::GradCheckResult& r) {
        const bool pass = r.max_error < tolerance;
        ok = ok && pass;
        const nlohmann::json line = {{"check", name},     {"max_error", r.max_error}, {"worst", r.worst},
                                     {"probes", r.checked}, {"tolerance", tolerance}, {"pass", pass}};
        std::cout << line.dump() << '\n';
    };

    auto random_mat = [&](int r, int c) {
        nn::Mat m(r, c);
        nn::uniform_init(m, 1.0, rng);
        return m;
    };

    {
        nn::ParamStore store;
        nn::Dense dense(store, "dense", 5, 3, rng);
        nn::Mat x = random_mat(5, 4);
        const nn::Mat w = random_mat(3, 4);
        auto loss = [&] { return dense.forward(store, x, false).cwiseProduct(w).sum(); };
        store.zero_grad();
        dense.forward(store, x);
        const nn::Mat dx = dense.backward(store, w);
        report("dense.params", nn::check_param_gradients(store, loss));
        report("dense.input", nn::check_input_gradient(x, dx, loss));
    }
    {
        const int steps = 16;
        const int batch = 3;
        nn::ParamStore store;
        nn::Lstm lstm(store, "lstm", 4, 5, rng);
        nn::Mat x = random_mat(4, steps * batch);
        const nn::Mat w_last = random_mat(5, batch);
        const nn::Mat w_all = random_mat(5, steps * batch);
        auto loss = [&] {
            nn::Lstm probe = lstm;
            const nn::Mat h = probe.forward(store, x, steps, true);
            return h.cwiseProduct(w_last).sum() + probe.outputs().cwiseProduct(w_all).sum();
        };
        store.zero_grad();
        lstm.forward(store, x, steps);
        const nn::Mat dx = lstm.backward(store, w_last, &w_all, true);
        report("lstm.params", nn::check_param_gradients(store, loss));
        report("lstm.input", nn::check_input_gradient(x, dx, loss));
    }
    {
        nn::Mat mu = random_mat(10, 4);
        nn::Mat ls = 0.5 * random_mat(10, 4);
        const nn::Mat eps = random_mat(10, 4);
        const nn::Mat wa = random_mat(10, 4);
        const nn::Mat wl = random_mat(1, 4);
        auto loss = [&] {
            const auto s = nn::squashed_sample(mu, ls, eps, 1.0);
            return s.action.cwiseProduct(wa).sum() + s.log_prob.cwiseProduct(wl).sum();
        };
        const auto s = nn::squashed_sample(mu, ls, eps, 1.0);
        nn::Mat dmu, dls;
        nn::squashed_backward(s, wa, wl, dmu, dls);
        report("squashed_gaussian.mu", nn::check_input_gradient(mu, dmu, loss, 1e-5, "mu"));
        report("squashed_gaussian.log_std", nn::check_input_gradient(ls, dls, loss, 1e-5, "log_std"));
    }
    return ok ? 0 : 1;
}

}    // namespace

int main(int argc, char** argv) {
    CLI::App app{"Qualitative-meal insulin dosing laboratory: SAC and run-to-run training and evaluation"};
    app.require_subcommand(1);

    CommonOptions train_opts;
    std::string resume;
    int epochs = -1;
    auto* train = app.add_subcommand("train", "Train SAC agents, one per seed");
    add_common(train, train_opts);
    train->add_option("-s,--seed", train_opts.seeds, "Training seed(s); overrides the config");
    train->add_option("--epochs", epochs, "Override the number of epochs");
    train->add_option("--resume", resume, "Continue from a checkpoint (single seed)");

    CommonOptions eval_opts;
    std::string checkpoint;
    std::vector<std::string> arms;
    std::vector<std::string> scenarios;
    int weeks = -1;
    std::uint64_t eval_seed = 0;
    auto* evaluate = app.add_subcommand("evaluate", "Run the arm x scenario experiment on the validation patients");
    add_common(evaluate, eval_opts);
    evaluate->add_option("--checkpoint", checkpoint, "Checkpoint for the QM-RL arm");
    evaluate->add_option("--arms", arms, "Subset of CC, QM-Default, QM-R2R, QM-RL")->delimiter(',');
    evaluate->add_option("--scenario", scenarios, "Simple, Var or both")->delimiter(',');
    evaluate->add_option("--weeks", weeks, "Evaluation length in weeks (even)");
    auto* eval_seed_opt = evaluate->add_option("-s,--seed", eval_seed, "Seed for meals, variability and initial policies");

    std::string traces;
    std::string profile_out = ".";
    auto* profile = app.add_subcommand("export-profile", "Time-of-day glucose median/IQR and dose scatter");
    profile->add_option("traces", traces, "traces_final.csv from evaluate")->required();
    profile->add_option("-o,--out", profile_out, "Output directory")->capture_default_str();

    std::uint64_t gc_seed = 1;
    double gc_tol = 1e-6;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every layer gradient");
    gradcheck->add_option("-s,--seed", gc_seed)->capture_default_str();
    gradcheck->add_option("--tolerance", gc_tol)->capture_default_str();

    int patient_id = 0;
    std::uint64_t pop_seed = 7;
    int population = 100;
    std::string arm = "QM-Default";
    std::string scenario = "Simple";
    int days = 14;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Simulate one patient for one period and write its trace CSV");
    simulate->add_option("--patient", patient_id, "Patient id")->capture_default_str();
    simulate->add_option("--population", population, "Population size")->capture_default_str();
    simulate->add_option("--population-seed", pop_seed)->capture_default_str();
    simulate->add_option("--arm", arm, "CC or QM-Default")->capture_default_str();
    simulate->add_option("--scenario", scenario)->capture_default_str();
    simulate->add_option("--days", days)->capture_default_str();
    simulate->add_option("-s,--seed", sim_seed)->capture_default_str();
    simulate->add_option("-o,--out", sim_out, "Trace CSV path (stdout if empty)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const std::string verb = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
        return fail(verb, "usage", e.what(), 2);
    }

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        if (*train) {
            auto cfg = build_config(train_opts);
            if (epochs >= 0) {
                cfg.epochs = epochs;
            }
            harness::validate_config(cfg);
            std::optional<std::filesystem::path> from;
            if (!resume.empty()) {
                from = resume;
            }
            harness::cmd_train(cfg, std::cout, from);
        } else if (*evaluate) {
            auto cfg = build_config(eval_opts);
            if (!checkpoint.empty()) {
                cfg.checkpoint = checkpoint;
            }
            if (!arms.empty()) {
                cfg.arms.clear();
                for (const auto& a : arms) {
                    cfg.arms.push_back(harness::parse_arm(a));
                }
            }
            if (!scenarios.empty()) {
                cfg.scenarios.clear();
                for (const auto& s : scenarios) {
                    if (s == "both") {
                        cfg.scenarios = {sim::ScenarioMode::Simple, sim::ScenarioMode::Var};
                    } else {
                        cfg.scenarios.push_back(harness::parse_scenario(s));
                    }
                }
            }
            if (weeks > 0) {
                cfg.weeks = weeks;
            }
            if (eval_seed_opt->count() > 0) {
                cfg.eval_seed = eval_seed;
            }
            harness::cmd_evaluate(cfg, std::cout);
        } else if (*profile) {
            harness::cmd_export_profile(traces, profile_out);
        } else if (*gradcheck) {
            const int rc = run_gradcheck(gc_seed, gc_tol);
            if (rc != 0) {
                return fail(verb, "gradient-mismatch", "at least one gradient check exceeded the tolerance", rc);
            }
        } else if (*simulate) {
            const auto pop = sim::generate_population(population, pop_seed);
            if (patient_id < 0 || patient_id >= population) {
                return fail(verb, "usage", "patient id out of range", 2);
            }
            if (days < 1) {
                return fail(verb, "usage", "days must be positive", 2);
            }
            const auto& p = pop[static_cast<std::size_t>(patient_id)];
            env::EpisodeConfig ec;
            ec.mode = harness::parse_scenario(scenario);
            ec.step_days = days;
            const auto which = harness::parse_arm(arm);
            if (which != env::Arm::CC && which != env::Arm::QMDefault) {
                return fail(verb, "usage", "simulate supports the CC and QM-Default arms", 2);
            }
            env::PatientEnv e(p, ec, which == env::Arm::CC);
            e.reset(sim_seed);
            const auto& trace = e.last_trace();
            if (sim_out.empty()) {
                sim::write_trace_csv(std::cout, trace);
            } else {
                std::ofstream os(sim_out);
                if (!os) {
                    return fail(verb, "io", "cannot write " + sim_out, 1);
                }
                sim::write_trace_csv(os, trace);
            }
            const auto m = metrics::compute_metrics(trace.cgm, trace.doses);
            std::cerr << fmt::format("patient {} TIR {:.2f}% TBR1 {:.2f}% mean {:.1f} mg/dL bolus {:.1f} U/day\n",
                                     p.id, m.tir, m.tbr1, m.mean, m.total_bolus);
        }
    } catch (const std::invalid_argument& e) {
        return fail(verb, "invalid-input", e.what(), 2);
    } catch (const std::exception& e) {
        return fail(verb, "runtime", e.what(), 1);
    }
    return 0;
}
