#include "qmrl/harness/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qmrl/harness/profile.hpp"
#include "qmrl/r2r.hpp"

namespace qmrl::harness {

namespace {

constexpr const char* kMetricHeader = "TBR2,TBR1,TIR,TAR1,TAR2,Mean,SD,Bolus";

std::array<double, 8> as_row(const metrics::GlycemicMetrics& m) {
    return {m.tbr2, m.tbr1, m.tir, m.tar1, m.tar2, m.mean, m.sd, m.total_bolus};
}

struct Summary {
    std::array<double, 8> mean{};
    std::array<double, 8> sd{};    // sample SD
    std::size_t n = 0;
};

Summary summarize(const std::vector<std::array<double, 8>>& rows) {
    Summary s;
    s.n = rows.size();
    if (rows.empty()) {
        return s;
    }
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < 8; ++k) {
            s.mean[k] += r[k];
        }
    }
    for (auto& v : s.mean) {
        v /= static_cast<double>(s.n);
    }
    if (s.n > 1) {
        for (const auto& r : rows) {
            for (std::size_t k = 0; k < 8; ++k) {
                s.sd[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
            }
        }
        for (auto& v : s.sd) {
            v = std::sqrt(v / static_cast<double>(s.n - 1));
        }
    }
    return s;
}

std::string join(const std::array<double, 8>& v) {
    return fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", v[0], v[1], v[2], v[3], v[4], v[5],
                       v[6], v[7]);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return os;
}

}    // namespace

Population split_population(const PopulationConfig& cfg) {
    const auto all = sim::generate_population(cfg.size, cfg.seed);
    Population p;
    p.train.assign(all.begin(), all.begin() + cfg.train);
    p.validation.assign(all.end() - cfg.validation, all.end());
    return p;
}

TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log,
                       const std::optional<std::filesystem::path>& resume) {
    validate_config(cfg);
    if (resume && cfg.seeds.size() != 1) {
        throw std::invalid_argument("resume requires exactly one seed");
    }
    const auto pop = split_population(cfg.population);
    std::filesystem::create_directories(cfg.output_dir);
    {
        auto os = open_out(cfg.output_dir / "config.json");
        os << to_json(cfg).dump(2) << '\n';
    }

    TrainSummary summary;
    std::map<int, std::vector<double>> curves;
    for (const auto seed : cfg.seeds) {
        auto tc = train_config(cfg, seed);
        tc.output_dir = cfg.output_dir / fmt::format("seed_{}", seed);
        sac::Trainer trainer(tc, pop.train, pop.validation);
        if (resume) {
            trainer.resume(*resume);
            fmt::print(log, "resumed seed {} at epoch {}\n", seed, trainer.next_epoch());
        }
        const auto counters = trainer.run([&](const sac::EpochLog& e) {
            if (e.validation) {
                curves[e.epoch].push_back(e.validation->r_val);
                fmt::print(log, "seed {} epoch {} r_val {:.4f} tir {:.2f} alpha {:.4f} critic_loss {:.5f}\n", seed,
                           e.epoch, e.validation->r_val, e.validation->mean_tir, e.alpha, e.critic_loss);
                log.flush();
            }
        });
        fmt::print(log, "seed {} done: epochs {} transitions {} iterations {} best epoch {} r_val {:.4f}\n", seed,
                   counters.epochs_run, counters.epoch_transitions, counters.gradient_iterations, counters.best_epoch,
                   counters.best_r_val);
        summary.runs.push_back(counters);
    }

    auto os = open_out(cfg.output_dir / "validation_curve.csv");
    os << "epoch,n,mean_r_val,se_r_val\n";
    for (const auto& [epoch, values] : curves) {
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) {
            mean += v;
        }
        mean /= n;
        double var = 0.0;
        for (double v : values) {
            var += (v - mean) * (v - mean);
        }
        const double se = values.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
        os << fmt::format("{},{},{:.10g},{:.10g}\n", epoch, values.size(), mean, se);
    }
    return summary;
}

std::vector<ArmRun> evaluate_arms(const ExperimentConfig& cfg, const std::vector<sim::VirtualPatient>& patients,
                                  sac::SacAgent* agent) {
    const int periods = cfg.weeks / 2;
    std::vector<ArmRun> runs;
    for (const auto scenario : cfg.scenarios) {
        for (const auto arm : cfg.arms) {
            if (arm == env::Arm::QMRL && agent == nullptr) {
                throw std::invalid_argument("QM-RL arm requires a trained checkpoint");
            }
            ArmRun run;
            run.arm = arm;
            run.scenario = scenario;
            env::EpisodeConfig ec = cfg.episode;
            ec.mode = scenario;
            ec.max_steps = std::max(1, periods - 1);
            for (const auto& p : patients) {
                env::PatientEnv e(p, ec, arm == env::Arm::CC);
                e.reset(cfg.eval_seed);
                PatientRun pr;
                pr.patient_id = p.id;
                const auto& first = e.last_trace();
                pr.periods.push_back(metrics::compute_metrics(first.cgm, first.doses,
                                                              first.terminated_negative_glucose ? 0.0 : ec.step_days));
                pr.final_trace = first;
                for (int k = 1; k < periods && !e.done(); ++k) {
                    therapy::Action a{};
                    if (arm == env::Arm::QMR2R) {
                        a = r2r::r2r_action(e.last_trace(), ec.action_scale);
                    } else if (arm == env::Arm::QMRL) {
                        a = agent->act(*e.observation(), true);
                    }
                    const auto r = e.step(a);
                    pr.periods.push_back(r.metrics);
                    pr.final_trace = e.last_trace();
                }
                pr.terminated = pr.final_trace.terminated_negative_glucose;
                run.patients.push_back(std::move(pr));
            }
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

void write_outcomes_csv(std::ostream& os, const std::vector<ArmRun>& runs) {
    os << "arm,scenario,statistic,n," << kMetricHeader << '\n';
    for (const auto& run : runs) {
        std::vector<std::array<double, 8>> rows;
        for (const auto& p : run.patients) {
            rows.push_back(as_row(p.periods.back()));
        }
        const auto s = summarize(rows);
        os << fmt::format("{},{},mean,{},{}\n", arm_name(run.arm), scenario_name(run.scenario), s.n, join(s.mean));
        os << fmt::format("{},{},sd,{},{}\n", arm_name(run.arm), scenario_name(run.scenario), s.n, join(s.sd));
    }
}

void write_timeseries_csv(std::ostream& os, const std::vector<ArmRun>& runs) {
    os << "arm,scenario,period,week_end,statistic,n," << kMetricHeader << '\n';
    for (const auto& run : runs) {
        std::size_t periods = 0;
        for (const auto& p : run.patients) {
            periods = std::max(periods, p.periods.size());
        }
        for (std::size_t k = 0; k < periods; ++k) {
            std::vector<std::array<double, 8>> rows;
            for (const auto& p : run.patients) {
                if (k < p.periods.size()) {
                    rows.push_back(as_row(p.periods[k]));
                }
            }
            const auto s = summarize(rows);
            std::array<double, 8> se{};
            for (std::size_t m = 0; m < 8; ++m) {
                se[m] = s.n > 0 ? s.sd[m] / std::sqrt(static_cast<double>(s.n)) : 0.0;
            }
            const auto prefix =
                fmt::format("{},{},{},{}", arm_name(run.arm), scenario_name(run.scenario), k + 1, 2 * (k + 1));
            os << fmt::format("{},mean,{},{}\n", prefix, s.n, join(s.mean));
            os << fmt::format("{},se,{},{}\n", prefix, s.n, join(se));
        }
    }
}

void write_patients_csv(std::ostream& os, const std::vector<ArmRun>& runs) {
    os << "arm,scenario,patient,period,terminated," << kMetricHeader << '\n';
    for (const auto& run : runs) {
        for (const auto& p : run.patients) {
            for (std::size_t k = 0; k < p.periods.size(); ++k) {
                const bool last = k + 1 == p.periods.size();
                os << fmt::format("{},{},{},{},{},{}\n", arm_name(run.arm), scenario_name(run.scenario), p.patient_id,
                                  k + 1, last && p.terminated ? 1 : 0, join(as_row(p.periods[k])));
            }
        }
    }
}

void write_final_traces_csv(std::ostream& os, const std::vector<ArmRun>& runs) {
    os << "arm,scenario,patient,minute,glucose,insulin,carbs\n";
    for (const auto& run : runs) {
        for (const auto& p : run.patients) {
            const auto& t = p.final_trace;
            std::vector<double> insulin(t.cgm.size(), 0.0);
            std::vector<double> carbs(t.cgm.size(), 0.0);
            const auto bin = [&](double minute) {
                return std::min(static_cast<std::size_t>(minute / sim::kNativeSampleMinutes), t.cgm.size() - 1);
            };
            for (const auto& d : t.doses) {
                insulin[bin(d.minute)] += d.units;
            }
            for (const auto& m : t.meals.events) {
                carbs[bin(m.minute)] += m.carbs;
            }
            for (std::size_t i = 0; i < t.cgm.size(); ++i) {
                os << fmt::format("{},{},{},{},{},{},{}\n", arm_name(run.arm), scenario_name(run.scenario),
                                  p.patient_id, i * sim::kNativeSampleMinutes, t.cgm[i], insulin[i], carbs[i]);
            }
        }
    }
}

std::vector<ArmRun> cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const auto pop = split_population(cfg.population);
    std::unique_ptr<sac::SacAgent> agent;
    const bool needs_agent = std::find(cfg.arms.begin(), cfg.arms.end(), env::Arm::QMRL) != cfg.arms.end();
    if (needs_agent) {
        if (cfg.checkpoint.empty() || !std::filesystem::exists(cfg.checkpoint)) {
            throw std::invalid_argument("QM-RL arm requires an existing checkpoint (got '" + cfg.checkpoint.string() +
                                        "')");
        }
        sac::SacConfig sc = cfg.sac;
        sc.network = sac::checkpoint_network(cfg.checkpoint);
        agent = std::make_unique<sac::SacAgent>(sc, 0);
        const int epoch = sac::load_agent(*agent, cfg.checkpoint);
        fmt::print(log, "loaded {} (epoch {})\n", cfg.checkpoint.string(), epoch);
    }
    const auto runs = evaluate_arms(cfg, pop.validation, agent.get());

    std::filesystem::create_directories(cfg.output_dir);
    {
        auto os = open_out(cfg.output_dir / "outcomes.csv");
        write_outcomes_csv(os, runs);
    }
    {
        auto os = open_out(cfg.output_dir / "timeseries.csv");
        write_timeseries_csv(os, runs);
    }
    {
        auto os = open_out(cfg.output_dir / "patients.csv");
        write_patients_csv(os, runs);
    }
    {
        auto os = open_out(cfg.output_dir / "traces_final.csv");
        write_final_traces_csv(os, runs);
    }
    cmd_export_profile(cfg.output_dir / "traces_final.csv", cfg.output_dir);
    for (const auto& run : runs) {
        double tir = 0.0;
        for (const auto& p : run.patients) {
            tir += p.periods.back().tir;
        }
        fmt::print(log, "{:<10} {:<6} final TIR {:.2f}%\n", arm_name(run.arm), scenario_name(run.scenario),
                   tir / static_cast<double>(run.patients.size()));
    }
    return runs;
}

}    // namespace qmrl::harness
