#include "qmrl/sac/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "qmrl/nn/checkpoint.hpp"

namespace qmrl::sac {

namespace {

therapy::Action uniform_action(Rng& rng) {
    therapy::Action a{};
    for (auto& v : a) {
        v = rng.uniform(-1.0, 1.0);
    }
    return a;
}

}    // namespace

double discounted_return(const std::vector<double>& rewards, double gamma) {
    const auto n = rewards.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += std::pow(gamma, static_cast<double>(n - 1 - i)) * rewards[i];
    }
    return total;
}

ValidationResult validate(SacAgent& agent, const std::vector<sim::VirtualPatient>& patients, int steps,
                          sim::ScenarioMode mode, double gamma, std::uint64_t seed) {
    ValidationResult out;
    if (patients.empty()) {
        return out;
    }
    env::EpisodeConfig cfg;
    cfg.mode = mode;
    cfg.max_steps = steps;
    std::vector<env::PatientEnv> envs;
    envs.reserve(patients.size());
    for (const auto& p : patients) {
        envs.emplace_back(p, cfg);
        envs.back().reset(seed);
    }
    std::vector<std::vector<double>> rewards(patients.size());
    double tir_sum = 0.0;
    long tir_count = 0;
    double final_tir = 0.0;
    for (int s = 0; s < steps; ++s) {
        std::vector<const Observation*> obs;
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < envs.size(); ++i) {
            if (!envs[i].done()) {
                obs.push_back(envs[i].observation().get());
                active.push_back(i);
            }
        }
        if (obs.empty()) {
            break;
        }
        const auto actions = agent.act_batch(obs, true);
        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto r = envs[active[k]].step(actions[k]);
            rewards[active[k]].push_back(r.reward);
            tir_sum += r.metrics.tir;
            ++tir_count;
            if (s == steps - 1) {
                final_tir += r.metrics.tir;
            }
        }
    }
    double reward_sum = 0.0;
    long reward_count = 0;
    for (const auto& r : rewards) {
        out.r_val += discounted_return(r, gamma);
        for (double v : r) {
            reward_sum += v;
            ++reward_count;
        }
    }
    const auto n = static_cast<double>(patients.size());
    out.r_val /= n;
    out.mean_reward = reward_count > 0 ? reward_sum / static_cast<double>(reward_count) : 0.0;
    out.mean_tir = tir_count > 0 ? tir_sum / static_cast<double>(tir_count) : 0.0;
    out.final_tir = final_tir / n;
    return out;
}

Trainer::Trainer(const TrainConfig& cfg, std::vector<sim::VirtualPatient> train,
                 std::vector<sim::VirtualPatient> validation)
    : cfg_(cfg),
      train_(std::move(train)),
      validation_(std::move(validation)),
      agent_(cfg.sac, derive_seed(cfg.seed, {0x6167656e74ULL})),
      buffer_(cfg.replay),
      rng_(derive_seed(cfg.seed, {0x747261696eULL})) {
    if (train_.empty()) {
        throw std::invalid_argument("Trainer: no training patients");
    }
    if (cfg.batch < 1 || cfg.epochs < 0 || cfg.replay_ratio < 0.0) {
        throw std::invalid_argument("Trainer: batch, epochs and replay_ratio must be positive");
    }
    envs_.reserve(train_.size());
    for (const auto& p : train_) {
        envs_.emplace_back(p, cfg.episode);
    }
    episodes_.assign(train_.size(), 0);
    for (std::size_t i = 0; i < envs_.size(); ++i) {
        envs_[i].reset(cfg.seed, episodes_[i]);
    }
}

long Trainer::iterations_per_epoch() const {
    return std::lround(cfg_.replay_ratio * static_cast<double>(train_.size()));
}

long Trainer::planned_epoch_simulations() const {
    return static_cast<long>(cfg_.epochs) * static_cast<long>(train_.size());
}

void Trainer::resume(const std::filesystem::path& checkpoint) {
    epoch_ = load_agent(agent_, checkpoint);
}

void Trainer::collect(bool random_actions, long& count, double* reward_sum) {
    std::vector<const Observation*> obs;
    for (const auto& e : envs_) {
        obs.push_back(e.observation().get());
    }
    std::vector<therapy::Action> actions;
    if (random_actions) {
        for (std::size_t i = 0; i < envs_.size(); ++i) {
            actions.push_back(uniform_action(rng_));
        }
    } else {
        actions = agent_.act_batch(obs, false);
    }
    for (std::size_t i = 0; i < envs_.size(); ++i) {
        auto state = envs_[i].observation();
        const auto r = envs_[i].step(actions[i]);
        replay::Transition t;
        t.state = std::move(state);
        t.action = actions[i];
        t.reward = r.reward;
        t.next_state = r.observation;
        t.done = r.terminal;
        buffer_.push(std::move(t));
        ++count;
        if (reward_sum != nullptr) {
            *reward_sum += r.reward;
        }
        if (r.done) {
            envs_[i].reset(cfg_.seed, ++episodes_[i]);
        }
    }
}

void Trainer::warm_up() {
    // Resumed runs refill the buffer from their own policy.
    const bool random_actions = epoch_ == 0;
    while (buffer_.size() < static_cast<std::size_t>(cfg_.batch)) {
        collect(random_actions, counters_.warmup_transitions, nullptr);
    }
}

EpochLog Trainer::run_epoch() {
    if (buffer_.size() < static_cast<std::size_t>(cfg_.batch)) {
        warm_up();
    }
    ++epoch_;
    EpochLog log;
    log.epoch = epoch_;
    double reward_sum = 0.0;
    collect(false, log.transitions, &reward_sum);
    counters_.epoch_transitions += log.transitions;
    log.mean_reward = reward_sum / static_cast<double>(log.transitions);

    const long iters = iterations_per_epoch();
    const double progress = cfg_.epochs > 0 ? static_cast<double>(epoch_) / cfg_.epochs : 1.0;
    double loss_sum = 0.0;
    for (long k = 0; k < iters; ++k) {
        const auto sample = buffer_.sample(static_cast<std::size_t>(cfg_.batch), buffer_.beta_at(progress), rng_);
        const auto batch = Batch::from_sample(sample);
        const auto stats = agent_.train_step(batch);
        buffer_.update_priorities(sample.ids, stats.td_errors);
        loss_sum += 0.5 * (stats.loss1 + stats.loss2);
        ++log.gradient_iterations;
    }
    counters_.gradient_iterations += log.gradient_iterations;
    log.critic_loss = iters > 0 ? loss_sum / static_cast<double>(iters) : 0.0;
    log.alpha = agent_.alpha();

    if (cfg_.validation_every > 0 && epoch_ % cfg_.validation_every == 0 && !validation_.empty()) {
        log.validation = validate(agent_, validation_, cfg_.validation_steps, cfg_.validation_mode, cfg_.sac.gamma,
                                  derive_seed(cfg_.seed, {0x76616cULL}));
        const double r = log.validation->r_val;
        if (counters_.best_epoch < 0 || r > counters_.best_r_val) {
            counters_.best_epoch = epoch_;
            counters_.best_r_val = r;
            since_best_ = 0;
            if (!cfg_.output_dir.empty()) {
                save_agent(agent_, cfg_.output_dir / "best.ckpt", cfg_.seed, epoch_);
            }
        } else {
            ++since_best_;
        }
        if (!cfg_.output_dir.empty()) {
            save_agent(agent_, cfg_.output_dir / fmt::format("epoch_{:05d}.ckpt", epoch_), cfg_.seed, epoch_);
        }
    }
    counters_.epochs_run += 1;
    counters_.simulations = 0;
    for (const auto& e : envs_) {
        counters_.simulations += e.simulations();
    }
    return log;
}

TrainCounters Trainer::run(const std::function<void(const EpochLog&)>& on_epoch) {
    std::ofstream curve;
    if (!cfg_.output_dir.empty()) {
        std::filesystem::create_directories(cfg_.output_dir);
        const auto path = cfg_.output_dir / "validation.csv";
        const bool fresh = epoch_ == 0 || !std::filesystem::exists(path);
        curve.open(path, fresh ? std::ios::trunc : std::ios::app);
        if (fresh) {
            curve << "seed,epoch,r_val,mean_reward,mean_tir,final_tir\n";
        }
    }
    while (epoch_ < cfg_.epochs) {
        const auto log = run_epoch();
        if (log.validation && curve.is_open()) {
            const auto& v = *log.validation;
            curve << fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g}\n", cfg_.seed, log.epoch, v.r_val,
                                 v.mean_reward, v.mean_tir, v.final_tir);
            curve.flush();
        }
        if (on_epoch) {
            on_epoch(log);
        }
        if (cfg_.patience > 0 && since_best_ >= cfg_.patience) {
            counters_.early_stopped = true;
            break;
        }
    }
    if (!cfg_.output_dir.empty()) {
        save_agent(agent_, cfg_.output_dir / "last.ckpt", cfg_.seed, epoch_);
    }
    return counters_;
}

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
    auto p = checkpoint;
    p += ".json";
    return p;
}

void save_agent(SacAgent& agent, const std::filesystem::path& path, std::uint64_t seed, int epoch) {
    std::vector<nn::NamedArray> arrays;
    nn::append_store(arrays, "actor/", agent.actor().params());
    nn::append_store(arrays, "critic1/", agent.critic(0).params());
    nn::append_store(arrays, "critic2/", agent.critic(1).params());
    nn::append_store(arrays, "target1/", agent.target(0).params());
    nn::append_store(arrays, "target2/", agent.target(1).params());
    nn::append_store(arrays, "", agent.temperature_params());
    nn::write_container(path, arrays);

    const auto& net = agent.config().network;
    nlohmann::json manifest = {
        {"format", "qmrl-checkpoint-1"},
        {"seed", seed},
        {"epoch", epoch},
        {"network", {{"hidden", net.hidden}, {"dense", net.dense}, {"dropout", net.dropout}}},
        {"arrays", arrays.size()},
    };
    std::ofstream os(manifest_path(path));
    os << manifest.dump(2) << '\n';
}

NetworkConfig checkpoint_network(const std::filesystem::path& path) {
    std::ifstream is(manifest_path(path));
    if (!is) {
        throw std::runtime_error("checkpoint manifest not found: " + manifest_path(path).string());
    }
    const auto m = nlohmann::json::parse(is);
    NetworkConfig net;
    net.hidden = m.at("network").at("hidden").get<int>();
    net.dense = m.at("network").at("dense").get<int>();
    net.dropout = m.at("network").at("dropout").get<double>();
    return net;
}

int load_agent(SacAgent& agent, const std::filesystem::path& path) {
    const auto arrays = nn::read_container(path);
    nn::load_store(arrays, "actor/", agent.actor().params());
    nn::load_store(arrays, "critic1/", agent.critic(0).params());
    nn::load_store(arrays, "critic2/", agent.critic(1).params());
    nn::load_store(arrays, "target1/", agent.target(0).params());
    nn::load_store(arrays, "target2/", agent.target(1).params());
    nn::load_store(arrays, "", agent.temperature_params());
    std::ifstream is(manifest_path(path));
    if (!is) {
        throw std::runtime_error("checkpoint manifest not found: " + manifest_path(path).string());
    }
    return nlohmann::json::parse(is).at("epoch").get<int>();
}

}    // namespace qmrl::sac
