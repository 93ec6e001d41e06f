#include "qmrl/harness/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace qmrl::harness {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: " + key + ": " + why);
}

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        bad(section, "expected an object");
    }
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) {
            bad(section.empty() ? k : section + "." + k, "unknown key");
        }
    }
}

template <typename T>
void read(const json& obj, const std::string& section, const char* key, T& out) {
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        bad(section + "." + key, "wrong type");
    }
}

void read_u64(const json& obj, const std::string& section, const char* key, std::uint64_t& out) {
    if (!obj.contains(key)) {
        return;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        bad(section + "." + key, "expected a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
}

}    // namespace

std::string_view arm_name(env::Arm arm) {
    switch (arm) {
        case env::Arm::CC: return "CC";
        case env::Arm::QMDefault: return "QM-Default";
        case env::Arm::QMR2R: return "QM-R2R";
        case env::Arm::QMRL: return "QM-RL";
    }
    return "?";
}

env::Arm parse_arm(std::string_view name) {
    for (auto a : {env::Arm::CC, env::Arm::QMDefault, env::Arm::QMR2R, env::Arm::QMRL}) {
        if (arm_name(a) == name) {
            return a;
        }
    }
    throw std::invalid_argument("unknown arm '" + std::string(name) + "' (CC, QM-Default, QM-R2R, QM-RL)");
}

std::string_view scenario_name(sim::ScenarioMode mode) {
    return mode == sim::ScenarioMode::Simple ? "Simple" : "Var";
}

sim::ScenarioMode parse_scenario(std::string_view name) {
    if (name == "Simple" || name == "simple") {
        return sim::ScenarioMode::Simple;
    }
    if (name == "Var" || name == "var") {
        return sim::ScenarioMode::Var;
    }
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (Simple, Var)");
}

ExperimentConfig preset(std::string_view name) {
    ExperimentConfig cfg;
    if (name == "paper") {
        return cfg;
    }
    if (name == "desk") {
        cfg.population = {16, 8, 8, 7};
        cfg.sac.network = {32, 64, 0.1};
        cfg.epochs = 300;
        cfg.batch = 64;
        cfg.validation_every = 25;
        cfg.seeds = {1};
        return cfg;
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (paper, desk)");
}

ExperimentConfig apply_json(ExperimentConfig cfg, const json& doc) {
    check_keys(doc, "", {"preset", "sim", "therapy", "sac", "replay", "env", "harness"});
    if (doc.contains("sim")) {
        const auto& s = doc.at("sim");
        check_keys(s, "sim", {"population", "train_patients", "validation_patients", "seed"});
        read(s, "sim", "population", cfg.population.size);
        read(s, "sim", "train_patients", cfg.population.train);
        read(s, "sim", "validation_patients", cfg.population.validation);
        read_u64(s, "sim", "seed", cfg.population.seed);
    }
    if (doc.contains("therapy")) {
        const auto& t = doc.at("therapy");
        check_keys(t, "therapy", {"action_scale"});
        read(t, "therapy", "action_scale", cfg.episode.action_scale);
    }
    if (doc.contains("sac")) {
        const auto& s = doc.at("sac");
        check_keys(s, "sac",
                   {"gamma", "tau", "target_entropy", "critic_lr", "actor_lr", "alpha_lr", "initial_alpha", "reward_scale",
                    "grad_clip", "hidden", "dense", "dropout"});
        read(s, "sac", "gamma", cfg.sac.gamma);
        read(s, "sac", "tau", cfg.sac.tau);
        read(s, "sac", "target_entropy", cfg.sac.target_entropy);
        read(s, "sac", "critic_lr", cfg.sac.critic_lr);
        read(s, "sac", "actor_lr", cfg.sac.actor_lr);
        read(s, "sac", "alpha_lr", cfg.sac.alpha_lr);
        read(s, "sac", "initial_alpha", cfg.sac.initial_alpha);
        read(s, "sac", "reward_scale", cfg.sac.reward_scale);
        read(s, "sac", "grad_clip", cfg.sac.grad_clip);
        read(s, "sac", "hidden", cfg.sac.network.hidden);
        read(s, "sac", "dense", cfg.sac.network.dense);
        read(s, "sac", "dropout", cfg.sac.network.dropout);
    }
    if (doc.contains("replay")) {
        const auto& r = doc.at("replay");
        check_keys(r, "replay", {"capacity", "alpha", "beta_start", "beta_end", "priority_floor"});
        read(r, "replay", "capacity", cfg.replay.capacity);
        read(r, "replay", "alpha", cfg.replay.alpha);
        read(r, "replay", "beta_start", cfg.replay.beta_start);
        read(r, "replay", "beta_end", cfg.replay.beta_end);
        read(r, "replay", "priority_floor", cfg.replay.priority_floor);
    }
    if (doc.contains("env")) {
        const auto& e = doc.at("env");
        check_keys(e, "env", {"max_steps", "step_days", "train_scenario"});
        read(e, "env", "max_steps", cfg.episode.max_steps);
        read(e, "env", "step_days", cfg.episode.step_days);
        if (e.contains("train_scenario")) {
            std::string s;
            read(e, "env", "train_scenario", s);
            cfg.episode.mode = parse_scenario(s);
        }
    }
    if (doc.contains("harness")) {
        const auto& h = doc.at("harness");
        check_keys(h, "harness",
                   {"epochs", "batch", "replay_ratio", "validation_every", "validation_steps", "patience", "seeds",
                    "arms", "scenarios", "weeks", "eval_seed", "checkpoint", "output_dir"});
        read(h, "harness", "epochs", cfg.epochs);
        read(h, "harness", "batch", cfg.batch);
        read(h, "harness", "replay_ratio", cfg.replay_ratio);
        read(h, "harness", "validation_every", cfg.validation_every);
        read(h, "harness", "validation_steps", cfg.validation_steps);
        read(h, "harness", "patience", cfg.patience);
        read(h, "harness", "weeks", cfg.weeks);
        read_u64(h, "harness", "eval_seed", cfg.eval_seed);
        if (h.contains("seeds")) {
            read(h, "harness", "seeds", cfg.seeds);
        }
        if (h.contains("arms")) {
            std::vector<std::string> names;
            read(h, "harness", "arms", names);
            cfg.arms.clear();
            for (const auto& n : names) {
                cfg.arms.push_back(parse_arm(n));
            }
        }
        if (h.contains("scenarios")) {
            std::vector<std::string> names;
            read(h, "harness", "scenarios", names);
            cfg.scenarios.clear();
            for (const auto& n : names) {
                cfg.scenarios.push_back(parse_scenario(n));
            }
        }
        if (h.contains("checkpoint")) {
            std::string p;
            read(h, "harness", "checkpoint", p);
            cfg.checkpoint = p;
        }
        if (h.contains("output_dir")) {
            std::string p;
            read(h, "harness", "output_dir", p);
            cfg.output_dir = p;
        }
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::string_view preset_name) {
    std::ifstream is(path);
    if (!is) {
        throw std::invalid_argument("config: cannot open " + path.string());
    }
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    std::string name(preset_name);
    if (doc.contains("preset")) {
        name = doc.at("preset").get<std::string>();
    }
    return apply_json(preset(name), doc);
}

json to_json(const ExperimentConfig& cfg) {
    std::vector<std::string> arms;
    for (auto a : cfg.arms) {
        arms.emplace_back(arm_name(a));
    }
    std::vector<std::string> scenarios;
    for (auto s : cfg.scenarios) {
        scenarios.emplace_back(scenario_name(s));
    }
    return json{
        {"sim",
         {{"population", cfg.population.size},
          {"train_patients", cfg.population.train},
          {"validation_patients", cfg.population.validation},
          {"seed", cfg.population.seed}}},
        {"therapy", {{"action_scale", cfg.episode.action_scale}}},
        {"sac",
         {{"gamma", cfg.sac.gamma},
          {"tau", cfg.sac.tau},
          {"target_entropy", cfg.sac.target_entropy},
          {"critic_lr", cfg.sac.critic_lr},
          {"actor_lr", cfg.sac.actor_lr},
          {"alpha_lr", cfg.sac.alpha_lr},
          {"initial_alpha", cfg.sac.initial_alpha},
          {"reward_scale", cfg.sac.reward_scale},
          {"grad_clip", cfg.sac.grad_clip},
          {"hidden", cfg.sac.network.hidden},
          {"dense", cfg.sac.network.dense},
          {"dropout", cfg.sac.network.dropout}}},
        {"replay",
         {{"capacity", cfg.replay.capacity},
          {"alpha", cfg.replay.alpha},
          {"beta_start", cfg.replay.beta_start},
          {"beta_end", cfg.replay.beta_end},
          {"priority_floor", cfg.replay.priority_floor}}},
        {"env",
         {{"max_steps", cfg.episode.max_steps},
          {"step_days", cfg.episode.step_days},
          {"train_scenario", scenario_name(cfg.episode.mode)}}},
        {"harness",
         {{"epochs", cfg.epochs},
          {"batch", cfg.batch},
          {"replay_ratio", cfg.replay_ratio},
          {"validation_every", cfg.validation_every},
          {"validation_steps", cfg.validation_steps},
          {"patience", cfg.patience},
          {"seeds", cfg.seeds},
          {"arms", arms},
          {"scenarios", scenarios},
          {"weeks", cfg.weeks},
          {"eval_seed", cfg.eval_seed},
          {"checkpoint", cfg.checkpoint.string()},
          {"output_dir", cfg.output_dir.string()}}},
    };
}

void validate_config(const ExperimentConfig& cfg) {
    const auto& p = cfg.population;
    if (p.size < 1 || p.train < 1 || p.validation < 0 || p.train + p.validation > p.size) {
        bad("sim", "need 1 <= train_patients and train_patients + validation_patients <= population");
    }
    if (cfg.sac.network.hidden < 1 || cfg.sac.network.dense < 1) {
        bad("sac", "hidden and dense must be positive");
    }
    if (!(cfg.sac.network.dropout >= 0.0 && cfg.sac.network.dropout < 1.0)) {
        bad("sac.dropout", "must be in [0, 1)");
    }
    if (!(cfg.sac.gamma >= 0.0 && cfg.sac.gamma < 1.0)) {
        bad("sac.gamma", "must be in [0, 1)");
    }
    if (!(cfg.sac.tau > 0.0 && cfg.sac.tau <= 1.0)) {
        bad("sac.tau", "must be in (0, 1]");
    }
    if (cfg.sac.initial_alpha <= 0.0) {
        bad("sac.initial_alpha", "must be positive");
    }
    if (!(cfg.sac.reward_scale > 0.0)) {
        bad("sac.reward_scale", "must be positive");
    }
    if (cfg.replay.capacity < 1 || cfg.replay.alpha < 0.0 || cfg.replay.priority_floor <= 0.0) {
        bad("replay", "capacity >= 1, alpha >= 0 and priority_floor > 0 required");
    }
    if (cfg.episode.max_steps < 1 || cfg.episode.step_days < 1) {
        bad("env", "max_steps and step_days must be positive");
    }
    if (cfg.episode.action_scale <= 0.0 || cfg.episode.action_scale >= 1.0) {
        bad("therapy.action_scale", "must be in (0, 1)");
    }
    if (cfg.epochs < 0 || cfg.batch < 1 || cfg.replay_ratio < 0.0 || cfg.validation_steps < 1) {
        bad("harness", "epochs >= 0, batch >= 1, replay_ratio >= 0, validation_steps >= 1 required");
    }
    if (static_cast<std::size_t>(cfg.batch) > cfg.replay.capacity) {
        bad("harness.batch", "larger than the replay capacity");
    }
    if (cfg.weeks < 2 || cfg.weeks % 2 != 0) {
        bad("harness.weeks", "must be a positive even number of weeks");
    }
    if (cfg.seeds.empty()) {
        bad("harness.seeds", "at least one seed required");
    }
}

sac::TrainConfig train_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    sac::TrainConfig t;
    t.sac = cfg.sac;
    t.replay = cfg.replay;
    t.episode = cfg.episode;
    t.epochs = cfg.epochs;
    t.batch = cfg.batch;
    t.replay_ratio = cfg.replay_ratio;
    t.validation_every = cfg.validation_every;
    t.validation_steps = cfg.validation_steps;
    t.patience = cfg.patience;
    t.seed = seed;
    return t;
}

}    // namespace qmrl::harness
