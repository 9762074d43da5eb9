#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bfnas/micronet/train.hpp"
#include "bfnas/search.hpp"

namespace bfnas {

enum class EvaluatorKind { kSynthetic, kMicronet };

// Everything a run needs, resolved. JSON form is flat; unknown keys are
// rejected so typos fail loudly.
struct RunConfig {
  SearchConfig search;
  EvaluatorKind evaluator = EvaluatorKind::kSynthetic;
  std::string checkpoint;  // supernet checkpoint path (micronet evaluator)

  std::uint64_t dataset_seed = 7;
  int n_train = 512;
  int n_val = 256;
  double noise_amplitude = 0.15;

  int base_width = 8;
  int cells_per_block = 1;
  int supernet_epochs = 20;
  int standalone_epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double attack_epsilon = 8.0 / 255.0;
  double attack_step = 2.0 / 255.0;
  int attack_steps = 7;
  double grad_clip_norm = 1.0;

  micronet::NetConfig net_config() const {
    micronet::NetConfig cfg;
    cfg.base_width = base_width;
    cfg.cells_per_block = cells_per_block;
    return cfg;
  }

  micronet::TrainConfig train_config(bool standalone) const {
    micronet::TrainConfig cfg;
    cfg.epochs = standalone ? standalone_epochs : supernet_epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.momentum = momentum;
    cfg.weight_decay = weight_decay;
    cfg.attack = micronet::AttackSpec::pgd(attack_steps, attack_epsilon, attack_step);
    cfg.grad_clip_norm = grad_clip_norm;
    cfg.seed = search.master_seed;
    return cfg;
  }

  micronet::SynthDataset make_dataset() const {
    return micronet::synth_dataset(dataset_seed, n_train, n_val, noise_amplitude);
  }

  void validate() const {
    search.validate();
    if (n_train < 4 || n_val < 4) throw ConfigError("n_train and n_val must be >= 4");
    if (noise_amplitude < 0.0) throw ConfigError("noise_amplitude must be >= 0");
    if (base_width < 1 || cells_per_block < 1)
      throw ConfigError("base_width and cells_per_block must be >= 1");
    if (supernet_epochs < 1 || standalone_epochs < 1 || batch_size < 1)
      throw ConfigError("epoch and batch counts must be >= 1");
    if (attack_epsilon < 0.0 || attack_step < 0.0 || attack_steps < 1)
      throw ConfigError("attack parameters out of range");
  }
};

namespace detail {

inline std::string mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::kSH: return "SH";
    case SearchMode::kH: return "H";
    case SearchMode::kL: return "L";
    case SearchMode::kS: return "S";
  }
  return "SH";
}

inline SearchMode parse_mode(const std::string& s) {
  if (s == "SH") return SearchMode::kSH;
  if (s == "H") return SearchMode::kH;
  if (s == "L") return SearchMode::kL;
  if (s == "S") return SearchMode::kS;
  throw ConfigError("unknown mode '" + s + "' (expected SH, H, L or S)");
}

inline std::string surrogate_name(SurrogateKind k) {
  return k == SurrogateKind::kRbf ? "rbf" : "mlp";
}

inline SurrogateKind parse_surrogate(const std::string& s) {
  if (s == "rbf") return SurrogateKind::kRbf;
  if (s == "mlp") return SurrogateKind::kMlp;
  throw ConfigError("unknown surrogate '" + s + "' (expected rbf or mlp)");
}

inline std::string evaluator_name(EvaluatorKind k) {
  return k == EvaluatorKind::kSynthetic ? "synthetic" : "micronet";
}

inline EvaluatorKind parse_evaluator(const std::string& s) {
  if (s == "synthetic") return EvaluatorKind::kSynthetic;
  if (s == "micronet") return EvaluatorKind::kMicronet;
  throw ConfigError("unknown evaluator '" + s + "' (expected synthetic or micronet)");
}

}  // namespace detail

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["population_size"] = c.search.population_size;
  j["max_generations"] = c.search.max_generations;
  j["surrogate_update_interval"] = c.search.surrogate_interval;
  j["infill_count"] = c.search.infill_count;
  j["initial_samples"] = c.search.initial_samples;
  j["low_fidelity_fraction"] = c.search.low_fidelity_fraction;
  j["surrogate"] = detail::surrogate_name(c.search.surrogate);
  j["mode"] = detail::mode_name(c.search.mode);
  j["evaluator"] = detail::evaluator_name(c.evaluator);
  j["master_seed"] = c.search.master_seed;
  j["gates_seed"] = c.search.gates_seed;
  j["workers"] = c.search.workers;
  j["wall_clock_budget_s"] = c.search.wall_clock_budget_s;
  j["crossover_prob"] = c.search.evo.crossover_prob;
  j["mutation_prob"] = c.search.evo.mutation_prob;
  j["sbx_eta"] = c.search.evo.sbx_eta;
  j["pm_eta"] = c.search.evo.pm_eta;
  j["checkpoint"] = c.checkpoint;
  j["dataset_seed"] = c.dataset_seed;
  j["n_train"] = c.n_train;
  j["n_val"] = c.n_val;
  j["noise_amplitude"] = c.noise_amplitude;
  j["base_width"] = c.base_width;
  j["cells_per_block"] = c.cells_per_block;
  j["supernet_epochs"] = c.supernet_epochs;
  j["standalone_epochs"] = c.standalone_epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["attack_epsilon"] = c.attack_epsilon;
  j["attack_step"] = c.attack_step;
  j["attack_steps"] = c.attack_steps;
  j["grad_clip_norm"] = c.grad_clip_norm;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "population_size") c.search.population_size = value.get<int>();
      else if (key == "max_generations") c.search.max_generations = value.get<int>();
      else if (key == "surrogate_update_interval") c.search.surrogate_interval = value.get<int>();
      else if (key == "infill_count") c.search.infill_count = value.get<int>();
      else if (key == "initial_samples") c.search.initial_samples = value.get<int>();
      else if (key == "low_fidelity_fraction")
        c.search.low_fidelity_fraction = value.get<double>();
      else if (key == "surrogate")
        c.search.surrogate = detail::parse_surrogate(value.get<std::string>());
      else if (key == "mode") c.search.mode = detail::parse_mode(value.get<std::string>());
      else if (key == "evaluator")
        c.evaluator = detail::parse_evaluator(value.get<std::string>());
      else if (key == "master_seed") c.search.master_seed = value.get<std::uint64_t>();
      else if (key == "gates_seed") c.search.gates_seed = value.get<std::uint64_t>();
      else if (key == "workers") c.search.workers = value.get<int>();
      else if (key == "wall_clock_budget_s") c.search.wall_clock_budget_s = value.get<double>();
      else if (key == "crossover_prob") c.search.evo.crossover_prob = value.get<double>();
      else if (key == "mutation_prob") c.search.evo.mutation_prob = value.get<double>();
      else if (key == "sbx_eta") c.search.evo.sbx_eta = value.get<double>();
      else if (key == "pm_eta") c.search.evo.pm_eta = value.get<double>();
      else if (key == "checkpoint") c.checkpoint = value.get<std::string>();
      else if (key == "dataset_seed") c.dataset_seed = value.get<std::uint64_t>();
      else if (key == "n_train") c.n_train = value.get<int>();
      else if (key == "n_val") c.n_val = value.get<int>();
      else if (key == "noise_amplitude") c.noise_amplitude = value.get<double>();
      else if (key == "base_width") c.base_width = value.get<int>();
      else if (key == "cells_per_block") c.cells_per_block = value.get<int>();
      else if (key == "supernet_epochs") c.supernet_epochs = value.get<int>();
      else if (key == "standalone_epochs") c.standalone_epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "attack_epsilon") c.attack_epsilon = value.get<double>();
      else if (key == "attack_step") c.attack_step = value.get<double>();
      else if (key == "attack_steps") c.attack_steps = value.get<int>();
      else if (key == "grad_clip_norm") c.grad_clip_norm = value.get<double>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  return config_from_json(j);
}

}  // namespace bfnas
