#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bfnas/evo.hpp"
#include "bfnas/gates.hpp"
#include "bfnas/genome.hpp"
#include "bfnas/hypervolume.hpp"
#include "bfnas/micronet/train.hpp"
#include "bfnas/parallel.hpp"
#include "bfnas/rng.hpp"
#include "bfnas/surrogate.hpp"

namespace bfnas {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EvaluatorUnavailableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SearchMode { kSH, kH, kL, kS };
enum class SurrogateKind { kRbf, kMlp };

struct SearchConfig {
  int population_size = 100;    // n
  int max_generations = 100;    // T
  int surrogate_interval = 20;  // G
  int infill_count = 10;        // k
  int initial_samples = 200;    // m, Latin hypercube
  double low_fidelity_fraction = 0.2;
  SurrogateKind surrogate = SurrogateKind::kRbf;
  SearchMode mode = SearchMode::kSH;
  std::uint64_t master_seed = 1;
  std::uint64_t gates_seed = 42;
  int workers = 1;
  double wall_clock_budget_s = 0.0;  // 0 disables the budget
  EvoParams evo;
  bool validate_archive = false;  // per-generation invariant checks (tests)

  void validate() const {
    if (population_size < 4 || population_size % 2 != 0)
      throw ConfigError("population_size must be even and >= 4");
    if (max_generations < 1 || surrogate_interval < 1)
      throw ConfigError("max_generations and surrogate_update_interval must be >= 1");
    if (max_generations % surrogate_interval != 0)
      throw ConfigError("max_generations must be a multiple of surrogate_update_interval");
    if (infill_count < 1 || infill_count >= population_size)
      throw ConfigError("infill_count must satisfy 1 <= k < population_size");
    if (initial_samples < 2) throw ConfigError("initial_samples must be >= 2");
    if (!(low_fidelity_fraction > 0.0 && low_fidelity_fraction <= 1.0))
      throw ConfigError("low_fidelity_fraction must be in (0, 1]");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (evo.crossover_prob < 0.0 || evo.crossover_prob > 1.0 || evo.mutation_prob < 0.0 ||
        evo.mutation_prob > 1.0)
      throw ConfigError("probabilities must be in [0, 1]");
    if (evo.sbx_eta <= 0.0 || evo.pm_eta <= 0.0) throw ConfigError("distribution indices must be > 0");
  }
};

// Clean/adversarial error-rate pairs at two fidelities. Implementations must
// be deterministic per genome and safe for concurrent calls.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::pair<double, double> evaluate_low(const Genome& g) const = 0;
  virtual std::pair<double, double> evaluate_high(const Genome& g) const = 0;
};

// Closed-form objectives for exact verification of the search machinery.
// Favoring convolution density for clean error and path depth for robustness
// gives a non-trivial trade-off surface over the genome space.
inline std::pair<double, double> synthetic_objectives(const Genome& g, bool high_fidelity,
                                                      std::uint64_t noise_seed) {
  int conv_genes = 0;
  for (std::uint8_t v : g.genes())
    if (v >= 2) ++conv_genes;
  double p_conv = static_cast<double>(conv_genes) / kGeneCount;
  CellArchitecture cell = decode(g);
  double depth = 0.0;
  for (const auto& block : cell.blocks) depth += block.longest_active_path() / 4.0;
  depth /= kBlockCount;

  double f1 = std::clamp(0.1 + 0.4 * (1.0 - p_conv) + 0.2 * depth, 0.05, 0.95);
  double f2 = std::clamp(0.2 + 0.4 * (1.0 - depth) + 0.2 * p_conv, 0.05, 0.95);
  if (!high_fidelity) {
    auto noise = [&](std::uint64_t i) {
      std::uint64_t h = mix_seed({noise_seed, genome_hash(g), i});
      return (static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0) * 0.05;
    };
    f1 = std::clamp(f1 + noise(1), 0.0, 1.0);
    f2 = std::clamp(f2 + noise(2), 0.0, 1.0);
  }
  return {f1, f2};
}

class SyntheticEvaluator final : public Evaluator {
 public:
  explicit SyntheticEvaluator(std::uint64_t noise_seed) : noise_seed_(noise_seed) {}
  std::pair<double, double> evaluate_low(const Genome& g) const override {
    return synthetic_objectives(g, false, noise_seed_);
  }
  std::pair<double, double> evaluate_high(const Genome& g) const override {
    return synthetic_objectives(g, true, noise_seed_);
  }

 private:
  std::uint64_t noise_seed_;
};

// Error rates of the genome's subnet under shared supernet weights, FGSM
// proxy attack; low fidelity on a fixed partial validation subsample, high
// fidelity on the full validation split.
class MicronetEvaluator final : public Evaluator {
 public:
  MicronetEvaluator(const micronet::Supernet& net, const micronet::SynthDataset& data,
                    double low_fraction, double epsilon, std::uint64_t seed)
      : net_(&net), data_(&data), low_fraction_(low_fraction),
        attack_(micronet::AttackSpec::fgsm(epsilon)),
        low_seed_(mix_seed({seed, seed_tag("eval-low")})),
        high_seed_(mix_seed({seed, seed_tag("eval-high")})) {}

  std::pair<double, double> evaluate_low(const Genome& g) const override {
    micronet::SubnetView view(*net_, g);
    auto r = micronet::evaluate(view, data_->val_images, data_->val_labels, attack_,
                                low_fraction_, low_seed_);
    return {r.clean_error, r.adv_error};
  }
  std::pair<double, double> evaluate_high(const Genome& g) const override {
    micronet::SubnetView view(*net_, g);
    auto r =
        micronet::evaluate(view, data_->val_images, data_->val_labels, attack_, 1.0, high_seed_);
    return {r.clean_error, r.adv_error};
  }

 private:
  const micronet::Supernet* net_;
  const micronet::SynthDataset* data_;
  double low_fraction_;
  micronet::AttackSpec attack_;
  std::uint64_t low_seed_;
  std::uint64_t high_seed_;
};

struct EvaluationRecord {
  std::optional<double> f1l, f2l;
  std::optional<double> f1h, f2h;
  std::optional<double> f3;
  double timestamp = 0.0;  // unix seconds of the last fill; never serialized
};

struct ArchiveEntry {
  Genome genome;
  ObjectiveVector insertion_objectives;
  EvaluationRecord record;
  int generation = 0;
};

// Mutually non-dominated set of evaluated individuals, compared on the
// objective vectors they carried when inserted. Duplicate genomes keep the
// earlier record.
class Archive {
 public:
  bool insert(const Genome& g, const ObjectiveVector& objectives, const EvaluationRecord& record,
              int generation) {
    std::string key = g.to_string();
    if (keys_.contains(key)) return false;
    for (const auto& e : entries_)
      if (dominates(e.insertion_objectives, objectives)) return false;
    std::erase_if(entries_, [&](const ArchiveEntry& e) {
      if (!dominates(objectives, e.insertion_objectives)) return false;
      keys_.erase(e.genome.to_string());
      return true;
    });
    keys_.insert(std::move(key));
    entries_.push_back({g, objectives, record, generation});
    return true;
  }

  bool mutually_nondominated() const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      for (std::size_t j = 0; j < entries_.size(); ++j)
        if (i != j &&
            dominates(entries_[i].insertion_objectives, entries_[j].insertion_objectives))
          return false;
    return true;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<ArchiveEntry>& entries() const { return entries_; }

 private:
  std::vector<ArchiveEntry> entries_;
  std::unordered_set<std::string> keys_;
};

// Infill: ceil(k/2) most promising (smallest predicted score) plus
// floor(k/2) most uncertain (largest embedding distance to the nearest
// training-set member); genomes already in S are excluded, a shortfall is
// filled with the next-most-promising candidates. Ties break on population
// index.
inline std::vector<Genome> infill_select(const std::vector<Individual>& population,
                                         const TrainingSet& s, int k,
                                         const std::vector<ArchEmbedding>& embeddings,
                                         const std::vector<double>& predicted) {
  std::vector<int> candidates;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < population.size(); ++i) {
    std::string key = population[i].genome.to_string();
    if (seen.contains(key) || s.contains(population[i].genome)) continue;
    seen.insert(std::move(key));
    candidates.push_back(static_cast<int>(i));
  }
  if (candidates.empty()) return {};

  std::vector<int> by_promise = candidates;
  std::sort(by_promise.begin(), by_promise.end(), [&](int a, int b) {
    auto pa = predicted[static_cast<std::size_t>(a)];
    auto pb = predicted[static_cast<std::size_t>(b)];
    if (pa != pb) return pa < pb;
    return a < b;
  });

  const int want_promising = (k + 1) / 2;
  std::vector<int> chosen;
  std::unordered_set<int> chosen_set;
  for (int i = 0; i < static_cast<int>(by_promise.size()) && i < want_promising; ++i) {
    chosen.push_back(by_promise[static_cast<std::size_t>(i)]);
    chosen_set.insert(by_promise[static_cast<std::size_t>(i)]);
  }

  auto nearest_s_distance = [&](int idx) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : s.records()) {
      double d2 = 0.0;
      const auto& e = embeddings[static_cast<std::size_t>(idx)];
      for (std::size_t j = 0; j < e.size(); ++j) {
        double d = e[j] - rec.embedding[j];
        d2 += d * d;
      }
      best = std::min(best, d2);
    }
    return best;
  };

  std::vector<int> rest;
  for (int idx : candidates)
    if (!chosen_set.contains(idx)) rest.push_back(idx);
  std::vector<std::pair<double, int>> by_uncertainty;
  by_uncertainty.reserve(rest.size());
  for (int idx : rest) by_uncertainty.emplace_back(nearest_s_distance(idx), idx);
  std::sort(by_uncertainty.begin(), by_uncertainty.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const int want_uncertain = k / 2;
  for (int i = 0; i < static_cast<int>(by_uncertainty.size()) && i < want_uncertain; ++i) {
    chosen.push_back(by_uncertainty[static_cast<std::size_t>(i)].second);
    chosen_set.insert(by_uncertainty[static_cast<std::size_t>(i)].second);
  }
  for (int idx : by_promise) {
    if (static_cast<int>(chosen.size()) >= k) break;
    if (!chosen_set.contains(idx)) {
      chosen.push_back(idx);
      chosen_set.insert(idx);
    }
  }

  std::vector<Genome> out;
  out.reserve(chosen.size());
  for (int idx : chosen) out.push_back(population[static_cast<std::size_t>(idx)].genome);
  return out;
}

struct GenerationStat {
  int generation = 0;
  int archive_size = 0;
  double hv = 0.0;  // 2-D hypervolume of the error-rate front vs (1,1)
  double elapsed_ms = 0.0;
};

struct SearchResult {
  std::vector<ArchiveEntry> archive;
  std::vector<GenerationStat> history;
  TrainingSet training_set;
  int high_fidelity_evals = 0;
  int surrogate_fits = 0;
  bool budget_exhausted = false;
};

namespace detail {

struct CachedEval {
  ArchEmbedding embedding;
  bool has_embedding = false;
  double f1l = 0.0, f2l = 0.0;
  bool has_low = false;
  double f1h = 0.0, f2h = 0.0;
  bool has_high = false;
};

struct SearchState {
  const SearchConfig& cfg;
  const Evaluator& evaluator;
  GatesParams gates;
  std::unordered_map<std::string, CachedEval> cache;
  int high_fidelity_evals = 0;

  explicit SearchState(const SearchConfig& c, const Evaluator& e)
      : cfg(c), evaluator(e), gates(init_gates_params(c.gates_seed)) {}

  CachedEval& slot(const Genome& g) { return cache[g.to_string()]; }

  const ArchEmbedding& embedding(const Genome& g) {
    CachedEval& ce = slot(g);
    if (!ce.has_embedding) {
      ce.embedding = embed_genome(g, gates);
      ce.has_embedding = true;
    }
    return ce.embedding;
  }

  // Evaluates the genomes missing the requested fidelity, in parallel;
  // results land in per-genome slots so worker count cannot change them.
  void ensure(const std::vector<Genome>& genomes, bool high) {
    std::vector<const Genome*> missing;
    std::unordered_set<std::string> queued;
    for (const auto& g : genomes) {
      CachedEval& ce = slot(g);
      if (high ? ce.has_high : ce.has_low) continue;
      std::string key = g.to_string();
      if (queued.contains(key)) continue;
      queued.insert(std::move(key));
      missing.push_back(&g);
    }
    if (missing.empty()) return;
    std::vector<std::pair<double, double>> results(missing.size());
    parallel_for(static_cast<int>(missing.size()), cfg.workers, [&](int i) {
      const Genome& g = *missing[static_cast<std::size_t>(i)];
      results[static_cast<std::size_t>(i)] =
          high ? evaluator.evaluate_high(g) : evaluator.evaluate_low(g);
    });
    for (std::size_t i = 0; i < missing.size(); ++i) {
      CachedEval& ce = slot(*missing[i]);
      if (high) {
        ce.f1h = results[i].first;
        ce.f2h = results[i].second;
        ce.has_high = true;
        ++high_fidelity_evals;
      } else {
        ce.f1l = results[i].first;
        ce.f2l = results[i].second;
        ce.has_low = true;
      }
    }
  }

  EvaluationRecord record(const Genome& g, const std::optional<double>& f3) {
    const CachedEval& ce = slot(g);
    EvaluationRecord rec;
    if (ce.has_low) {
      rec.f1l = ce.f1l;
      rec.f2l = ce.f2l;
    }
    if (ce.has_high) {
      rec.f1h = ce.f1h;
      rec.f2h = ce.f2h;
    }
    rec.f3 = f3;
    rec.timestamp = std::chrono::duration<double>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    return rec;
  }
};

inline double seconds_between(std::chrono::steady_clock::time_point a,
                              std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace detail

// Bi-fidelity surrogate-assisted NSGA-II search. Mode SH optimizes
// (f1_low, f2_low, surrogate score); H and L drop the surrogate and run on
// the high- or low-fidelity error pair alone; S runs single-objective on the
// surrogate score. Surrogate modes start from m Latin-hypercube samples
// evaluated at high fidelity, refit every G generations, and infill k
// individuals per refit except after the last round.
inline SearchResult run_search(const SearchConfig& cfg, const Evaluator& evaluator) {
  cfg.validate();
  const bool use_surrogate = cfg.mode == SearchMode::kSH || cfg.mode == SearchMode::kS;
  const bool high_objectives = cfg.mode == SearchMode::kH;
  const auto t_start = std::chrono::steady_clock::now();

  detail::SearchState state(cfg, evaluator);
  EvoParams evo = cfg.evo;
  evo.population_size = cfg.population_size;

  SearchResult result;
  TrainingSet& training = result.training_set;
  SurrogateModel model;
  bool model_ready = false;

  if (use_surrogate) {
    RngStream lhs_rng(mix_seed({cfg.master_seed, seed_tag("lhs")}));
    std::vector<Genome> samples = lhs_sample(cfg.initial_samples, lhs_rng);
    state.ensure(samples, true);
    for (const auto& g : samples) {
      const auto& ce = state.slot(g);
      training.add(g, state.embedding(g), ce.f1h, ce.f2h);
    }
  }

  RngStream init_rng(mix_seed({cfg.master_seed, seed_tag("init-pop")}));
  std::vector<Individual> pop(static_cast<std::size_t>(cfg.population_size));
  std::vector<Genome> pop_genomes;
  for (auto& ind : pop) {
    ind.genome = random_genome(init_rng);
    pop_genomes.push_back(ind.genome);
  }
  // Ensures the high-fidelity pair in mode H, the low-fidelity pair in every
  // other mode (mode S still logs low-fidelity errors; selection ignores them).
  state.ensure(pop_genomes, high_objectives);

  auto predict_f3 = [&](const Genome& g) {
    return surrogate_predict(model, state.embedding(g));
  };
  auto assign_objectives = [&](Individual& ind) {
    const auto& ce = state.slot(ind.genome);
    switch (cfg.mode) {
      case SearchMode::kSH:
        ind.objectives = {ce.f1l, ce.f2l, model_ready ? predict_f3(ind.genome) : 0.0};
        break;
      case SearchMode::kH:
        ind.objectives = {ce.f1h, ce.f2h};
        break;
      case SearchMode::kL:
        ind.objectives = {ce.f1l, ce.f2l};
        break;
      case SearchMode::kS:
        ind.objectives = {model_ready ? predict_f3(ind.genome) : 0.0};
        break;
    }
    ind.meta.has_low = ce.has_low;
    ind.meta.has_high = ce.has_high;
    ind.meta.has_surrogate = use_surrogate && model_ready;
  };
  for (auto& ind : pop) assign_objectives(ind);

  auto error_pair = [&](const Individual& ind) -> ObjectiveVector {
    const auto& ce = state.slot(ind.genome);
    if (ce.has_low) return {ce.f1l, ce.f2l};
    return {ce.f1h, ce.f2h};
  };

  Archive archive;
  int gen = 0;
  const int rounds = cfg.max_generations / cfg.surrogate_interval;
  bool out_of_budget = false;
  auto budget_hit = [&] {
    return cfg.wall_clock_budget_s > 0.0 &&
           detail::seconds_between(t_start, std::chrono::steady_clock::now()) >
               cfg.wall_clock_budget_s;
  };

  for (int round = 0; round < rounds && !out_of_budget; ++round) {
    if (use_surrogate) {
      std::uint64_t fit_seed =
          mix_seed({cfg.master_seed, seed_tag("fit"), static_cast<std::uint64_t>(round)});
      model = cfg.surrogate == SurrogateKind::kRbf
                  ? SurrogateModel(fit_rbf(training, fit_seed))
                  : SurrogateModel(fit_mlp(training, fit_seed));
      model_ready = true;
      ++result.surrogate_fits;
      for (auto& ind : pop) assign_objectives(ind);  // refit changes f3
    }

    for (int g = 0; g < cfg.surrogate_interval && !out_of_budget; ++g) {
      const auto gen_start = std::chrono::steady_clock::now();
      RngStream var_rng(
          mix_seed({cfg.master_seed, seed_tag("variation"), static_cast<std::uint64_t>(gen)}));

      if (cfg.mode != SearchMode::kS) assign_ranks_and_crowding(pop);
      auto pick_parent = [&]() -> const Genome& {
        if (cfg.mode == SearchMode::kS) {
          int i = var_rng.uniform_int(cfg.population_size);
          int j = var_rng.uniform_int(cfg.population_size);
          const auto& a = pop[static_cast<std::size_t>(i)];
          const auto& b = pop[static_cast<std::size_t>(j)];
          bool a_wins = a.objectives[0] != b.objectives[0] ? a.objectives[0] < b.objectives[0]
                                                           : i <= j;
          return (a_wins ? a : b).genome;
        }
        return pop[static_cast<std::size_t>(binary_tournament(pop, var_rng))].genome;
      };

      std::vector<Individual> offspring;
      offspring.reserve(static_cast<std::size_t>(cfg.population_size));
      while (static_cast<int>(offspring.size()) < cfg.population_size) {
        const Genome& p1 = pick_parent();
        const Genome& p2 = pick_parent();
        auto [c1, c2] = sbx_crossover(p1, p2, evo, var_rng);
        Individual o1, o2;
        o1.genome = polynomial_mutation(c1, evo, var_rng);
        o2.genome = polynomial_mutation(c2, evo, var_rng);
        o1.meta.generation = gen;
        o2.meta.generation = gen;
        offspring.push_back(std::move(o1));
        offspring.push_back(std::move(o2));
      }

      std::vector<Genome> off_genomes;
      off_genomes.reserve(offspring.size());
      for (const auto& o : offspring) off_genomes.push_back(o.genome);
      state.ensure(off_genomes, high_objectives);
      for (auto& o : offspring) assign_objectives(o);

      // Archive update: global first front of parents ∪ offspring under the
      // mode's objectives.
      std::vector<ObjectiveVector> union_objs;
      union_objs.reserve(pop.size() + offspring.size());
      for (const auto& ind : pop) union_objs.push_back(ind.objectives);
      for (const auto& ind : offspring) union_objs.push_back(ind.objectives);
      auto fronts = fast_nondominated_sort(std::span<const ObjectiveVector>(union_objs));
      for (int idx : fronts.front()) {
        const Individual& ind = idx < cfg.population_size
                                    ? pop[static_cast<std::size_t>(idx)]
                                    : offspring[static_cast<std::size_t>(idx - cfg.population_size)];
        std::optional<double> f3;
        if (use_surrogate && model_ready) f3 = ind.objectives.back();
        archive.insert(ind.genome, ind.objectives, state.record(ind.genome, f3), gen);
      }
      if (cfg.validate_archive && !archive.mutually_nondominated())
        throw std::logic_error("archive invariant violated");

      if (cfg.mode == SearchMode::kS) {
        std::vector<Individual> pool = pop;
        pool.insert(pool.end(), offspring.begin(), offspring.end());
        std::vector<int> order(pool.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
          return pool[static_cast<std::size_t>(a)].objectives[0] <
                 pool[static_cast<std::size_t>(b)].objectives[0];
        });
        std::vector<Individual> next;
        next.reserve(static_cast<std::size_t>(cfg.population_size));
        for (int i = 0; i < cfg.population_size; ++i)
          next.push_back(pool[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        pop = std::move(next);
      } else {
        pop = next_generation(pop, offspring, evo);
      }
      ++gen;

      std::vector<ObjectiveVector> pairs;
      pairs.reserve(pop.size());
      for (const auto& ind : pop) pairs.push_back(error_pair(ind));
      auto pair_fronts = fast_nondominated_sort(std::span<const ObjectiveVector>(pairs));
      std::vector<ObjectiveVector> front_pairs;
      for (int idx : pair_fronts.front()) front_pairs.push_back(pairs[static_cast<std::size_t>(idx)]);
      double hv = hypervolume(front_pairs, {1.0, 1.0});

      result.history.push_back(
          {gen, static_cast<int>(archive.size()), hv,
           detail::seconds_between(gen_start, std::chrono::steady_clock::now()) * 1000.0});
      out_of_budget = budget_hit();
    }

    if (use_surrogate && round != rounds - 1 && !out_of_budget) {
      std::vector<ArchEmbedding> embeddings;
      std::vector<double> predicted;
      embeddings.reserve(pop.size());
      predicted.reserve(pop.size());
      for (const auto& ind : pop) {
        embeddings.push_back(state.embedding(ind.genome));
        predicted.push_back(cfg.mode == SearchMode::kS ? ind.objectives[0]
                                                       : ind.objectives.back());
      }
      std::vector<Genome> infill =
          infill_select(pop, training, cfg.infill_count, embeddings, predicted);
      state.ensure(infill, true);
      for (const auto& g : infill) {
        const auto& ce = state.slot(g);
        training.add(g, state.embedding(g), ce.f1h, ce.f2h);
      }
    }
  }

  result.archive = archive.entries();
  result.high_fidelity_evals = state.high_fidelity_evals;
  result.budget_exhausted = out_of_budget;
  return result;
}

// Re-evaluates every archive member at high fidelity and keeps the subset
// that is non-dominated under (f1_high, f2_high); kept records carry both
// fidelities.
inline std::vector<ArchiveEntry> secondary_screening(const std::vector<ArchiveEntry>& archive,
                                                     const Evaluator& evaluator, int workers = 1) {
  std::vector<ArchiveEntry> screened = archive;
  std::vector<std::pair<double, double>> high(screened.size());
  parallel_for(static_cast<int>(screened.size()), workers, [&](int i) {
    const auto& e = screened[static_cast<std::size_t>(i)];
    if (e.record.f1h.has_value() && e.record.f2h.has_value())
      high[static_cast<std::size_t>(i)] = {*e.record.f1h, *e.record.f2h};
    else
      high[static_cast<std::size_t>(i)] = evaluator.evaluate_high(e.genome);
  });
  std::vector<ObjectiveVector> objs;
  objs.reserve(screened.size());
  for (std::size_t i = 0; i < screened.size(); ++i) {
    screened[i].record.f1h = high[i].first;
    screened[i].record.f2h = high[i].second;
    objs.push_back({high[i].first, high[i].second});
  }
  std::vector<ArchiveEntry> out;
  for (std::size_t i = 0; i < screened.size(); ++i) {
    bool kept = true;
    for (std::size_t j = 0; j < screened.size() && kept; ++j)
      if (j != i && dominates(objs[j], objs[i])) kept = false;
    if (kept) out.push_back(screened[i]);
  }
  return out;
}

}  // namespace bfnas
