#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bfnas/genome.hpp"
#include "bfnas/rng.hpp"

namespace bfnas {

// Objectives are always minimized.
using ObjectiveVector = std::vector<double>;

struct LengthMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ArityMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EvalMeta {
  bool has_low = false;
  bool has_high = false;
  bool has_surrogate = false;
  int generation = 0;
};

struct Individual {
  Genome genome;
  ObjectiveVector objectives;
  std::optional<int> rank;
  std::optional<double> crowding;
  EvalMeta meta;
};

struct EvoParams {
  int population_size = 100;
  double crossover_prob = 0.9;
  double mutation_prob = 0.02;  // per gene
  double sbx_eta = 15.0;
  double pm_eta = 20.0;
  double gene_low = 0.0;
  double gene_high = 3.0;
};

// Pareto dominance: a <= b componentwise and a < b somewhere.
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size())
    throw LengthMismatchError("objective vectors of length " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly_better = true;
  }
  return strictly_better;
}

// Deb's fast non-dominated sort. Fronts partition [0, N); front 0 has no
// dominator in the population, front i none in the population minus fronts
// < i. Indices within a front keep ascending order.
inline std::vector<std::vector<int>> fast_nondominated_sort(
    std::span<const ObjectiveVector> objectives) {
  const int n = static_cast<int>(objectives.size());
  std::vector<std::vector<int>> dominated_by(static_cast<std::size_t>(n));
  std::vector<int> dom_count(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> fronts;

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dominates(objectives[static_cast<std::size_t>(i)],
                    objectives[static_cast<std::size_t>(j)])) {
        dominated_by[static_cast<std::size_t>(i)].push_back(j);
        ++dom_count[static_cast<std::size_t>(j)];
      } else if (dominates(objectives[static_cast<std::size_t>(j)],
                           objectives[static_cast<std::size_t>(i)])) {
        dominated_by[static_cast<std::size_t>(j)].push_back(i);
        ++dom_count[static_cast<std::size_t>(i)];
      }
    }
  }
  std::vector<int> current;
  for (int i = 0; i < n; ++i)
    if (dom_count[static_cast<std::size_t>(i)] == 0) current.push_back(i);

  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int i : current) {
      for (int j : dominated_by[static_cast<std::size_t>(i)]) {
        if (--dom_count[static_cast<std::size_t>(j)] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

inline std::vector<std::vector<int>> fast_nondominated_sort(std::vector<Individual>& pop) {
  std::vector<ObjectiveVector> objs;
  objs.reserve(pop.size());
  for (const auto& ind : pop) objs.push_back(ind.objectives);
  auto fronts = fast_nondominated_sort(std::span<const ObjectiveVector>(objs));
  for (std::size_t r = 0; r < fronts.size(); ++r)
    for (int i : fronts[r]) pop[static_cast<std::size_t>(i)].rank = static_cast<int>(r);
  return fronts;
}

// Crowding distance of one front. Boundary individuals per objective get
// +infinity; interior ones sum normalized neighbor gaps. A zero-range
// objective still marks its (stable-order) extremes as boundary but adds no
// interior distance.
inline std::vector<double> crowding_distance(std::span<const ObjectiveVector> front) {
  const int n = static_cast<int>(front.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  if (n == 0) return dist;
  const std::size_t m = front[0].size();
  for (std::size_t obj = 0; obj < m; ++obj) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return front[static_cast<std::size_t>(a)][obj] < front[static_cast<std::size_t>(b)][obj];
    });
    dist[static_cast<std::size_t>(order.front())] = inf;
    dist[static_cast<std::size_t>(order.back())] = inf;
    double range = front[static_cast<std::size_t>(order.back())][obj] -
                   front[static_cast<std::size_t>(order.front())][obj];
    if (range <= 0.0) continue;
    for (int i = 1; i + 1 < n; ++i) {
      auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
      if (dist[idx] == inf) continue;
      dist[idx] += (front[static_cast<std::size_t>(order[static_cast<std::size_t>(i + 1)])][obj] -
                    front[static_cast<std::size_t>(order[static_cast<std::size_t>(i - 1)])][obj]) /
                   range;
    }
  }
  return dist;
}

// Writes rank and crowding into pop; returns the fronts.
inline std::vector<std::vector<int>> assign_ranks_and_crowding(std::vector<Individual>& pop) {
  auto fronts = fast_nondominated_sort(pop);
  for (const auto& front : fronts) {
    std::vector<ObjectiveVector> objs;
    objs.reserve(front.size());
    for (int i : front) objs.push_back(pop[static_cast<std::size_t>(i)].objectives);
    auto dist = crowding_distance(std::span<const ObjectiveVector>(objs));
    for (std::size_t k = 0; k < front.size(); ++k)
      pop[static_cast<std::size_t>(front[k])].crowding = dist[k];
  }
  return fronts;
}

// Simulated binary crossover on the real relaxation [gene_low, gene_high],
// rounded to the nearest integer and clamped. With probability
// 1 - crossover_prob the parents are copied unchanged.
inline std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2,
                                               const EvoParams& params, RngStream& rng) {
  std::array<double, kGeneCount> c1{};
  std::array<double, kGeneCount> c2{};
  for (int i = 0; i < kGeneCount; ++i) {
    c1[static_cast<std::size_t>(i)] = p1.gene(i);
    c2[static_cast<std::size_t>(i)] = p2.gene(i);
  }
  if (rng.uniform() < params.crossover_prob) {
    const double yl = params.gene_low;
    const double yu = params.gene_high;
    const double eta = params.sbx_eta;
    for (int i = 0; i < kGeneCount; ++i) {
      if (rng.uniform() > 0.5) continue;
      double y1 = std::min<double>(p1.gene(i), p2.gene(i));
      double y2 = std::max<double>(p1.gene(i), p2.gene(i));
      if (y2 - y1 < 1e-12) continue;
      double u = rng.uniform();
      auto spread = [&](double beta) {
        double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        if (u <= 1.0 / alpha) return std::pow(u * alpha, 1.0 / (eta + 1.0));
        return std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
      };
      double betaq1 = spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
      double betaq2 = spread(1.0 + 2.0 * (yu - y2) / (y2 - y1));
      double ch1 = 0.5 * ((y1 + y2) - betaq1 * (y2 - y1));
      double ch2 = 0.5 * ((y1 + y2) + betaq2 * (y2 - y1));
      ch1 = std::clamp(ch1, yl, yu);
      ch2 = std::clamp(ch2, yl, yu);
      if (rng.uniform() <= 0.5) std::swap(ch1, ch2);
      c1[static_cast<std::size_t>(i)] = ch1;
      c2[static_cast<std::size_t>(i)] = ch2;
    }
  }
  auto to_genome = [&](const std::array<double, kGeneCount>& vals) {
    std::array<std::uint8_t, kGeneCount> genes;
    for (int i = 0; i < kGeneCount; ++i) {
      double r = std::clamp(std::round(vals[static_cast<std::size_t>(i)]), params.gene_low,
                            params.gene_high);
      genes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(r);
    }
    return Genome::from_genes(genes);
  };
  return {to_genome(c1), to_genome(c2)};
}

struct MutationStats {
  int drawn = 0;    // genes selected for mutation
  int changed = 0;  // genes whose rounded value differs from the input
};

// Polynomial mutation on the real relaxation, per gene with probability
// mutation_prob, rounded and clamped.
inline Genome polynomial_mutation(const Genome& g, const EvoParams& params, RngStream& rng,
                                  MutationStats* stats = nullptr) {
  std::array<std::uint8_t, kGeneCount> genes = g.genes();
  const double yl = params.gene_low;
  const double yu = params.gene_high;
  const double eta = params.pm_eta;
  for (int i = 0; i < kGeneCount; ++i) {
    if (rng.uniform() >= params.mutation_prob) continue;
    if (stats != nullptr) ++stats->drawn;
    double y = genes[static_cast<std::size_t>(i)];
    double delta1 = (y - yl) / (yu - yl);
    double delta2 = (yu - y) / (yu - yl);
    double u = rng.uniform();
    double mut_pow = 1.0 / (eta + 1.0);
    double deltaq;
    if (u <= 0.5) {
      double xy = 1.0 - delta1;
      double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
      deltaq = std::pow(val, mut_pow) - 1.0;
    } else {
      double xy = 1.0 - delta2;
      double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
      deltaq = 1.0 - std::pow(val, mut_pow);
    }
    y = std::clamp(y + deltaq * (yu - yl), yl, yu);
    auto rounded = static_cast<std::uint8_t>(std::clamp(std::round(y), yl, yu));
    if (rounded != genes[static_cast<std::size_t>(i)]) {
      genes[static_cast<std::size_t>(i)] = rounded;
      if (stats != nullptr) ++stats->changed;
    }
  }
  return Genome::from_genes(genes);
}

// Latin hypercube sample of m genomes: per dimension one draw in each of m
// equal strata of [0,1), randomly permuted, then mapped to genes via
// floor(u*4) clamped to 3.
inline std::vector<Genome> lhs_sample(int m, RngStream& rng) {
  if (m < 1) throw std::invalid_argument("lhs_sample: m must be >= 1");
  std::vector<std::array<std::uint8_t, kGeneCount>> genes(static_cast<std::size_t>(m));
  std::vector<int> strata(static_cast<std::size_t>(m));
  for (int d = 0; d < kGeneCount; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    rng.shuffle(strata);
    for (int j = 0; j < m; ++j) {
      double u = (strata[static_cast<std::size_t>(j)] + rng.uniform()) / m;
      int v = std::min(kOperationCount - 1, static_cast<int>(u * kOperationCount));
      genes[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)] =
          static_cast<std::uint8_t>(v);
    }
  }
  std::vector<Genome> out;
  out.reserve(static_cast<std::size_t>(m));
  for (const auto& arr : genes) out.push_back(Genome::from_genes(arr));
  return out;
}

// (rank asc, crowding desc, index asc); requires rank/crowding assigned.
inline bool tournament_less(const Individual& a, const Individual& b, int ia, int ib) {
  int ra = a.rank.value_or(0);
  int rb = b.rank.value_or(0);
  if (ra != rb) return ra < rb;
  double ca = a.crowding.value_or(0.0);
  double cb = b.crowding.value_or(0.0);
  if (ca != cb) return ca > cb;
  return ia < ib;
}

inline int binary_tournament(const std::vector<Individual>& pop, RngStream& rng) {
  int i = rng.uniform_int(static_cast<int>(pop.size()));
  int j = rng.uniform_int(static_cast<int>(pop.size()));
  return tournament_less(pop[static_cast<std::size_t>(i)], pop[static_cast<std::size_t>(j)], i, j)
             ? i
             : j;
}

// NSGA-II environmental selection over parents ∪ offspring: fill by fronts,
// truncate the last front by descending crowding distance (ties: lower
// original index first). Output size is params.population_size.
inline std::vector<Individual> next_generation(const std::vector<Individual>& parents,
                                               const std::vector<Individual>& offspring,
                                               const EvoParams& params) {
  std::vector<Individual> pool;
  pool.reserve(parents.size() + offspring.size());
  pool.insert(pool.end(), parents.begin(), parents.end());
  pool.insert(pool.end(), offspring.begin(), offspring.end());
  if (pool.empty()) throw std::invalid_argument("next_generation: empty pool");
  const std::size_t arity = pool.front().objectives.size();
  for (const auto& ind : pool)
    if (ind.objectives.size() != arity)
      throw ArityMismatchError("individuals with mixed objective arity");
  const auto n = static_cast<std::size_t>(params.population_size);
  if (pool.size() < n) throw std::invalid_argument("next_generation: pool smaller than n");

  auto fronts = assign_ranks_and_crowding(pool);
  std::vector<Individual> out;
  out.reserve(n);
  for (const auto& front : fronts) {
    if (out.size() + front.size() <= n) {
      for (int i : front) out.push_back(pool[static_cast<std::size_t>(i)]);
    } else {
      std::vector<int> order(front.begin(), front.end());
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        double ca = pool[static_cast<std::size_t>(a)].crowding.value_or(0.0);
        double cb = pool[static_cast<std::size_t>(b)].crowding.value_or(0.0);
        if (ca != cb) return ca > cb;
        return a < b;
      });
      for (int i : order) {
        if (out.size() == n) break;
        out.push_back(pool[static_cast<std::size_t>(i)]);
      }
    }
    if (out.size() == n) break;
  }
  return out;
}

}  // namespace bfnas
