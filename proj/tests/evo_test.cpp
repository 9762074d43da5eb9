#include "bfnas/evo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "testutil.hpp"

using namespace bfnas;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Dominates, BasicCases) {
  EXPECT_TRUE(dominates({0.1, 0.2, 0.3}, {0.2, 0.3, 0.4}));
  EXPECT_FALSE(dominates({0.1, 0.2}, {0.1, 0.2}));
  EXPECT_FALSE(dominates({0.1, 0.9}, {0.9, 0.1}));
  EXPECT_FALSE(dominates({0.9, 0.1}, {0.1, 0.9}));
  EXPECT_TRUE(dominates({0.1, 0.2}, {0.1, 0.3}));
  EXPECT_THROW(dominates({0.1}, {0.1, 0.2}), LengthMismatchError);
}

TEST(FastNondominatedSort, SmallExample) {
  std::vector<ObjectiveVector> objs = {{0, 1}, {1, 0}, {1, 1}};
  auto fronts = fast_nondominated_sort(std::span<const ObjectiveVector>(objs));
  ASSERT_EQ(fronts.size(), 2u);
  EXPECT_EQ(fronts[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(fronts[1], (std::vector<int>{2}));
}

TEST(FastNondominatedSort, IdenticalObjectivesSingleFront) {
  std::vector<ObjectiveVector> objs(17, ObjectiveVector{0.5, 0.5, 0.5});
  auto fronts = fast_nondominated_sort(std::span<const ObjectiveVector>(objs));
  ASSERT_EQ(fronts.size(), 1u);
  EXPECT_EQ(fronts[0].size(), 17u);
}

TEST(FastNondominatedSort, MatchesBruteForce) {
  RngStream rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + rng.uniform_int(63);
    int m = 2 + rng.uniform_int(2);
    std::vector<ObjectiveVector> objs;
    for (int i = 0; i < n; ++i) {
      auto v = testutil::random_objectives(rng, m);
      // Quantize some coordinates to force ties.
      if (rng.uniform() < 0.3)
        for (auto& x : v) x = std::round(x * 4) / 4;
      objs.push_back(v);
    }
    auto fronts = fast_nondominated_sort(std::span<const ObjectiveVector>(objs));
    auto expected = testutil::brute_force_sort(objs);
    EXPECT_EQ(fronts, expected) << "trial " << trial;
  }
}

TEST(CrowdingDistance, SmallFrontsAllInfinite) {
  std::vector<ObjectiveVector> f1 = {{0.3, 0.7}};
  auto d1 = crowding_distance(std::span<const ObjectiveVector>(f1));
  EXPECT_EQ(d1[0], kInf);
  std::vector<ObjectiveVector> f2 = {{0.3, 0.7}, {0.7, 0.3}};
  auto d2 = crowding_distance(std::span<const ObjectiveVector>(f2));
  EXPECT_EQ(d2[0], kInf);
  EXPECT_EQ(d2[1], kInf);
}

TEST(CrowdingDistance, HandComputedMiddlePoint) {
  std::vector<ObjectiveVector> front = {{0.0, 1.0}, {0.5, 0.5}, {1.0, 0.0}};
  auto d = crowding_distance(std::span<const ObjectiveVector>(front));
  EXPECT_EQ(d[0], kInf);
  EXPECT_DOUBLE_EQ(d[1], 2.0);
  EXPECT_EQ(d[2], kInf);
}

TEST(CrowdingDistance, DegenerateIdenticalFront) {
  std::vector<ObjectiveVector> front(5, ObjectiveVector{0.4, 0.4});
  auto d = crowding_distance(std::span<const ObjectiveVector>(front));
  EXPECT_EQ(d[0], kInf);   // stable-order boundary
  EXPECT_EQ(d[4], kInf);
  EXPECT_EQ(d[1], 0.0);
  EXPECT_EQ(d[2], 0.0);
  EXPECT_EQ(d[3], 0.0);
}

TEST(CrowdingDistance, MatchesBruteForce) {
  RngStream rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 1 + rng.uniform_int(20);
    int m = 2 + rng.uniform_int(2);
    std::vector<ObjectiveVector> front;
    for (int i = 0; i < n; ++i) front.push_back(testutil::random_objectives(rng, m));
    auto got = crowding_distance(std::span<const ObjectiveVector>(front));
    auto expected = testutil::brute_force_crowding(front);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (std::isinf(expected[i]))
        EXPECT_EQ(got[i], expected[i]);
      else
        EXPECT_NEAR(got[i], expected[i], 1e-12);
    }
  }
}

TEST(SbxCrossover, IdenticalParentsAreIdentity) {
  RngStream rng(31);
  EvoParams params;
  for (int trial = 0; trial < 200; ++trial) {
    Genome p = random_genome(rng);
    auto [c1, c2] = sbx_crossover(p, p, params, rng);
    EXPECT_EQ(c1, p);
    EXPECT_EQ(c2, p);
  }
}

TEST(SbxCrossover, ClosedOverGeneSpaceAndDeterministic) {
  EvoParams params;
  RngStream rng(32);
  for (int trial = 0; trial < 5000; ++trial) {
    Genome p1 = random_genome(rng);
    Genome p2 = random_genome(rng);
    auto [c1, c2] = sbx_crossover(p1, p2, params, rng);
    for (int i = 0; i < kGeneCount; ++i) {
      EXPECT_LE(c1.gene(i), 3);
      EXPECT_LE(c2.gene(i), 3);
    }
  }
  RngStream a(33), b(33);
  Genome p1 = random_genome(a);
  Genome p2 = random_genome(a);
  Genome q1 = random_genome(b);
  Genome q2 = random_genome(b);
  auto r1 = sbx_crossover(p1, p2, EvoParams{}, a);
  auto r2 = sbx_crossover(q1, q2, EvoParams{}, b);
  EXPECT_EQ(r1.first, r2.first);
  EXPECT_EQ(r1.second, r2.second);
}

TEST(PolynomialMutation, ZeroProbabilityIsIdentity) {
  EvoParams params;
  params.mutation_prob = 0.0;
  RngStream rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    Genome g = random_genome(rng);
    EXPECT_EQ(polynomial_mutation(g, params, rng), g);
  }
}

TEST(PolynomialMutation, FullProbabilityStaysInRange) {
  EvoParams params;
  params.mutation_prob = 1.0;
  params.pm_eta = 100.0;
  RngStream rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    Genome g = polynomial_mutation(random_genome(rng), params, rng);
    for (int i = 0; i < kGeneCount; ++i) EXPECT_LE(g.gene(i), 3);
  }
}

TEST(PolynomialMutation, ExpectedDrawCountMatchesRate) {
  EvoParams params;  // mutation_prob 0.02, 56 genes -> 1.12 expected draws
  RngStream rng(43);
  long long drawn = 0, changed = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    MutationStats stats;
    Genome g = random_genome(rng);
    polynomial_mutation(g, params, rng, &stats);
    drawn += stats.drawn;
    changed += stats.changed;
  }
  double mean_drawn = static_cast<double>(drawn) / trials;
  EXPECT_NEAR(mean_drawn, 1.12, 0.1);
  EXPECT_LE(changed, drawn);
}

TEST(LhsSample, FourSamplesHitEveryStratumOncePerDimension) {
  RngStream rng(51);
  auto genomes = lhs_sample(4, rng);
  ASSERT_EQ(genomes.size(), 4u);
  for (int d = 0; d < kGeneCount; ++d) {
    std::array<int, 4> counts{};
    for (const auto& g : genomes) ++counts[g.gene(d)];
    for (int v = 0; v < 4; ++v) EXPECT_EQ(counts[static_cast<std::size_t>(v)], 1)
        << "dim " << d << " value " << v;
  }
}

TEST(LhsSample, SingleSampleAndDeterminism) {
  RngStream rng(52);
  auto one = lhs_sample(1, rng);
  ASSERT_EQ(one.size(), 1u);
  RngStream a(53), b(53);
  auto ga = lhs_sample(7, a);
  auto gb = lhs_sample(7, b);
  EXPECT_EQ(ga.size(), gb.size());
  for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_EQ(ga[i], gb[i]);
}

std::vector<Individual> make_population(RngStream& rng, int n, int m) {
  std::vector<Individual> pop(static_cast<std::size_t>(n));
  for (auto& ind : pop) {
    ind.genome = random_genome(rng);
    ind.objectives = testutil::random_objectives(rng, m);
  }
  return pop;
}

// Independent NSGA-II survival: brute sort, fill fronts in index order,
// truncate the last one by (crowding desc, index asc).
std::vector<int> brute_force_survival(const std::vector<ObjectiveVector>& objs, int n) {
  auto fronts = testutil::brute_force_sort(objs);
  std::vector<int> picked;
  for (const auto& front : fronts) {
    if (static_cast<int>(picked.size() + front.size()) <= n) {
      picked.insert(picked.end(), front.begin(), front.end());
    } else {
      std::vector<ObjectiveVector> fo;
      for (int i : front) fo.push_back(objs[static_cast<std::size_t>(i)]);
      auto crowd = testutil::brute_force_crowding(fo);
      std::vector<int> order(front.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (crowd[static_cast<std::size_t>(a)] != crowd[static_cast<std::size_t>(b)])
          return crowd[static_cast<std::size_t>(a)] > crowd[static_cast<std::size_t>(b)];
        return front[static_cast<std::size_t>(a)] < front[static_cast<std::size_t>(b)];
      });
      for (int k : order) {
        if (static_cast<int>(picked.size()) == n) break;
        picked.push_back(front[static_cast<std::size_t>(k)]);
      }
    }
    if (static_cast<int>(picked.size()) == n) break;
  }
  return picked;
}

TEST(NextGeneration, ParentsSurviveWhenTheyDominate) {
  RngStream rng(61);
  EvoParams params;
  params.population_size = 8;
  auto parents = make_population(rng, 8, 2);
  auto offspring = make_population(rng, 8, 2);
  for (auto& p : parents) p.objectives = {0.0, 0.0};
  for (auto& o : offspring) o.objectives = {1.0, 1.0};
  auto next = next_generation(parents, offspring, params);
  ASSERT_EQ(next.size(), 8u);
  for (const auto& ind : next) EXPECT_EQ(ind.objectives, (ObjectiveVector{0.0, 0.0}));
}

TEST(NextGeneration, ExactNondominatedFrontIsTaken) {
  RngStream rng(62);
  EvoParams params;
  params.population_size = 4;
  // Union holds exactly 4 mutually non-dominated points plus dominated ones.
  std::vector<Individual> parents(4), offspring(4);
  std::vector<ObjectiveVector> front = {{0.0, 0.9}, {0.3, 0.6}, {0.6, 0.3}, {0.9, 0.0}};
  for (int i = 0; i < 4; ++i) {
    parents[static_cast<std::size_t>(i)].genome = random_genome(rng);
    parents[static_cast<std::size_t>(i)].objectives = front[static_cast<std::size_t>(i)];
    offspring[static_cast<std::size_t>(i)].genome = random_genome(rng);
    offspring[static_cast<std::size_t>(i)].objectives = {1.0, 1.0};
  }
  auto next = next_generation(parents, offspring, params);
  ASSERT_EQ(next.size(), 4u);
  for (int i = 0; i < 4; ++i)
    EXPECT_EQ(next[static_cast<std::size_t>(i)].objectives, front[static_cast<std::size_t>(i)]);
}

TEST(NextGeneration, MatchesBruteForceReimplementation) {
  RngStream rng(63);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 * (2 + rng.uniform_int(15));
    int m = 2 + rng.uniform_int(2);
    EvoParams params;
    params.population_size = n;
    auto parents = make_population(rng, n, m);
    auto offspring = make_population(rng, n, m);
    std::vector<ObjectiveVector> pool_objs;
    for (const auto& p : parents) pool_objs.push_back(p.objectives);
    for (const auto& o : offspring) pool_objs.push_back(o.objectives);

    auto got = next_generation(parents, offspring, params);
    auto expected = brute_force_survival(pool_objs, n);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      EXPECT_EQ(got[i].objectives, pool_objs[static_cast<std::size_t>(expected[i])])
          << "trial " << trial << " slot " << i;
  }
}

TEST(NextGeneration, RejectsMixedArity) {
  RngStream rng(64);
  EvoParams params;
  params.population_size = 4;
  auto parents = make_population(rng, 4, 2);
  auto offspring = make_population(rng, 4, 3);
  EXPECT_THROW(next_generation(parents, offspring, params), ArityMismatchError);
}

TEST(NextGeneration, NeverDropsFrontZeroWhileKeepingDominated) {
  RngStream rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 * (2 + rng.uniform_int(10));
    EvoParams params;
    params.population_size = n;
    auto parents = make_population(rng, n, 2);
    auto offspring = make_population(rng, n, 2);
    auto next = next_generation(parents, offspring, params);
    // No selected individual may be dominated by an unselected front-0 member.
    std::vector<ObjectiveVector> pool;
    for (const auto& p : parents) pool.push_back(p.objectives);
    for (const auto& o : offspring) pool.push_back(o.objectives);
    auto fronts = testutil::brute_force_sort(pool);
    std::size_t front0 = fronts[0].size();
    if (front0 <= static_cast<std::size_t>(n)) {
      // every front-0 objective vector must appear in the output
      for (int idx : fronts[0]) {
        bool found = false;
        for (const auto& ind : next)
          if (ind.objectives == pool[static_cast<std::size_t>(idx)]) {
            found = true;
            break;
          }
        EXPECT_TRUE(found);
      }
    }
  }
}

TEST(Tournament, PrefersRankThenCrowding) {
  std::vector<Individual> pop(2);
  pop[0].rank = 0;
  pop[0].crowding = 0.1;
  pop[1].rank = 1;
  pop[1].crowding = 5.0;
  EXPECT_TRUE(tournament_less(pop[0], pop[1], 0, 1));
  pop[1].rank = 0;
  EXPECT_FALSE(tournament_less(pop[0], pop[1], 0, 1));
}

}  // namespace
