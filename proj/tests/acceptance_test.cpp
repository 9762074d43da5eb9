// Acceptance suite: one test per criterion, each printing its own pass/fail
// line through the harness. Criteria with pinned tolerances and budgets
// assert them directly.

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bfnas/config.hpp"
#include "bfnas/micronet/train.hpp"
#include "bfnas/run_io.hpp"
#include "bfnas/search.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bfnas;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log =
      fs::temp_directory_path() / ("bfnas_acc_out_" + std::to_string(counter++));
  std::string cmd = std::string(BFNAS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Criterion 1: fast non-dominated sorting matches an O(M N^3) brute-force
// partition exactly on 200 random populations (N <= 64, M in {2,3}), < 10 s.
TEST(Acceptance, C01_SortingMatchesBruteForceOracle) {
  auto t0 = std::chrono::steady_clock::now();
  RngStream rng(9001);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + rng.uniform_int(63);
    int m = 2 + rng.uniform_int(2);
    std::vector<ObjectiveVector> objs;
    for (int i = 0; i < n; ++i) {
      auto v = testutil::random_objectives(rng, m);
      if (rng.uniform() < 0.25)
        for (auto& x : v) x = std::round(x * 8) / 8;  // force ties
      objs.push_back(v);
    }
    auto got = fast_nondominated_sort(std::span<const ObjectiveVector>(objs));
    auto expected = testutil::brute_force_sort(objs);
    ASSERT_EQ(got, expected) << "population " << trial;
  }
  EXPECT_LT(seconds_since(t0), 10.0);
}

// Criterion 2: variation closure over 10,000 SBX/PM applications; identity
// cases are exact.
TEST(Acceptance, C02_VariationClosureAndIdentities) {
  EvoParams params;
  RngStream rng(9002);
  for (int trial = 0; trial < 10000; ++trial) {
    Genome p1 = random_genome(rng);
    Genome p2 = random_genome(rng);
    auto [c1, c2] = sbx_crossover(p1, p2, params, rng);
    Genome m1 = polynomial_mutation(c1, params, rng);
    Genome m2 = polynomial_mutation(c2, params, rng);
    for (int i = 0; i < kGeneCount; ++i) {
      ASSERT_LE(c1.gene(i), 3);
      ASSERT_LE(c2.gene(i), 3);
      ASSERT_LE(m1.gene(i), 3);
      ASSERT_LE(m2.gene(i), 3);
    }
  }
  for (int trial = 0; trial < 500; ++trial) {
    Genome p = random_genome(rng);
    auto [c1, c2] = sbx_crossover(p, p, params, rng);
    ASSERT_EQ(c1, p);
    ASSERT_EQ(c2, p);
    EvoParams frozen = params;
    frozen.mutation_prob = 0.0;
    ASSERT_EQ(polynomial_mutation(p, frozen, rng), p);
  }
}

// Criterion 3: RBF exact fit on 50 random distinct embeddings, residual
// RMSE < 1e-6, < 5 s.
TEST(Acceptance, C03_RbfExactFit) {
  auto t0 = std::chrono::steady_clock::now();
  RngStream rng(9003);
  TrainingSet s;
  while (s.size() < 50) {
    ArchEmbedding e(kArchEmbedDim);
    for (auto& v : e) v = rng.uniform(-1.0, 1.0);
    s.add(random_genome(rng), e, rng.uniform(), rng.uniform());
  }
  RbfModel model = fit_rbf(s, 9004);
  double sse = 0.0;
  for (const auto& rec : s.records()) {
    double r = rbf_predict(model, rec.embedding) - rec.label;
    sse += r * r;
  }
  EXPECT_LT(std::sqrt(sse / static_cast<double>(s.size())), 1e-6);
  EXPECT_LT(seconds_since(t0), 5.0);
}

// Criterion 4: gradient suite. The MLP surrogate and every micronet layer
// pass central finite-difference checks at rel. error < 1e-4 on >= 20 random
// points each.
TEST(Acceptance, C04_GradientSuite) {
  using namespace micronet;
  RngStream rng(9005);
  auto rand_tensor = [&](int n, int c, int h, int w) {
    Tensor t(n, c, h, w);
    for (auto& v : t.v) v = rng.uniform(-1.0, 1.0);
    return t;
  };
  auto rand_vec = [&](int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
  };
  auto dot = [](const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) acc += a.v[i] * b.v[i];
    return acc;
  };
  auto check = [&](double analytic, const std::function<double()>& eval, double& param) {
    double numeric = testutil::central_diff(eval, param, 1e-6);
    ASSERT_LT(testutil::grad_rel_err(analytic, numeric), 1e-4);
  };

  for (int point = 0; point < 20; ++point) {
    // conv3x3 (stem layer type)
    {
      int stride = point % 2 == 0 ? 1 : 2;
      Tensor x = rand_tensor(1, 2, 6, 6);
      auto w = rand_vec(3 * 2 * 9);
      auto b = rand_vec(3);
      Tensor out = conv3x3(x, w, b, 3, stride);
      Tensor r = rand_tensor(out.n, out.c, out.h, out.w);
      Tensor dx(x.n, x.c, x.h, x.w);
      std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
      conv3x3_backward(x, w, r, stride, &dx, dw, db);
      auto f = [&] { return dot(conv3x3(x, w, b, 3, stride), r); };
      auto xi = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(x.v.size())));
      check(dx.v[xi], f, x.v[xi]);
      auto wi = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(w.size())));
      check(dw[wi], f, w[wi]);
    }
    // depthwise + pointwise + relu (separable conv pieces)
    {
      int stride = point % 2 == 0 ? 2 : 1;
      Tensor x = rand_tensor(1, 3, 6, 6);
      auto dww = rand_vec(3 * 9);
      auto pww = rand_vec(3 * 3);
      auto pwb = rand_vec(3);
      Tensor dwo = depthwise3x3(x, dww, stride);
      Tensor pwo = pointwise(dwo, pww, pwb, 3);
      Tensor r = rand_tensor(pwo.n, pwo.c, pwo.h, pwo.w);
      auto g = [&] { return dot(relu(pointwise(depthwise3x3(x, dww, stride), pww, pwb, 3)), r); };
      Tensor dpw(pwo.n, pwo.c, pwo.h, pwo.w);
      relu_backward(pwo, r, &dpw);
      Tensor ddw(dwo.n, dwo.c, dwo.h, dwo.w);
      std::vector<double> gpw(pww.size(), 0.0), gpb(pwb.size(), 0.0), gdw(dww.size(), 0.0);
      pointwise_backward(dwo, pww, dpw, &ddw, gpw, gpb);
      Tensor dx(x.n, x.c, x.h, x.w);
      depthwise3x3_backward(x, dww, ddw, stride, &dx, gdw);
      auto xi = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(x.v.size())));
      if (std::fabs(x.v[xi]) > 1e-5) check(dx.v[xi], g, x.v[xi]);
      auto wi = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(dww.size())));
      check(gdw[wi], g, dww[wi]);
      auto pi = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pww.size())));
      check(gpw[pi], g, pww[pi]);
    }
    // avgpool / gap / affine / softmax-ce
    {
      Tensor x = rand_tensor(1, 2, 4, 4);
      Tensor r1 = rand_tensor(1, 2, 2, 2);
      Tensor dx(1, 2, 4, 4);
      avgpool2x2_backward(r1, &dx);
      auto f1 = [&] { return dot(avgpool2x2(x), r1); };
      auto i1 = static_cast<std::size_t>(rng.uniform_int(32));
      check(dx.v[i1], f1, x.v[i1]);

      Tensor r2 = rand_tensor(1, 2, 1, 1);
      Tensor dx2(1, 2, 4, 4);
      global_avg_pool_backward(r2, &dx2);
      auto f2 = [&] { return dot(global_avg_pool(x), r2); };
      auto i2 = static_cast<std::size_t>(rng.uniform_int(32));
      check(dx2.v[i2], f2, x.v[i2]);

      Tensor xf = rand_tensor(2, 5, 1, 1);
      auto w = rand_vec(4 * 5);
      auto b = rand_vec(4);
      Tensor r3 = rand_tensor(2, 4, 1, 1);
      Tensor dxf(2, 5, 1, 1);
      std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
      affine_backward(xf, w, r3, &dxf, dw, db);
      auto f3 = [&] { return dot(affine(xf, w, b, 4), r3); };
      auto i3 = static_cast<std::size_t>(rng.uniform_int(10));
      check(dxf.v[i3], f3, xf.v[i3]);
      auto i4 = static_cast<std::size_t>(rng.uniform_int(20));
      check(dw[i4], f3, w[i4]);

      Tensor logits = rand_tensor(2, 4, 1, 1);
      std::vector<int> labels = {rng.uniform_int(4), rng.uniform_int(4)};
      Tensor dlogits;
      softmax_cross_entropy(logits, labels, &dlogits);
      auto f4 = [&] { return softmax_cross_entropy(logits, labels, nullptr); };
      auto i5 = static_cast<std::size_t>(rng.uniform_int(8));
      check(dlogits.v[i5], f4, logits.v[i5]);
    }
    // whole micronet: input and parameter gradients on a downsized net
    {
      NetConfig cfg;
      cfg.base_width = 2;
      Supernet net = Supernet::init(cfg, 9100 + point);
      Genome genome = random_genome(rng);
      SubnetView view(net, genome);
      Tensor x = rand_tensor(1, 1, 8, 8);
      for (auto& v : x.v) v = std::fabs(v);
      std::vector<int> y = {rng.uniform_int(4)};
      std::vector<double> pgrad;
      LossGrad lg = loss_and_grad(view, x, y, &pgrad);
      auto f = [&] { return loss_and_grad(view, x, y, nullptr).loss; };
      auto xi = static_cast<std::size_t>(rng.uniform_int(64));
      check(lg.input_grad.v[xi], f, x.v[xi]);
      auto ranges = active_param_ranges(view);
      auto [off, len] = ranges[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(ranges.size())))];
      int pi = off + rng.uniform_int(len);
      check(pgrad[static_cast<std::size_t>(pi)], f,
            net.params.data[static_cast<std::size_t>(pi)]);
    }
    // MLP surrogate
    {
      MlpModel m;
      m.params.assign(static_cast<std::size_t>(MlpModel::param_count()), 0.0);
      for (auto& v : m.params) v = rng.uniform(-0.05, 0.05);
      TrainingRecord rec;
      rec.embedding.assign(kArchEmbedDim, 0.0);
      for (auto& v : rec.embedding) v = rng.uniform(-1.0, 1.0);
      rec.label = rng.uniform();
      std::vector<const TrainingRecord*> batch = {&rec};
      std::vector<double> grad(m.params.size(), 0.0);
      mlp_loss_and_grad(m, batch, grad);
      auto f = [&] {
        std::vector<double> scratch(m.params.size(), 0.0);
        return mlp_loss_and_grad(m, batch, scratch);
      };
      for (int k = 0; k < 3; ++k) {
        auto pi = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(m.params.size())));
        check(grad[pi], f, m.params[pi]);
      }
    }
  }
}

// Criterion 5: attack feasibility on 1,000 random (model, input) pairs;
// outputs stay in the eps-ball and the [0,1] box exactly; eps = 0 returns
// the input exactly.
TEST(Acceptance, C05_AttackInvariants) {
  using namespace micronet;
  RngStream rng(9006);
  NetConfig cfg;
  cfg.base_width = 2;
  std::vector<Supernet> models;
  for (int i = 0; i < 10; ++i) models.push_back(Supernet::init(cfg, 9200 + i));
  const double eps = 8.0 / 255.0;
  for (int pair = 0; pair < 1000; ++pair) {
    const Supernet& net = models[static_cast<std::size_t>(pair % 10)];
    Genome g = random_genome(rng);
    SubnetView view(net, g);
    Tensor x(1, 1, 8, 8);
    for (auto& v : x.v) v = rng.uniform();
    std::vector<int> y = {rng.uniform_int(4)};
    RngStream arng(static_cast<std::uint64_t>(90000 + pair));

    Tensor fg = attack_batch(view, x, y, AttackSpec::fgsm(eps), arng);
    Tensor pg = attack_batch(view, x, y, AttackSpec::pgd(7, eps, 2.0 / 255.0), arng);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      ASSERT_LE(std::fabs(fg.v[i] - x.v[i]), eps);
      ASSERT_LE(std::fabs(pg.v[i] - x.v[i]), eps);
      ASSERT_GE(fg.v[i], 0.0);
      ASSERT_LE(fg.v[i], 1.0);
      ASSERT_GE(pg.v[i], 0.0);
      ASSERT_LE(pg.v[i], 1.0);
    }
    Tensor fg0 = attack_batch(view, x, y, AttackSpec::fgsm(0.0), arng);
    Tensor pg0 = attack_batch(view, x, y, AttackSpec::pgd(7, 0.0, 0.0), arng);
    ASSERT_EQ(fg0.v, x.v);
    ASSERT_EQ(pg0.v, x.v);
  }
}

// Criterion 6: parameter-sharing identity, max abs diff 0 over 100 random
// genomes and inputs.
TEST(Acceptance, C06_ParameterSharingIdentity) {
  using namespace micronet;
  RngStream rng(9007);
  Supernet net = Supernet::init(NetConfig{}, 9008);
  for (int trial = 0; trial < 100; ++trial) {
    Genome g = random_genome(rng);
    SubnetView shared(net, g);
    Supernet copy = standalone_copy(shared);
    SubnetView standalone(copy, g);
    Tensor x(2, 1, 8, 8);
    for (auto& v : x.v) v = rng.uniform();
    Tensor a = forward(shared, x);
    Tensor b = forward(standalone, x);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i)
      max_diff = std::max(max_diff, std::fabs(a.v[i] - b.v[i]));
    ASSERT_EQ(max_diff, 0.0);
  }
}

// Criterion 7: Algorithm-1 accounting. Mode SH with (m=20, T=40, G=20, k=4)
// performs exactly 24 high-fidelity evaluations and 2 surrogate fits.
TEST(Acceptance, C07_Algorithm1Accounting) {
  SearchConfig cfg;
  cfg.population_size = 20;
  cfg.max_generations = 40;
  cfg.surrogate_interval = 20;
  cfg.infill_count = 4;
  cfg.initial_samples = 20;
  cfg.mode = SearchMode::kSH;
  cfg.master_seed = 9009;
  SyntheticEvaluator eval(7);
  auto result = run_search(cfg, eval);
  EXPECT_EQ(result.high_fidelity_evals, 24);
  EXPECT_EQ(result.surrogate_fits, 2);
  EXPECT_EQ(result.training_set.size(), 24u);
}

// Criterion 8: exact hypervolume matches a 1e6-sample Monte Carlo estimate
// within 3 sigma on 50 random 2D/3D fronts.
TEST(Acceptance, C08_HypervolumeOracle) {
  RngStream rng(9010);
  for (int trial = 0; trial < 50; ++trial) {
    int dim = trial % 2 == 0 ? 2 : 3;
    int n = 1 + rng.uniform_int(10);
    std::vector<ObjectiveVector> pts;
    for (int i = 0; i < n; ++i) pts.push_back(testutil::random_objectives(rng, dim));
    ObjectiveVector ref(static_cast<std::size_t>(dim), 1.0);
    double exact = hypervolume(pts, ref);
    auto mc = testutil::mc_hypervolume(pts, ref, 1000000,
                                       static_cast<std::uint64_t>(9300 + trial));
    ASSERT_NEAR(exact, mc.value, 3.0 * mc.sigma + 1e-9) << "front " << trial;
  }
}

// Criterion 9: ablation analog. On the synthetic oracle with equal budgets
// (n=100, T=100, G=20), mode SH's pre-screening archive is at least as large
// as mode L's in >= 7 of 10 seeds, and no mode-L screened point dominates
// every mode-SH screened point in >= 7 of 10 seeds. < 10 min.
TEST(Acceptance, C09_AblationAnalog) {
  auto t0 = std::chrono::steady_clock::now();
  SyntheticEvaluator eval(7);
  int archive_wins = 0;
  int not_dominated_wholesale = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SearchConfig cfg;
    cfg.population_size = 100;
    cfg.max_generations = 100;
    cfg.surrogate_interval = 20;
    cfg.mode = SearchMode::kSH;
    cfg.master_seed = seed;
    auto sh = run_search(cfg, eval);
    cfg.mode = SearchMode::kL;
    auto lo = run_search(cfg, eval);
    if (sh.archive.size() >= lo.archive.size()) ++archive_wins;

    auto sh_screened = secondary_screening(sh.archive, eval, 2);
    auto lo_screened = secondary_screening(lo.archive, eval, 2);
    bool wholesale = false;
    for (const auto& lp : lo_screened) {
      ObjectiveVector l = {*lp.record.f1h, *lp.record.f2h};
      bool dominates_all = true;
      for (const auto& sp : sh_screened) {
        ObjectiveVector s = {*sp.record.f1h, *sp.record.f2h};
        if (!dominates(l, s)) {
          dominates_all = false;
          break;
        }
      }
      if (dominates_all && !sh_screened.empty()) {
        wholesale = true;
        break;
      }
    }
    if (!wholesale) ++not_dominated_wholesale;
  }
  EXPECT_GE(archive_wins, 7);
  EXPECT_GE(not_dominated_wholesale, 7);
  EXPECT_LT(seconds_since(t0), 600.0);
}

// Shared end-to-end micronet pipeline artifacts for criteria 10 and 11.
struct E2eArtifacts {
  fs::path dir;
  fs::path supernet_dir;
  fs::path run_dir;
  bool ok = false;
  double build_seconds = 0.0;
  std::string error;

  static const E2eArtifacts& get() {
    static E2eArtifacts a = build();
    return a;
  }

  static json desk_config(std::uint64_t seed) {
    json j;
    j["evaluator"] = "micronet";
    j["population_size"] = 20;
    j["max_generations"] = 20;
    j["surrogate_update_interval"] = 20;
    j["infill_count"] = 4;
    j["initial_samples"] = 16;
    j["master_seed"] = seed;
    j["supernet_epochs"] = 20;
    j["standalone_epochs"] = 30;
    return j;
  }

  static E2eArtifacts build() {
    E2eArtifacts a;
    auto t0 = std::chrono::steady_clock::now();
    a.dir = fs::temp_directory_path() / ("bfnas_acceptance_e2e_" + std::to_string(::getpid()));
    fs::remove_all(a.dir);
    fs::create_directories(a.dir);
    a.supernet_dir = a.dir / "supernet";
    a.run_dir = a.dir / "run";

    json cfg = desk_config(99);
    fs::path cfg_path = a.dir / "config.json";
    {
      std::ofstream out(cfg_path);
      out << cfg.dump(2);
    }
    if (run_cli("train-supernet --config " + cfg_path.string() + " --out " +
                a.supernet_dir.string()) != 0) {
      a.error = "train-supernet failed";
      return a;
    }
    cfg["checkpoint"] = (a.supernet_dir / "supernet.ckpt").string();
    fs::path search_cfg = a.dir / "search_config.json";
    {
      std::ofstream out(search_cfg);
      out << cfg.dump(2);
    }
    if (run_cli("search --config " + search_cfg.string() + " --out " + a.run_dir.string() +
                " --workers 4") != 0) {
      a.error = "search failed";
      return a;
    }
    if (run_cli("screen --run " + a.run_dir.string() + " --workers 4") != 0) {
      a.error = "screen failed";
      return a;
    }
    a.build_seconds = seconds_since(t0);
    a.ok = true;
    return a;
  }
};

// Criterion 10: end-to-end micronet smoke. train-supernet (20 epochs, desk
// config) -> search (T=20) -> screen -> final-train completes < 30 min; the
// final-trained pick beats the all-none genome's clean accuracy by >= 20
// points; attack-strength ordering PGD-20 >= PGD-7 >= FGSM error within one
// point.
TEST(Acceptance, C10_MicronetEndToEnd) {
  const auto& art = E2eArtifacts::get();
  ASSERT_TRUE(art.ok) << art.error;
  auto t0 = std::chrono::steady_clock::now();

  auto screened = read_archive_csv(art.run_dir / "screened.csv");
  ASSERT_FALSE(screened.empty());
  int best = 0;
  for (int i = 1; i < static_cast<int>(screened.size()); ++i)
    if (*screened[static_cast<std::size_t>(i)].record.f1h <
        *screened[static_cast<std::size_t>(best)].record.f1h)
      best = i;
  ASSERT_EQ(run_cli("final-train --run " + art.run_dir.string() + " --index " +
                    std::to_string(best)),
            0);

  std::string metrics = slurp(art.run_dir / "metrics.csv");
  std::istringstream lines(metrics);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  auto close = row.find('"', 1);
  std::istringstream rest(row.substr(close + 2));
  std::string f;
  std::vector<double> vals;
  while (std::getline(rest, f, ',')) vals.push_back(parse_double(f));
  ASSERT_EQ(vals.size(), 4u);  // clean, fgsm, pgd7, pgd20
  double clean_err = vals[0], fgsm_err = vals[1], pgd7_err = vals[2], pgd20_err = vals[3];

  // Attack-strength ordering with one-point tolerance.
  EXPECT_GE(pgd20_err + 0.01, pgd7_err);
  EXPECT_GE(pgd7_err + 0.01, fgsm_err);

  // The all-none genome trained the same way stays near chance.
  RunConfig cfg = load_config_file((art.run_dir / "config.json").string());
  auto data = cfg.make_dataset();
  auto none = micronet::train_standalone(Genome(), data, cfg.net_config(), cfg.train_config(true));
  EXPECT_GE((1.0 - clean_err) - (1.0 - none.metrics.clean_err), 0.20);

  double total = art.build_seconds + seconds_since(t0);
  EXPECT_LT(total, 1800.0);
}

// Criterion 11: full-pipeline determinism. The same master seed with
// different --workers values produces byte-identical archive.csv, for both
// evaluators.
TEST(Acceptance, C11_WorkerCountDeterminism) {
  fs::path dir = fs::temp_directory_path() / "bfnas_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);

  json syn;
  syn["evaluator"] = "synthetic";
  syn["population_size"] = 20;
  syn["max_generations"] = 40;
  syn["surrogate_update_interval"] = 20;
  syn["infill_count"] = 4;
  syn["initial_samples"] = 20;
  syn["master_seed"] = 555;
  fs::path syn_cfg = dir / "syn.json";
  {
    std::ofstream out(syn_cfg);
    out << syn.dump();
  }
  ASSERT_EQ(run_cli("search --config " + syn_cfg.string() + " --out " + (dir / "s1").string() +
                    " --workers 1"),
            0);
  ASSERT_EQ(run_cli("search --config " + syn_cfg.string() + " --out " + (dir / "s3").string() +
                    " --workers 3"),
            0);
  EXPECT_EQ(slurp(dir / "s1" / "archive.csv"), slurp(dir / "s3" / "archive.csv"));

  const auto& art = E2eArtifacts::get();
  ASSERT_TRUE(art.ok) << art.error;
  json mn = E2eArtifacts::desk_config(777);
  mn["population_size"] = 10;
  mn["initial_samples"] = 8;
  mn["infill_count"] = 2;
  mn["checkpoint"] = (art.supernet_dir / "supernet.ckpt").string();
  fs::path mn_cfg = dir / "mn.json";
  {
    std::ofstream out(mn_cfg);
    out << mn.dump();
  }
  ASSERT_EQ(run_cli("search --config " + mn_cfg.string() + " --out " + (dir / "m1").string() +
                    " --workers 1"),
            0);
  ASSERT_EQ(run_cli("search --config " + mn_cfg.string() + " --out " + (dir / "m4").string() +
                    " --workers 4"),
            0);
  EXPECT_EQ(slurp(dir / "m1" / "archive.csv"), slurp(dir / "m4" / "archive.csv"));
}

}  // namespace
