#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "bfnas/gates.hpp"
#include "bfnas/genome.hpp"
#include "bfnas/rng.hpp"

namespace bfnas {

inline constexpr int kRbfCenters = 128;
inline constexpr int kMlpHidden = 256;
inline constexpr int kMlpEpochs = 100;
inline constexpr int kMlpBatch = 50;
inline constexpr double kMlpLearningRate = 1e-3;

struct SurrogateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyInputError : SurrogateError {
  using SurrogateError::SurrogateError;
};
struct DegenerateTrainingSetError : SurrogateError {
  using SurrogateError::SurrogateError;
};

struct TrainingRecord {
  Genome genome;
  ArchEmbedding embedding;  // length kArchEmbedDim
  double f1h = 0.0;
  double f2h = 0.0;
  double label = 0.0;  // 0.5*f1h + 0.5*f2h, maintained by TrainingSet::add
};

// Insertion-ordered high-fidelity training data, no duplicate genomes.
class TrainingSet {
 public:
  // Returns false (and changes nothing) when the genome is already present.
  bool add(const Genome& g, ArchEmbedding embedding, double f1h, double f2h) {
    std::string key = g.to_string();
    if (keys_.contains(key)) return false;
    keys_.insert(std::move(key));
    TrainingRecord rec;
    rec.genome = g;
    rec.embedding = std::move(embedding);
    rec.f1h = f1h;
    rec.f2h = f2h;
    rec.label = 0.5 * f1h + 0.5 * f2h;
    records_.push_back(std::move(rec));
    return true;
  }

  bool contains(const Genome& g) const { return keys_.contains(g.to_string()); }
  std::size_t size() const { return records_.size(); }
  const std::vector<TrainingRecord>& records() const { return records_; }

 private:
  std::vector<TrainingRecord> records_;
  std::unordered_set<std::string> keys_;
};

namespace detail {
inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}
}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. If there are at most k distinct
// points, the distinct points themselves are returned, padded by duplicating
// the last one up to k. Empty clusters are reseeded to the point farthest
// from its assigned center. Deterministic for a fixed seed.
inline std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                               int k, std::uint64_t seed, int max_iters = 100) {
  if (points.empty()) throw EmptyInputError("kmeans: no points");
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  const std::size_t dim = points.front().size();

  std::vector<std::vector<double>> distinct;
  {
    std::map<std::vector<double>, bool> seen;
    for (const auto& p : points)
      if (seen.emplace(p, true).second) distinct.push_back(p);
  }
  if (static_cast<int>(distinct.size()) <= k) {
    auto centers = distinct;
    while (static_cast<int>(centers.size()) < k) centers.push_back(centers.back());
    return centers;
  }

  RngStream rng(mix_seed({seed, seed_tag("kmeans")}));
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<std::size_t>(k));

  // k-means++ seeding.
  centers.push_back(points[static_cast<std::size_t>(rng.uniform_int(n))]);
  std::vector<double> d2(static_cast<std::size_t>(n), 0.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& ctr : centers)
        best = std::min(best, detail::sqdist(points[static_cast<std::size_t>(i)], ctr));
      d2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    int pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc >= r) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centers.push_back(points[static_cast<std::size_t>(pick)]);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = detail::sqdist(points[static_cast<std::size_t>(i)],
                                  centers[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        moved = true;
      }
    }
    if (!moved) break;

    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                          std::vector<double>(dim, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[static_cast<std::size_t>(i)][d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Reseed an empty cluster with the point farthest from its center.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          auto ci = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
          double d = detail::sqdist(points[static_cast<std::size_t>(i)], centers[ci]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers[static_cast<std::size_t>(c)] = points[static_cast<std::size_t>(far)];
        assign[static_cast<std::size_t>(far)] = c;
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d)
        centers[static_cast<std::size_t>(c)][d] =
            sums[static_cast<std::size_t>(c)][d] / counts[static_cast<std::size_t>(c)];
    }
  }
  return centers;
}

// Gaussian RBF network: 128 k-means centers, one shared width (max pairwise
// center distance), weights by pseudo-inverse (rank-revealing least squares).
struct RbfModel {
  std::vector<std::vector<double>> centers;  // kRbfCenters x kArchEmbedDim
  double width = 1.0;
  std::vector<double> weights;  // kRbfCenters + 1 (bias last)
};

inline double rbf_predict(const RbfModel& m, const ArchEmbedding& e) {
  double acc = m.weights.back();
  double denom = 2.0 * m.width * m.width;
  for (std::size_t j = 0; j < m.centers.size(); ++j)
    acc += m.weights[j] * std::exp(-detail::sqdist(e, m.centers[j]) / denom);
  return acc;
}

inline RbfModel fit_rbf(const TrainingSet& s, std::uint64_t seed) {
  if (s.size() < 2) throw DegenerateTrainingSetError("fit_rbf: need at least 2 records");
  std::vector<std::vector<double>> embeddings;
  embeddings.reserve(s.size());
  for (const auto& rec : s.records()) embeddings.push_back(rec.embedding);

  RbfModel m;
  m.centers = kmeans(embeddings, kRbfCenters, seed);
  double max_d2 = 0.0;
  for (std::size_t i = 0; i < m.centers.size(); ++i)
    for (std::size_t j = i + 1; j < m.centers.size(); ++j)
      max_d2 = std::max(max_d2, detail::sqdist(m.centers[i], m.centers[j]));
  m.width = max_d2 > 0.0 ? std::sqrt(max_d2) : 1.0;

  const auto n = static_cast<Eigen::Index>(s.size());
  const auto k = static_cast<Eigen::Index>(m.centers.size());
  Eigen::MatrixXd phi(n, k + 1);
  Eigen::VectorXd y(n);
  double denom = 2.0 * m.width * m.width;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = s.records()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < k; ++j)
      phi(i, j) = std::exp(-detail::sqdist(rec.embedding, m.centers[static_cast<std::size_t>(j)]) /
                           denom);
    phi(i, k) = 1.0;
    y(i) = rec.label;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);
  cod.setThreshold(1e-10);
  Eigen::VectorXd w = cod.solve(y);
  m.weights.assign(w.data(), w.data() + w.size());
  return m;
}

// 3-layer MLP, 128 -> 256 -> 256 -> 1, rectified hidden units, linear
// output. Parameters live in one flat vector so optimizers and
// finite-difference checks can treat them uniformly.
struct MlpModel {
  std::vector<double> params;

  static constexpr int kIn = kArchEmbedDim;
  static constexpr int kH = kMlpHidden;
  static constexpr int off_w1() { return 0; }
  static constexpr int off_b1() { return off_w1() + kH * kIn; }
  static constexpr int off_w2() { return off_b1() + kH; }
  static constexpr int off_b2() { return off_w2() + kH * kH; }
  static constexpr int off_w3() { return off_b2() + kH; }
  static constexpr int off_b3() { return off_w3() + kH; }
  static constexpr int param_count() { return off_b3() + 1; }
};

namespace detail {

struct MlpTrace {
  std::vector<double> h1_pre, h1, h2_pre, h2;
  double out = 0.0;
};

inline double mlp_forward_one(const MlpModel& m, const double* x, MlpTrace* trace = nullptr) {
  const double* p = m.params.data();
  std::vector<double> h1(MlpModel::kH), h1_pre(MlpModel::kH);
  for (int j = 0; j < MlpModel::kH; ++j) {
    double acc = p[MlpModel::off_b1() + j];
    const double* row = p + MlpModel::off_w1() + j * MlpModel::kIn;
    for (int i = 0; i < MlpModel::kIn; ++i) acc += row[i] * x[i];
    h1_pre[static_cast<std::size_t>(j)] = acc;
    h1[static_cast<std::size_t>(j)] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> h2(MlpModel::kH), h2_pre(MlpModel::kH);
  for (int j = 0; j < MlpModel::kH; ++j) {
    double acc = p[MlpModel::off_b2() + j];
    const double* row = p + MlpModel::off_w2() + j * MlpModel::kH;
    for (int i = 0; i < MlpModel::kH; ++i) acc += row[i] * h1[static_cast<std::size_t>(i)];
    h2_pre[static_cast<std::size_t>(j)] = acc;
    h2[static_cast<std::size_t>(j)] = acc > 0.0 ? acc : 0.0;
  }
  double out = p[MlpModel::off_b3()];
  for (int i = 0; i < MlpModel::kH; ++i)
    out += p[MlpModel::off_w3() + i] * h2[static_cast<std::size_t>(i)];
  if (trace != nullptr) {
    trace->h1_pre = std::move(h1_pre);
    trace->h1 = std::move(h1);
    trace->h2_pre = std::move(h2_pre);
    trace->h2 = std::move(h2);
    trace->out = out;
  }
  return out;
}

// Accumulates d(loss)/d(params) given d(loss)/d(out) for one sample.
inline void mlp_backward_one(const MlpModel& m, const double* x, const MlpTrace& t, double dout,
                             std::vector<double>& grad) {
  const double* p = m.params.data();
  grad[static_cast<std::size_t>(MlpModel::off_b3())] += dout;
  std::vector<double> dh2(MlpModel::kH);
  for (int i = 0; i < MlpModel::kH; ++i) {
    grad[static_cast<std::size_t>(MlpModel::off_w3() + i)] +=
        dout * t.h2[static_cast<std::size_t>(i)];
    dh2[static_cast<std::size_t>(i)] = dout * p[MlpModel::off_w3() + i];
  }
  std::vector<double> dh1(MlpModel::kH, 0.0);
  for (int j = 0; j < MlpModel::kH; ++j) {
    if (t.h2_pre[static_cast<std::size_t>(j)] <= 0.0) continue;
    double dj = dh2[static_cast<std::size_t>(j)];
    grad[static_cast<std::size_t>(MlpModel::off_b2() + j)] += dj;
    const double* row = p + MlpModel::off_w2() + j * MlpModel::kH;
    double* grow = grad.data() + MlpModel::off_w2() + j * MlpModel::kH;
    for (int i = 0; i < MlpModel::kH; ++i) {
      grow[i] += dj * t.h1[static_cast<std::size_t>(i)];
      dh1[static_cast<std::size_t>(i)] += dj * row[i];
    }
  }
  for (int j = 0; j < MlpModel::kH; ++j) {
    if (t.h1_pre[static_cast<std::size_t>(j)] <= 0.0) continue;
    double dj = dh1[static_cast<std::size_t>(j)];
    grad[static_cast<std::size_t>(MlpModel::off_b1() + j)] += dj;
    double* grow = grad.data() + MlpModel::off_w1() + j * MlpModel::kIn;
    for (int i = 0; i < MlpModel::kIn; ++i) grow[i] += dj * x[i];
  }
}

}  // namespace detail

inline double mlp_predict(const MlpModel& m, const ArchEmbedding& e) {
  return detail::mlp_forward_one(m, e.data());
}

// Mean-squared-error over a batch; fills grad (same layout as params).
inline double mlp_loss_and_grad(const MlpModel& m, const std::vector<const TrainingRecord*>& batch,
                                std::vector<double>& grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const TrainingRecord* rec : batch) {
    detail::MlpTrace trace;
    double out = detail::mlp_forward_one(m, rec->embedding.data(), &trace);
    double r = out - rec->label;
    loss += r * r * inv_n;
    detail::mlp_backward_one(m, rec->embedding.data(), trace, 2.0 * r * inv_n, grad);
  }
  return loss;
}

struct MlpFitInfo {
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

// Adam training: 100 epochs, shuffled batches of 50 (last batch may be
// short), step 1e-3, betas (0.9, 0.999), eps 1e-8. Seeded init and shuffle.
inline MlpModel fit_mlp(const TrainingSet& s, std::uint64_t seed, MlpFitInfo* info = nullptr) {
  if (s.size() < 2) throw DegenerateTrainingSetError("fit_mlp: need at least 2 records");
  MlpModel m;
  m.params.assign(static_cast<std::size_t>(MlpModel::param_count()), 0.0);
  RngStream rng(mix_seed({seed, seed_tag("mlp-fit")}));
  auto glorot = [&](int off, int rows, int cols) {
    double limit = std::sqrt(6.0 / (rows + cols));
    for (int i = 0; i < rows * cols; ++i)
      m.params[static_cast<std::size_t>(off + i)] = rng.uniform(-limit, limit);
  };
  glorot(MlpModel::off_w1(), MlpModel::kH, MlpModel::kIn);
  glorot(MlpModel::off_w2(), MlpModel::kH, MlpModel::kH);
  glorot(MlpModel::off_w3(), 1, MlpModel::kH);

  auto full_mse = [&] {
    double acc = 0.0;
    for (const auto& rec : s.records()) {
      double r = mlp_predict(m, rec.embedding) - rec.label;
      acc += r * r;
    }
    return acc / static_cast<double>(s.size());
  };
  if (info != nullptr) info->initial_mse = full_mse();

  const auto pc = static_cast<std::size_t>(MlpModel::param_count());
  std::vector<double> grad(pc, 0.0), m1(pc, 0.0), m2(pc, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long t = 0;
  std::vector<int> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < kMlpEpochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += kMlpBatch) {
      std::vector<const TrainingRecord*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + kMlpBatch); ++i)
        batch.push_back(&s.records()[static_cast<std::size_t>(order[i])]);
      mlp_loss_and_grad(m, batch, grad);
      ++t;
      double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t i = 0; i < pc; ++i) {
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
        m.params[i] -= kMlpLearningRate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + eps);
      }
    }
  }
  if (info != nullptr) info->final_mse = full_mse();
  return m;
}

// Either regression head behind one call.
using SurrogateModel = std::variant<RbfModel, MlpModel>;

inline double surrogate_predict(const SurrogateModel& model, const ArchEmbedding& e) {
  if (std::holds_alternative<RbfModel>(model)) return rbf_predict(std::get<RbfModel>(model), e);
  return mlp_predict(std::get<MlpModel>(model), e);
}

// --- dump/load: versioned text, shapes then row-major parameters ---
// Hexfloat round-trips doubles exactly.

inline void save_surrogate(const SurrogateModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SurrogateError("cannot open " + path + " for writing");
  out << std::hexfloat;
  if (std::holds_alternative<RbfModel>(model)) {
    const auto& m = std::get<RbfModel>(model);
    out << "bfnas-surrogate 1 rbf\n";
    out << m.centers.size() << ' ' << (m.centers.empty() ? 0 : m.centers.front().size()) << '\n';
    out << m.width << '\n';
    for (const auto& c : m.centers) {
      for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << c[i];
      out << '\n';
    }
    for (std::size_t i = 0; i < m.weights.size(); ++i) out << (i ? " " : "") << m.weights[i];
    out << '\n';
  } else {
    const auto& m = std::get<MlpModel>(model);
    out << "bfnas-surrogate 1 mlp\n";
    out << m.params.size() << '\n';
    for (std::size_t i = 0; i < m.params.size(); ++i) out << (i ? " " : "") << m.params[i];
    out << '\n';
  }
  if (!out) throw SurrogateError("failed writing " + path);
}

namespace detail {
// iostream extraction does not accept hexfloat, so go through strtod.
inline double read_double_token(std::istream& in, const std::string& path) {
  std::string tok;
  if (!(in >> tok)) throw SurrogateError("truncated surrogate file " + path);
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw SurrogateError("bad numeric token '" + tok + "' in " + path);
  return v;
}
}  // namespace detail

inline SurrogateModel load_surrogate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SurrogateError("cannot open " + path);
  std::string magic, kind;
  int version = 0;
  in >> magic >> version >> kind;
  if (magic != "bfnas-surrogate" || version != 1)
    throw SurrogateError("unrecognized surrogate file " + path);
  if (kind == "rbf") {
    RbfModel m;
    std::size_t k = 0, dim = 0;
    in >> k >> dim;
    m.width = detail::read_double_token(in, path);
    m.centers.assign(k, std::vector<double>(dim, 0.0));
    for (auto& c : m.centers)
      for (auto& v : c) v = detail::read_double_token(in, path);
    m.weights.assign(k + 1, 0.0);
    for (auto& v : m.weights) v = detail::read_double_token(in, path);
    return m;
  }
  if (kind == "mlp") {
    MlpModel m;
    std::size_t n = 0;
    in >> n;
    if (n != static_cast<std::size_t>(MlpModel::param_count()))
      throw SurrogateError("mlp parameter count mismatch in " + path);
    m.params.assign(n, 0.0);
    for (auto& v : m.params) v = detail::read_double_token(in, path);
    return m;
  }
  throw SurrogateError("unknown surrogate kind '" + kind + "' in " + path);
}

}  // namespace bfnas
