#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfnas/genome.hpp"
#include "bfnas/micronet/attacks.hpp"
#include "bfnas/micronet/dataset.hpp"
#include "bfnas/micronet/net.hpp"
#include "bfnas/rng.hpp"

namespace bfnas::micronet {

struct EmptySplitError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EvalResult {
  double clean_error = 0.0;
  double adv_error = 0.0;
};

namespace detail {

inline Tensor gather_images(const Tensor& images, std::span<const int> idx) {
  Tensor out(static_cast<int>(idx.size()), images.c, images.h, images.w);
  std::size_t stride = static_cast<std::size_t>(images.c) * images.h * images.w;
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(images.v.begin() + static_cast<std::ptrdiff_t>(idx[i] * stride), stride,
                out.v.begin() + static_cast<std::ptrdiff_t>(i * stride));
  return out;
}

inline int argmax_row(const Tensor& logits, int row) {
  int best = 0;
  for (int j = 1; j < logits.c; ++j)
    if (logits.at(row, j, 0, 0) > logits.at(row, best, 0, 0)) best = j;
  return best;
}

inline int count_errors(const SubnetView& view, const Tensor& x, std::span<const int> labels) {
  Tensor logits = forward(view, x);
  int errors = 0;
  for (int i = 0; i < x.n; ++i)
    if (argmax_row(logits, i) != labels[static_cast<std::size_t>(i)]) ++errors;
  return errors;
}

}  // namespace detail

// Error rates of a subnet on a deterministic seeded subsample of
// ceil(fraction * n) items; fraction 1 is the full-split (high-fidelity)
// evaluation. adv_error uses the given attack; without one it equals the
// clean error (the adversarial input is the input itself).
inline EvalResult evaluate(const SubnetView& view, const Tensor& images,
                           std::span<const int> labels, const std::optional<AttackSpec>& attack,
                           double fraction, std::uint64_t seed) {
  if (images.n == 0) throw EmptySplitError("evaluate: empty split");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("evaluate: fraction must be in (0, 1]");
  const int total = images.n;
  const int count = static_cast<int>(std::ceil(fraction * total));
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  RngStream sub_rng(mix_seed({seed, seed_tag("eval-subsample")}));
  sub_rng.shuffle(order);
  order.resize(static_cast<std::size_t>(count));

  RngStream attack_rng(mix_seed({seed, seed_tag("eval-attack")}));
  constexpr int kChunk = 64;
  int clean_errors = 0, adv_errors = 0;
  for (int start = 0; start < count; start += kChunk) {
    int len = std::min(kChunk, count - start);
    std::span<const int> idx(order.data() + start, static_cast<std::size_t>(len));
    Tensor x = detail::gather_images(images, idx);
    std::vector<int> y(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(idx[i])];
    clean_errors += detail::count_errors(view, x, y);
    if (attack.has_value()) {
      Tensor adv = attack_batch(view, x, y, *attack, attack_rng);
      adv_errors += detail::count_errors(view, adv, y);
    }
  }
  EvalResult r;
  r.clean_error = static_cast<double>(clean_errors) / count;
  r.adv_error = attack.has_value() ? static_cast<double>(adv_errors) / count : r.clean_error;
  return r;
}

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 0.05;  // cosine-decayed to 0 over all steps
  double momentum = 0.9;
  double weight_decay = 1e-4;
  // Residual-heavy sampled paths can spike the shared-weight gradients;
  // clipping the global norm keeps single-path training stable. 0 disables.
  double grad_clip_norm = 1.0;
  AttackSpec attack = AttackSpec::pgd();
  std::uint64_t seed = 1;
};

struct EpochLog {
  int epoch = 0;
  double adv_loss = 0.0;
  double clean_val_err = 0.0;
  double adv_val_err = 0.0;
};

namespace detail {

// SGD with momentum, coupled weight decay and global-norm gradient
// clipping, touching only the given parameter ranges (the slots the sampled
// path actually used).
struct SgdState {
  std::vector<double> velocity;

  void step(ParamStore& ps, const std::vector<double>& grad,
            const std::vector<std::pair<int, int>>& ranges, double lr, double momentum,
            double weight_decay, double clip_norm) {
    if (velocity.size() != ps.size()) velocity.assign(ps.size(), 0.0);
    double scale = 1.0;
    if (clip_norm > 0.0) {
      double sq = 0.0;
      for (auto [off, len] : ranges)
        for (int i = off; i < off + len; ++i)
          sq += grad[static_cast<std::size_t>(i)] * grad[static_cast<std::size_t>(i)];
      double norm = std::sqrt(sq);
      if (norm > clip_norm) scale = clip_norm / norm;
    }
    for (auto [off, len] : ranges)
      for (int i = off; i < off + len; ++i) {
        auto idx = static_cast<std::size_t>(i);
        double g = scale * grad[idx] + weight_decay * ps.data[idx];
        velocity[idx] = momentum * velocity[idx] + g;
        ps.data[idx] -= lr * velocity[idx];
      }
  }
};

struct TrainLoop {
  Supernet net;
  std::vector<EpochLog> log;
};

// Shared PGD-AT loop; sample_genome provides the path for each step (a fresh
// uniform one for supernet training, the fixed genome for standalone) and
// probe_genome the subnet used for the per-epoch validation log line.
template <typename SampleGenome, typename ProbeGenome>
TrainLoop adversarial_train(const SynthDataset& data, const NetConfig& net_cfg,
                            const TrainConfig& cfg, SampleGenome&& sample_genome,
                            ProbeGenome&& probe_genome) {
  Supernet net = Supernet::init(net_cfg, cfg.seed);
  RngStream shuffle_rng(mix_seed({cfg.seed, seed_tag("train-shuffle")}));
  RngStream attack_rng(mix_seed({cfg.seed, seed_tag("train-attack")}));

  const int n = data.train_images.n;
  const int batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const long long total_steps = static_cast<long long>(batches_per_epoch) * cfg.epochs;
  long long step = 0;

  SgdState sgd;
  std::vector<double> grad(net.params.size(), 0.0);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochLog> log;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      int len = std::min(cfg.batch_size, n - start);
      std::span<const int> idx(order.data() + start, static_cast<std::size_t>(len));
      Tensor x = gather_images(data.train_images, idx);
      std::vector<int> y(static_cast<std::size_t>(len));
      for (int i = 0; i < len; ++i)
        y[static_cast<std::size_t>(i)] = data.train_labels[static_cast<std::size_t>(idx[i])];

      SubnetView view(net, sample_genome());
      Tensor adv = attack_batch(view, x, y, cfg.attack, attack_rng);
      std::fill(grad.begin(), grad.end(), 0.0);
      LossGrad lg = loss_and_grad(view, adv, y, &grad);
      loss_sum += lg.loss;

      double lr = cfg.learning_rate * 0.5 *
                  (1.0 + std::cos(M_PI * static_cast<double>(step) / total_steps));
      sgd.step(net.params, grad, active_param_ranges(view), lr, cfg.momentum, cfg.weight_decay,
               cfg.grad_clip_norm);
      ++step;
    }

    SubnetView probe(net, probe_genome());
    EvalResult val = evaluate(probe, data.val_images, data.val_labels,
                              AttackSpec::fgsm(cfg.attack.epsilon), 0.25,
                              mix_seed({cfg.seed, seed_tag("train-val"),
                                        static_cast<std::uint64_t>(epoch)}));
    log.push_back({epoch, loss_sum / batches_per_epoch, val.clean_error, val.adv_error});
  }
  return {std::move(net), std::move(log)};
}

}  // namespace detail

struct SupernetTrainResult {
  Supernet net;
  std::vector<EpochLog> log;
};

// Single-path uniform-sampling adversarial supernet training: each batch
// samples one random genome, crafts an adversarial batch with the configured
// attack (PGD-7 by default), and takes one SGD step on the adversarial loss.
inline SupernetTrainResult adv_train_supernet(const SynthDataset& data, const NetConfig& net_cfg,
                                              const TrainConfig& cfg) {
  RngStream path_rng(mix_seed({cfg.seed, seed_tag("train-path")}));
  RngStream probe_rng(mix_seed({cfg.seed, seed_tag("train-probe")}));
  auto loop = detail::adversarial_train(
      data, net_cfg, cfg, [&path_rng] { return random_genome(path_rng); },
      [&probe_rng] { return random_genome(probe_rng); });
  return {std::move(loop.net), std::move(loop.log)};
}

struct StandaloneMetrics {
  double clean_err = 0.0;
  double fgsm_err = 0.0;
  double pgd7_err = 0.0;
};

struct StandaloneResult {
  Supernet net;
  Genome genome;
  std::vector<EpochLog> log;
  StandaloneMetrics metrics;
};

// Adversarial training from scratch on a single fixed path, then full-split
// metrics under no attack, FGSM, and PGD-7.
inline StandaloneResult train_standalone(const Genome& genome, const SynthDataset& data,
                                         const NetConfig& net_cfg, const TrainConfig& cfg) {
  auto loop = detail::adversarial_train(
      data, net_cfg, cfg, [&genome] { return genome; }, [&genome] { return genome; });
  StandaloneResult result{std::move(loop.net), genome, std::move(loop.log), {}};
  SubnetView view(result.net, genome);
  std::uint64_t eval_seed = mix_seed({cfg.seed, seed_tag("standalone-eval")});
  result.metrics.clean_err =
      evaluate(view, data.val_images, data.val_labels, std::nullopt, 1.0, eval_seed).clean_error;
  result.metrics.fgsm_err = evaluate(view, data.val_images, data.val_labels,
                                     AttackSpec::fgsm(cfg.attack.epsilon), 1.0, eval_seed)
                                .adv_error;
  result.metrics.pgd7_err =
      evaluate(view, data.val_images, data.val_labels,
               AttackSpec::pgd(7, cfg.attack.epsilon, cfg.attack.step_size), 1.0, eval_seed)
          .adv_error;
  return result;
}

// --- checkpoint: versioned header, structure table, raw parameters ---

inline constexpr char kCheckpointMagic[8] = {'B', 'F', 'N', 'A', 'S', 'N', 'E', 'T'};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void save_supernet(const Supernet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint32_t header[5] = {1u, static_cast<std::uint32_t>(net.cfg.base_width),
                             static_cast<std::uint32_t>(net.cfg.cells_per_block),
                             static_cast<std::uint32_t>(net.cfg.num_classes),
                             static_cast<std::uint32_t>(net.cfg.in_channels)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  auto count = static_cast<std::uint64_t>(net.params.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(net.params.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw CheckpointError("failed writing " + path);
}

inline Supernet load_supernet(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw CheckpointError("bad checkpoint magic in " + path);
  std::uint32_t header[5];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] != 1u) throw CheckpointError("unsupported checkpoint version in " + path);
  NetConfig cfg;
  cfg.base_width = static_cast<int>(header[1]);
  cfg.cells_per_block = static_cast<int>(header[2]);
  cfg.num_classes = static_cast<int>(header[3]);
  cfg.in_channels = static_cast<int>(header[4]);
  Supernet net(cfg);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || count != net.params.size())
    throw CheckpointError("checkpoint parameter count mismatch in " + path);
  in.read(reinterpret_cast<char*>(net.params.data.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw CheckpointError("truncated checkpoint " + path);
  return net;
}

}  // namespace bfnas::micronet
