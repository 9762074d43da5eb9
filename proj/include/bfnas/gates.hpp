#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bfnas/genome.hpp"
#include "bfnas/rng.hpp"

namespace bfnas {

// Graph-gated architecture encoder. Information vectors flow along the block
// DAG: each edge transforms the source node's vector with W_x and gates it
// elementwise by sigmoid(EMB(op) * W_o); nodes sum their incoming pieces.
// None edges contribute nothing. The four 32-dim block embeddings are
// concatenated into one 128-dim architecture embedding.

inline constexpr int kOpEmbedDim = 16;   // h_o
inline constexpr int kInfoDim = 32;      // h_i
inline constexpr int kArchEmbedDim = kBlockCount * kInfoDim;  // 128

using ArchEmbedding = std::vector<double>;  // length kArchEmbedDim

struct GatesParams {
  // Row-major matrices.
  std::array<double, kOperationCount * kOpEmbedDim> op_embed;   // EMB: 4 x 16
  std::array<double, kOpEmbedDim * kInfoDim> op_transform;      // W_o: 16 x 32
  std::array<double, kInfoDim * kInfoDim> info_transform;       // W_x: 32 x 32
  std::array<double, 2 * kInfoDim> input_info;                  // I_0, I_1
  std::uint64_t seed = 0;
};

// Fixed seeded initialization: all matrices uniform(-0.1, 0.1), input-node
// vectors unit-normalized. The encoder is never trained; it is a frozen
// random projection, which keeps the downstream surrogate deterministic.
inline GatesParams init_gates_params(std::uint64_t seed) {
  GatesParams p;
  p.seed = seed;
  RngStream rng(mix_seed({seed, seed_tag("gates-params")}));
  for (auto& v : p.op_embed) v = rng.uniform(-0.1, 0.1);
  for (auto& v : p.op_transform) v = rng.uniform(-0.1, 0.1);
  for (auto& v : p.info_transform) v = rng.uniform(-0.1, 0.1);
  for (auto& v : p.input_info) v = rng.uniform(-0.1, 0.1);
  for (int node = 0; node < 2; ++node) {
    double norm = 0.0;
    for (int i = 0; i < kInfoDim; ++i) {
      double v = p.input_info[static_cast<std::size_t>(node * kInfoDim + i)];
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (int i = 0; i < kInfoDim; ++i)
        p.input_info[static_cast<std::size_t>(node * kInfoDim + i)] /= norm;
  }
  return p;
}

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace detail

// Soft attention mask for one operation: sigmoid(EMB(op) * W_o), length h_i.
inline std::array<double, kInfoDim> gates_op_mask(Operation op, const GatesParams& p) {
  std::array<double, kInfoDim> mask{};
  auto row = static_cast<std::size_t>(static_cast<int>(op)) * kOpEmbedDim;
  for (int j = 0; j < kInfoDim; ++j) {
    double acc = 0.0;
    for (int i = 0; i < kOpEmbedDim; ++i)
      acc += p.op_embed[row + static_cast<std::size_t>(i)] *
             p.op_transform[static_cast<std::size_t>(i * kInfoDim + j)];
    mask[static_cast<std::size_t>(j)] = detail::sigmoid(acc);
  }
  return mask;
}

// Block embedding: mean of the four internal-node information vectors.
inline std::array<double, kInfoDim> embed_block(const BlockDag& dag, const GatesParams& p) {
  std::array<std::array<double, kInfoDim>, kBlockNodes> info{};
  for (int node = 0; node < 2; ++node)
    for (int i = 0; i < kInfoDim; ++i)
      info[static_cast<std::size_t>(node)][static_cast<std::size_t>(i)] =
          p.input_info[static_cast<std::size_t>(node * kInfoDim + i)];

  for (int e = 0; e < kGenesPerBlock; ++e) {
    Operation op = dag.op(e);
    if (op == Operation::kNone) continue;
    auto [src, dst] = kEdgeTable[static_cast<std::size_t>(e)];
    auto mask = gates_op_mask(op, p);
    const auto& src_info = info[static_cast<std::size_t>(src)];
    auto& dst_info = info[static_cast<std::size_t>(dst)];
    for (int j = 0; j < kInfoDim; ++j) {
      double acc = 0.0;
      for (int i = 0; i < kInfoDim; ++i)
        acc += src_info[static_cast<std::size_t>(i)] *
               p.info_transform[static_cast<std::size_t>(i * kInfoDim + j)];
      dst_info[static_cast<std::size_t>(j)] += mask[static_cast<std::size_t>(j)] * acc;
    }
  }
  // kEdgeTable lists edges grouped by destination in ascending order, so each
  // source node is complete before any edge reads it.

  std::array<double, kInfoDim> out{};
  for (int node = 2; node < kBlockNodes; ++node)
    for (int i = 0; i < kInfoDim; ++i)
      out[static_cast<std::size_t>(i)] +=
          info[static_cast<std::size_t>(node)][static_cast<std::size_t>(i)] / 4.0;
  return out;
}

inline ArchEmbedding embed_arch(const CellArchitecture& cell, const GatesParams& p) {
  ArchEmbedding out(kArchEmbedDim, 0.0);
  for (int b = 0; b < kBlockCount; ++b) {
    auto block = embed_block(cell.blocks[static_cast<std::size_t>(b)], p);
    for (int i = 0; i < kInfoDim; ++i)
      out[static_cast<std::size_t>(b * kInfoDim + i)] = block[static_cast<std::size_t>(i)];
  }
  return out;
}

inline ArchEmbedding embed_genome(const Genome& g, const GatesParams& p) {
  return embed_arch(decode(g), p);
}

}  // namespace bfnas
