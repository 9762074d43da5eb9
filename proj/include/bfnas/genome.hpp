#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "bfnas/rng.hpp"

namespace bfnas {

// Stage-wise cell search space: 4 block DAGs (B0, B1, B2, R), each with two
// input nodes (0, 1) fed by the previous two blocks and four internal nodes
// (2..5). Every internal node has one typed edge from each lower-indexed
// node, giving 2+3+4+5 = 14 genes per block and 56 genes total.

inline constexpr int kGenesPerBlock = 14;
inline constexpr int kBlockCount = 4;
inline constexpr int kGeneCount = kGenesPerBlock * kBlockCount;  // 56
inline constexpr int kOperationCount = 4;
inline constexpr int kBlockNodes = 6;
inline constexpr int kReductionBlock = 3;  // block R

enum class Operation : std::uint8_t {
  kNone = 0,
  kSkipConnect = 1,
  kSepConv3x3 = 2,
  kResSepConv3x3 = 3,
};

// Gene layout within a block, in (src, dst) pairs: node 2's edges first.
inline constexpr std::array<std::pair<int, int>, kGenesPerBlock> kEdgeTable = {{
    {0, 2}, {1, 2},
    {0, 3}, {1, 3}, {2, 3},
    {0, 4}, {1, 4}, {2, 4}, {3, 4},
    {0, 5}, {1, 5}, {2, 5}, {3, 5}, {4, 5},
}};

struct GenomeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WrongLengthError : GenomeError {
  explicit WrongLengthError(std::size_t n)
      : GenomeError("genome has " + std::to_string(n) + " genes, expected " +
                    std::to_string(kGeneCount)),
        length(n) {}
  std::size_t length;
};

struct GeneOutOfRangeError : GenomeError {
  GeneOutOfRangeError(std::size_t idx, long long v)
      : GenomeError("gene " + std::to_string(idx) + " has value " + std::to_string(v) +
                    ", expected 0..3"),
        index(idx),
        value(v) {}
  std::size_t index;
  long long value;
};

struct MalformedGenomeError : GenomeError {
  MalformedGenomeError(std::size_t pos, const std::string& what)
      : GenomeError("malformed genome string at position " + std::to_string(pos) + ": " + what),
        position(pos) {}
  std::size_t position;
};

class Genome {
 public:
  // All-none architecture.
  Genome() { genes_.fill(0); }

  static Genome validate(std::span<const int> genes) {
    if (genes.size() != kGeneCount) throw WrongLengthError(genes.size());
    Genome g;
    for (std::size_t i = 0; i < genes.size(); ++i) {
      if (genes[i] < 0 || genes[i] >= kOperationCount) throw GeneOutOfRangeError(i, genes[i]);
      g.genes_[i] = static_cast<std::uint8_t>(genes[i]);
    }
    return g;
  }

  static Genome from_genes(const std::array<std::uint8_t, kGeneCount>& genes) {
    Genome g;
    for (std::size_t i = 0; i < genes.size(); ++i) {
      if (genes[i] >= kOperationCount) throw GeneOutOfRangeError(i, genes[i]);
      g.genes_[i] = genes[i];
    }
    return g;
  }

  // 4 slash-separated groups of 14 comma-separated digits.
  std::string to_string() const {
    std::string out;
    out.reserve(kGeneCount * 2 + kBlockCount - 1);
    for (int b = 0; b < kBlockCount; ++b) {
      if (b > 0) out.push_back('/');
      for (int i = 0; i < kGenesPerBlock; ++i) {
        if (i > 0) out.push_back(',');
        out.push_back(static_cast<char>('0' + genes_[b * kGenesPerBlock + i]));
      }
    }
    return out;
  }

  static Genome parse(std::string_view text) {
    Genome g;
    std::size_t pos = 0;
    auto expect = [&](char c) {
      if (pos >= text.size() || text[pos] != c)
        throw MalformedGenomeError(pos, std::string("expected '") + c + "'");
      ++pos;
    };
    int gene = 0;
    for (int b = 0; b < kBlockCount; ++b) {
      if (b > 0) expect('/');
      for (int i = 0; i < kGenesPerBlock; ++i) {
        if (i > 0) expect(',');
        if (pos >= text.size()) throw MalformedGenomeError(pos, "unexpected end of input");
        char c = text[pos];
        if (c < '0' || c > '3') throw MalformedGenomeError(pos, "expected digit 0..3");
        g.genes_[gene++] = static_cast<std::uint8_t>(c - '0');
        ++pos;
      }
    }
    if (pos != text.size()) throw MalformedGenomeError(pos, "trailing characters");
    return g;
  }

  std::uint8_t gene(int i) const { return genes_[static_cast<std::size_t>(i)]; }
  void set_gene(int i, std::uint8_t v) {
    if (v >= kOperationCount) throw GeneOutOfRangeError(static_cast<std::size_t>(i), v);
    genes_[static_cast<std::size_t>(i)] = v;
  }
  const std::array<std::uint8_t, kGeneCount>& genes() const { return genes_; }

  Operation op(int block, int edge) const {
    return static_cast<Operation>(genes_[block * kGenesPerBlock + edge]);
  }

  bool operator==(const Genome& other) const = default;

 private:
  std::array<std::uint8_t, kGeneCount> genes_;
};

inline std::uint64_t genome_hash(const Genome& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t v : g.genes()) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct BlockDag {
  std::array<Operation, kGenesPerBlock> ops;  // indexed per kEdgeTable
  bool is_reduction = false;

  Operation op(int edge) const { return ops[static_cast<std::size_t>(edge)]; }

  // Longest directed path counting only non-none edges, in [0, 4].
  int longest_active_path() const {
    std::array<int, kBlockNodes> depth{};  // longest path ending at node
    for (int e = 0; e < kGenesPerBlock; ++e) {
      if (ops[static_cast<std::size_t>(e)] == Operation::kNone) continue;
      auto [src, dst] = kEdgeTable[static_cast<std::size_t>(e)];
      depth[static_cast<std::size_t>(dst)] =
          std::max(depth[static_cast<std::size_t>(dst)], depth[static_cast<std::size_t>(src)] + 1);
    }
    int best = 0;
    for (int d : depth) best = std::max(best, d);
    return best;
  }
};

struct CellArchitecture {
  std::array<BlockDag, kBlockCount> blocks;  // B0, B1, B2, R
};

inline CellArchitecture decode(const Genome& g) {
  CellArchitecture cell;
  for (int b = 0; b < kBlockCount; ++b) {
    cell.blocks[static_cast<std::size_t>(b)].is_reduction = (b == kReductionBlock);
    for (int e = 0; e < kGenesPerBlock; ++e)
      cell.blocks[static_cast<std::size_t>(b)].ops[static_cast<std::size_t>(e)] = g.op(b, e);
  }
  return cell;
}

inline Genome random_genome(RngStream& rng) {
  std::array<std::uint8_t, kGeneCount> genes;
  for (auto& v : genes) v = static_cast<std::uint8_t>(rng.uniform_int(kOperationCount));
  return Genome::from_genes(genes);
}

}  // namespace bfnas
