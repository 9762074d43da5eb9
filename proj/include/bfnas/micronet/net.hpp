#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bfnas/genome.hpp"
#include "bfnas/micronet/layers.hpp"
#include "bfnas/micronet/tensor.hpp"
#include "bfnas/rng.hpp"

namespace bfnas::micronet {

// Macro layout: stem -> B0 -> B1 -> B2 -> R(stride 2) -> GAP -> affine head.
// Each cell takes the outputs of the previous two cells (the stem feeds both
// inputs of the first cell). B0..B2 may be repeated; repeats of a block share
// that block's parameter slots. R is instantiated once.
struct NetConfig {
  int base_width = 8;  // C
  int cells_per_block = 1;
  int num_classes = 4;
  int in_channels = 1;
};

// One flat parameter vector holding every slot of the over-parameterized
// supernet: stem, per-(block, edge, op) separable-conv weights for the two
// parameterized operations, per-block 1x1 output projections, and the head.
// None/skip own no parameters. A subnet reads only the slots its genome
// selects, so any genome's forward draws from this single store.
class ParamStore {
 public:
  explicit ParamStore(const NetConfig& cfg) : cfg_(cfg) {
    const int c = cfg.base_width;
    edge_slot_size_ = c * 9 + c * c + c;  // depthwise, pointwise, pointwise bias
    int off = 0;
    stem_w_ = off;
    off += c * cfg.in_channels * 9;
    stem_b_ = off;
    off += c;
    edges_base_ = off;
    off += kBlockCount * kGenesPerBlock * 2 * edge_slot_size_;
    for (int b = 0; b < kBlockCount; ++b) {
      proj_w_[static_cast<std::size_t>(b)] = off;
      off += c * (4 * c);
      proj_b_[static_cast<std::size_t>(b)] = off;
      off += c;
    }
    head_w_ = off;
    off += cfg.num_classes * c;
    head_b_ = off;
    off += cfg.num_classes;
    data.assign(static_cast<std::size_t>(off), 0.0);
  }

  const NetConfig& cfg() const { return cfg_; }
  std::size_t size() const { return data.size(); }

  int stem_w() const { return stem_w_; }
  int stem_b() const { return stem_b_; }
  int proj_w(int block) const { return proj_w_[static_cast<std::size_t>(block)]; }
  int proj_b(int block) const { return proj_b_[static_cast<std::size_t>(block)]; }
  int head_w() const { return head_w_; }
  int head_b() const { return head_b_; }
  int edge_slot_size() const { return edge_slot_size_; }

  // slot 0: SepConv3x3, slot 1: ResSepConv3x3. Within a slot: depthwise
  // kernel [C][3][3], then pointwise [C][C], then pointwise bias [C].
  int edge_base(int block, int edge, int slot) const {
    return edges_base_ + ((block * kGenesPerBlock + edge) * 2 + slot) * edge_slot_size_;
  }
  int edge_dw(int block, int edge, int slot) const { return edge_base(block, edge, slot); }
  int edge_pw(int block, int edge, int slot) const {
    return edge_base(block, edge, slot) + cfg_.base_width * 9;
  }
  int edge_pb(int block, int edge, int slot) const {
    return edge_pw(block, edge, slot) + cfg_.base_width * cfg_.base_width;
  }

  std::span<const double> view(int off, int len) const {
    return {data.data() + off, static_cast<std::size_t>(len)};
  }

  std::vector<double> data;

 private:
  NetConfig cfg_;
  int stem_w_ = 0, stem_b_ = 0, edges_base_ = 0, head_w_ = 0, head_b_ = 0;
  int edge_slot_size_ = 0;
  std::array<int, kBlockCount> proj_w_{};
  std::array<int, kBlockCount> proj_b_{};
};

struct Supernet {
  NetConfig cfg;
  ParamStore params;

  explicit Supernet(const NetConfig& c) : cfg(c), params(c) {}

  // Seeded uniform init with a variance-preserving bound sqrt(3/fan_in)
  // everywhere, zero biases. There are no normalization layers, and nodes
  // sum several rectified conv edges: a unit-gain linear bound leaves each
  // conv edge at gain ~0.5 after the rectifier, so multi-edge sums stay near
  // unit variance instead of compounding across cells.
  static Supernet init(const NetConfig& cfg, std::uint64_t seed) {
    Supernet net(cfg);
    RngStream rng(mix_seed({seed, seed_tag("supernet-init")}));
    auto& d = net.params.data;
    const int c = cfg.base_width;
    auto fill = [&](int off, int len, int fan_in) {
      double bound = std::sqrt(3.0 / fan_in);
      for (int i = 0; i < len; ++i) d[static_cast<std::size_t>(off + i)] = rng.uniform(-bound, bound);
    };
    fill(net.params.stem_w(), c * cfg.in_channels * 9, cfg.in_channels * 9);
    for (int b = 0; b < kBlockCount; ++b) {
      for (int e = 0; e < kGenesPerBlock; ++e)
        for (int slot = 0; slot < 2; ++slot) {
          fill(net.params.edge_dw(b, e, slot), c * 9, 9);
          fill(net.params.edge_pw(b, e, slot), c * c, c);
        }
      fill(net.params.proj_w(b), c * 4 * c, 4 * c);
    }
    fill(net.params.head_w(), cfg.num_classes * c, c);
    return net;
  }
};

// A genome-selected path through a parameter store. Forwarding through the
// view is bit-identical to forwarding a standalone net whose store holds a
// copy of the selected slots.
struct SubnetView {
  const Supernet* net = nullptr;
  Genome genome;
  CellArchitecture cell;

  SubnetView(const Supernet& supernet, const Genome& g)
      : net(&supernet), genome(g), cell(decode(g)) {}
};

namespace detail {

struct ConvEdgeSave {
  int edge = -1;
  Tensor dw_out;  // after depthwise, before pointwise
  Tensor pw_out;  // after pointwise bias, before relu
};

struct CellTrace {
  std::array<Tensor, kBlockNodes> nodes;
  std::vector<ConvEdgeSave> conv_saves;
  Tensor concat;
};

inline int op_slot(Operation op) { return op == Operation::kSepConv3x3 ? 0 : 1; }

// Edge indices feeding each internal node, per kEdgeTable's grouping.
inline constexpr int kNodeEdgeStart[kBlockNodes] = {0, 0, 0, 2, 5, 9};

// Node values aggregate as the sum over non-none incoming edges; none edges
// are absent (a node with no live in-edges stays zero).
inline Tensor cell_forward(const BlockDag& dag, int block, const ParamStore& ps,
                           const Tensor& in0, const Tensor& in1, CellTrace* trace) {
  const int c = ps.cfg().base_width;
  const bool red = dag.is_reduction;
  const int oh = red ? in0.h / 2 : in0.h;
  const int ow = red ? in0.w / 2 : in0.w;

  std::array<Tensor, kBlockNodes> nodes;
  nodes[0] = in0;
  nodes[1] = in1;
  for (int j = 2; j < kBlockNodes; ++j) nodes[static_cast<std::size_t>(j)] = Tensor(in0.n, c, oh, ow);

  std::vector<ConvEdgeSave> saves;
  for (int dst = 2; dst < kBlockNodes; ++dst) {
    Tensor& dst_val = nodes[static_cast<std::size_t>(dst)];
    for (int e = kNodeEdgeStart[dst]; e < kNodeEdgeStart[dst] + dst; ++e) {
      Operation op = dag.op(e);
      if (op == Operation::kNone) continue;
      auto src = kEdgeTable[static_cast<std::size_t>(e)].first;
      const int stride = (red && src < 2) ? 2 : 1;
      const Tensor& src_val = nodes[static_cast<std::size_t>(src)];
      if (op == Operation::kSkipConnect) {
        dst_val += stride == 2 ? avgpool2x2(src_val) : src_val;
        continue;
      }
      const int slot = op_slot(op);
      Tensor dw_out = depthwise3x3(src_val, ps.view(ps.edge_dw(block, e, slot), c * 9), stride);
      Tensor pw_out = pointwise(dw_out, ps.view(ps.edge_pw(block, e, slot), c * c),
                                ps.view(ps.edge_pb(block, e, slot), c), c);
      dst_val += relu(pw_out);
      if (op == Operation::kResSepConv3x3)
        dst_val += stride == 2 ? avgpool2x2(src_val) : src_val;
      if (trace != nullptr)
        saves.push_back({e, std::move(dw_out), std::move(pw_out)});
    }
  }

  Tensor concat(in0.n, 4 * c, oh, ow);
  for (int j = 2; j < kBlockNodes; ++j) {
    const Tensor& nj = nodes[static_cast<std::size_t>(j)];
    for (int in = 0; in < in0.n; ++in)
      for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x)
            concat.at(in, (j - 2) * c + ci, y, x) = nj.at(in, ci, y, x);
  }
  Tensor out = pointwise(concat, ps.view(ps.proj_w(block), c * 4 * c),
                         ps.view(ps.proj_b(block), c), c);
  if (trace != nullptr) {
    trace->nodes = std::move(nodes);
    trace->conv_saves = std::move(saves);
    trace->concat = std::move(concat);
  }
  return out;
}

}  // namespace detail

struct NetTrace {
  Tensor input;
  std::vector<Tensor> feats;  // feats[0] = stem output, feats[i+1] = cell i output
  std::vector<detail::CellTrace> cells;
  std::vector<int> cell_block;
  Tensor gap_out;
  Tensor logits;
};

// Blocks of the macro sequence: B0^r, B1^r, B2^r, R.
inline std::vector<int> macro_blocks(const NetConfig& cfg) {
  std::vector<int> blocks;
  for (int b = 0; b < kBlockCount - 1; ++b)
    for (int r = 0; r < cfg.cells_per_block; ++r) blocks.push_back(b);
  blocks.push_back(kReductionBlock);
  return blocks;
}

inline Tensor forward(const SubnetView& view, const Tensor& x, NetTrace* trace = nullptr) {
  const ParamStore& ps = view.net->params;
  const NetConfig& cfg = ps.cfg();
  if (x.c != cfg.in_channels) throw ShapeError("forward: wrong input channel count");
  const int c = cfg.base_width;

  std::vector<Tensor> feats;
  feats.push_back(conv3x3(x, ps.view(ps.stem_w(), c * cfg.in_channels * 9),
                          ps.view(ps.stem_b(), c), c, 1));
  auto blocks = macro_blocks(cfg);
  std::vector<detail::CellTrace> cell_traces(trace != nullptr ? blocks.size() : 0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const int b = blocks[i];
    const Tensor& prev_prev = feats[i == 0 ? 0 : i - 1];
    const Tensor& prev = feats[i];
    feats.push_back(detail::cell_forward(view.cell.blocks[static_cast<std::size_t>(b)], b, ps,
                                         prev_prev, prev,
                                         trace != nullptr ? &cell_traces[i] : nullptr));
  }
  Tensor gap = global_avg_pool(feats.back());
  Tensor logits = affine(gap, ps.view(ps.head_w(), cfg.num_classes * c),
                         ps.view(ps.head_b(), cfg.num_classes), cfg.num_classes);
  if (trace != nullptr) {
    trace->input = x;
    trace->feats = std::move(feats);
    trace->cells = std::move(cell_traces);
    trace->cell_block = std::move(blocks);
    trace->gap_out = std::move(gap);
    trace->logits = logits;
  }
  return logits;
}

namespace detail {

inline void cell_backward(const BlockDag& dag, int block, const ParamStore& ps,
                          const CellTrace& trace, const Tensor& dout, Tensor* din0, Tensor* din1,
                          std::span<double> pgrad) {
  const int c = ps.cfg().base_width;
  const bool red = dag.is_reduction;
  auto grad_span = [&](int off, int len) {
    return std::span<double>(pgrad.data() + off, static_cast<std::size_t>(len));
  };

  Tensor dconcat(trace.concat.n, trace.concat.c, trace.concat.h, trace.concat.w);
  pointwise_backward(trace.concat, ps.view(ps.proj_w(block), c * 4 * c), dout, &dconcat,
                     grad_span(ps.proj_w(block), c * 4 * c), grad_span(ps.proj_b(block), c));

  std::array<Tensor, kBlockNodes> dnodes;
  for (int j = 0; j < kBlockNodes; ++j) {
    const Tensor& nj = trace.nodes[static_cast<std::size_t>(j)];
    dnodes[static_cast<std::size_t>(j)] = Tensor(nj.n, nj.c, nj.h, nj.w);
  }
  for (int in = 0; in < dconcat.n; ++in)
    for (int j = 2; j < kBlockNodes; ++j)
      for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < dconcat.h; ++y)
          for (int x = 0; x < dconcat.w; ++x)
            dnodes[static_cast<std::size_t>(j)].at(in, ci, y, x) +=
                dconcat.at(in, (j - 2) * c + ci, y, x);

  // Walk destinations downward: every consumer of a node is processed
  // before the node's own in-edges are distributed gradient.
  auto save_it = trace.conv_saves.rbegin();
  for (int dst = kBlockNodes - 1; dst >= 2; --dst) {
    Tensor& ddst = dnodes[static_cast<std::size_t>(dst)];
    for (int e = kNodeEdgeStart[dst] + dst - 1; e >= kNodeEdgeStart[dst]; --e) {
      Operation op = dag.op(e);
      if (op == Operation::kNone) continue;
      auto src = kEdgeTable[static_cast<std::size_t>(e)].first;
      const int stride = (red && src < 2) ? 2 : 1;
      Tensor& dsrc = dnodes[static_cast<std::size_t>(src)];
      if (op == Operation::kSkipConnect || op == Operation::kResSepConv3x3) {
        if (stride == 2)
          avgpool2x2_backward(ddst, &dsrc);
        else
          dsrc += ddst;
      }
      if (op == Operation::kSkipConnect) continue;

      const ConvEdgeSave& save = *save_it++;
      const int slot = op_slot(op);
      Tensor dpw(save.pw_out.n, save.pw_out.c, save.pw_out.h, save.pw_out.w);
      relu_backward(save.pw_out, ddst, &dpw);
      Tensor ddw(save.dw_out.n, save.dw_out.c, save.dw_out.h, save.dw_out.w);
      pointwise_backward(save.dw_out, ps.view(ps.edge_pw(block, e, slot), c * c), dpw, &ddw,
                         grad_span(ps.edge_pw(block, e, slot), c * c),
                         grad_span(ps.edge_pb(block, e, slot), c));
      depthwise3x3_backward(trace.nodes[static_cast<std::size_t>(src)],
                            ps.view(ps.edge_dw(block, e, slot), c * 9), ddw, stride, &dsrc,
                            grad_span(ps.edge_dw(block, e, slot), c * 9));
    }
  }
  *din0 += dnodes[0];
  *din1 += dnodes[1];
}

}  // namespace detail

struct LossGrad {
  double loss = 0.0;
  Tensor input_grad;
};

// Softmax cross-entropy loss plus exact reverse-mode gradients with respect
// to the input and, when param_grad is non-null, every selected parameter
// (accumulated into param_grad, which must match the store size).
inline LossGrad loss_and_grad(const SubnetView& view, const Tensor& x, std::span<const int> labels,
                              std::vector<double>* param_grad) {
  const ParamStore& ps = view.net->params;
  const NetConfig& cfg = ps.cfg();
  const int c = cfg.base_width;

  NetTrace trace;
  forward(view, x, &trace);
  Tensor dlogits;
  LossGrad result;
  result.loss = softmax_cross_entropy(trace.logits, labels, &dlogits);

  static thread_local std::vector<double> scratch;
  std::vector<double>* pg = param_grad;
  if (pg == nullptr) {
    scratch.assign(ps.size(), 0.0);
    pg = &scratch;
  } else if (pg->size() != ps.size()) {
    pg->assign(ps.size(), 0.0);
  }
  std::span<double> pgrad(*pg);
  auto grad_span = [&](int off, int len) {
    return std::span<double>(pgrad.data() + off, static_cast<std::size_t>(len));
  };

  Tensor dgap = Tensor::matrix(trace.gap_out.n, trace.gap_out.c);
  affine_backward(trace.gap_out, ps.view(ps.head_w(), cfg.num_classes * c), dlogits, &dgap,
                  grad_span(ps.head_w(), cfg.num_classes * c),
                  grad_span(ps.head_b(), cfg.num_classes));

  std::vector<Tensor> dfeats;
  dfeats.reserve(trace.feats.size());
  for (const Tensor& f : trace.feats) dfeats.emplace_back(f.n, f.c, f.h, f.w);
  global_avg_pool_backward(dgap, &dfeats.back());

  for (std::size_t i = trace.cells.size(); i > 0; --i) {
    std::size_t idx = i - 1;
    const int b = trace.cell_block[idx];
    Tensor* din0 = &dfeats[idx == 0 ? 0 : idx - 1];
    Tensor* din1 = &dfeats[idx];
    detail::cell_backward(view.cell.blocks[static_cast<std::size_t>(b)], b, ps, trace.cells[idx],
                          dfeats[idx + 1], din0, din1, pgrad);
  }

  result.input_grad = Tensor(x.n, x.c, x.h, x.w);
  conv3x3_backward(x, ps.view(ps.stem_w(), c * cfg.in_channels * 9), dfeats[0], 1,
                   &result.input_grad, grad_span(ps.stem_w(), c * cfg.in_channels * 9),
                   grad_span(ps.stem_b(), c));
  return result;
}

// Contiguous parameter ranges a genome's subnet actually reads: stem, the
// selected edge slots, all block projections, and the head.
inline std::vector<std::pair<int, int>> active_param_ranges(const SubnetView& view) {
  const ParamStore& ps = view.net->params;
  const NetConfig& cfg = ps.cfg();
  const int c = cfg.base_width;
  std::vector<std::pair<int, int>> ranges;
  ranges.emplace_back(ps.stem_w(), c * cfg.in_channels * 9 + c);  // stem w and b
  for (int b = 0; b < kBlockCount; ++b) {
    for (int e = 0; e < kGenesPerBlock; ++e) {
      Operation op = view.genome.op(b, e);
      if (op == Operation::kSepConv3x3 || op == Operation::kResSepConv3x3)
        ranges.emplace_back(ps.edge_base(b, e, detail::op_slot(op)), ps.edge_slot_size());
    }
    ranges.emplace_back(ps.proj_w(b), c * 4 * c + c);  // proj w and b
  }
  ranges.emplace_back(ps.head_w(), cfg.num_classes * c + cfg.num_classes);
  return ranges;
}

// Copies the slots selected by the genome into a fresh store (everything
// else stays zero), for the sharing-identity guarantee.
inline Supernet standalone_copy(const SubnetView& view) {
  Supernet out(view.net->cfg);
  for (auto [off, len] : active_param_ranges(view))
    std::copy_n(view.net->params.data.begin() + off, len, out.params.data.begin() + off);
  return out;
}

}  // namespace bfnas::micronet
