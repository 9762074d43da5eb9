#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bfnas/micronet/tensor.hpp"

namespace bfnas::micronet {

// Forward/backward pairs for every layer the nets are built from. Weights
// are passed as raw spans into the owning parameter store; backward
// accumulates (never overwrites) into the matching gradient spans, so one
// buffer serves a whole graph traversal.

inline int conv_out_extent(int in, int stride) { return (in + 2 - 3) / stride + 1; }

// Full 3x3 convolution, padding 1. w layout: [cout][cin][3][3], b: [cout].
inline Tensor conv3x3(const Tensor& x, std::span<const double> w, std::span<const double> b,
                      int cout, int stride = 1) {
  const int ho = conv_out_extent(x.h, stride), wo = conv_out_extent(x.w, stride);
  Tensor out(x.n, cout, ho, wo);
  for (int in = 0; in < x.n; ++in)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < x.c; ++ci)
            for (int ky = 0; ky < 3; ++ky) {
              int iy = oy * stride - 1 + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                int ix = ox * stride - 1 + kx;
                if (ix < 0 || ix >= x.w) continue;
                acc += x.at(in, ci, iy, ix) *
                       w[static_cast<std::size_t>(((co * x.c + ci) * 3 + ky) * 3 + kx)];
              }
            }
          out.at(in, co, oy, ox) = acc;
        }
  return out;
}

inline void conv3x3_backward(const Tensor& x, std::span<const double> w, const Tensor& dout,
                             int stride, Tensor* dx, std::span<double> dw, std::span<double> db) {
  const int cout = dout.c;
  for (int in = 0; in < x.n; ++in)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < dout.h; ++oy)
        for (int ox = 0; ox < dout.w; ++ox) {
          double g = dout.at(in, co, oy, ox);
          if (g == 0.0) continue;
          db[static_cast<std::size_t>(co)] += g;
          for (int ci = 0; ci < x.c; ++ci)
            for (int ky = 0; ky < 3; ++ky) {
              int iy = oy * stride - 1 + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                int ix = ox * stride - 1 + kx;
                if (ix < 0 || ix >= x.w) continue;
                auto widx = static_cast<std::size_t>(((co * x.c + ci) * 3 + ky) * 3 + kx);
                dw[widx] += g * x.at(in, ci, iy, ix);
                if (dx != nullptr) dx->at(in, ci, iy, ix) += g * w[widx];
              }
            }
        }
}

// Depthwise 3x3 convolution, padding 1, no bias. w layout: [c][3][3].
inline Tensor depthwise3x3(const Tensor& x, std::span<const double> w, int stride = 1) {
  const int ho = conv_out_extent(x.h, stride), wo = conv_out_extent(x.w, stride);
  Tensor out(x.n, x.c, ho, wo);
  for (int in = 0; in < x.n; ++in)
    for (int ci = 0; ci < x.c; ++ci)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (int ky = 0; ky < 3; ++ky) {
            int iy = oy * stride - 1 + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ix = ox * stride - 1 + kx;
              if (ix < 0 || ix >= x.w) continue;
              acc += x.at(in, ci, iy, ix) * w[static_cast<std::size_t>((ci * 3 + ky) * 3 + kx)];
            }
          }
          out.at(in, ci, oy, ox) = acc;
        }
  return out;
}

inline void depthwise3x3_backward(const Tensor& x, std::span<const double> w, const Tensor& dout,
                                  int stride, Tensor* dx, std::span<double> dw) {
  for (int in = 0; in < x.n; ++in)
    for (int ci = 0; ci < x.c; ++ci)
      for (int oy = 0; oy < dout.h; ++oy)
        for (int ox = 0; ox < dout.w; ++ox) {
          double g = dout.at(in, ci, oy, ox);
          if (g == 0.0) continue;
          for (int ky = 0; ky < 3; ++ky) {
            int iy = oy * stride - 1 + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ix = ox * stride - 1 + kx;
              if (ix < 0 || ix >= x.w) continue;
              auto widx = static_cast<std::size_t>((ci * 3 + ky) * 3 + kx);
              dw[widx] += g * x.at(in, ci, iy, ix);
              if (dx != nullptr) dx->at(in, ci, iy, ix) += g * w[widx];
            }
          }
        }
}

// 1x1 convolution with bias. w layout: [cout][cin], b: [cout].
inline Tensor pointwise(const Tensor& x, std::span<const double> w, std::span<const double> b,
                        int cout) {
  Tensor out(x.n, cout, x.h, x.w);
  const int hw = x.h * x.w;
  for (int in = 0; in < x.n; ++in)
    for (int co = 0; co < cout; ++co) {
      double* op = out.ptr(in, co);
      for (int p = 0; p < hw; ++p) op[p] = b[static_cast<std::size_t>(co)];
      for (int ci = 0; ci < x.c; ++ci) {
        double wv = w[static_cast<std::size_t>(co * x.c + ci)];
        const double* ip = x.ptr(in, ci);
        for (int p = 0; p < hw; ++p) op[p] += wv * ip[p];
      }
    }
  return out;
}

inline void pointwise_backward(const Tensor& x, std::span<const double> w, const Tensor& dout,
                               Tensor* dx, std::span<double> dw, std::span<double> db) {
  const int hw = x.h * x.w;
  for (int in = 0; in < x.n; ++in)
    for (int co = 0; co < dout.c; ++co) {
      const double* gp = dout.ptr(in, co);
      double gsum = 0.0;
      for (int p = 0; p < hw; ++p) gsum += gp[p];
      db[static_cast<std::size_t>(co)] += gsum;
      for (int ci = 0; ci < x.c; ++ci) {
        const double* ip = x.ptr(in, ci);
        double wv = w[static_cast<std::size_t>(co * x.c + ci)];
        double dwv = 0.0;
        double* dxp = dx != nullptr ? dx->ptr(in, ci) : nullptr;
        for (int p = 0; p < hw; ++p) {
          dwv += gp[p] * ip[p];
          if (dxp != nullptr) dxp[p] += gp[p] * wv;
        }
        dw[static_cast<std::size_t>(co * x.c + ci)] += dwv;
      }
    }
}

inline Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.v) v = v > 0.0 ? v : 0.0;
  return out;
}

// Mask from the pre-activation input; derivative at exactly 0 is 0.
inline void relu_backward(const Tensor& pre, const Tensor& dout, Tensor* dx) {
  for (std::size_t i = 0; i < pre.v.size(); ++i)
    if (pre.v[i] > 0.0) dx->v[i] += dout.v[i];
}

// 2x2 average pooling, stride 2, no padding (trailing odd row/col dropped).
inline Tensor avgpool2x2(const Tensor& x) {
  Tensor out(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in)
    for (int ci = 0; ci < x.c; ++ci)
      for (int oy = 0; oy < out.h; ++oy)
        for (int ox = 0; ox < out.w; ++ox)
          out.at(in, ci, oy, ox) =
              0.25 * (x.at(in, ci, 2 * oy, 2 * ox) + x.at(in, ci, 2 * oy, 2 * ox + 1) +
                      x.at(in, ci, 2 * oy + 1, 2 * ox) + x.at(in, ci, 2 * oy + 1, 2 * ox + 1));
  return out;
}

inline void avgpool2x2_backward(const Tensor& dout, Tensor* dx) {
  for (int in = 0; in < dout.n; ++in)
    for (int ci = 0; ci < dout.c; ++ci)
      for (int oy = 0; oy < dout.h; ++oy)
        for (int ox = 0; ox < dout.w; ++ox) {
          double g = 0.25 * dout.at(in, ci, oy, ox);
          dx->at(in, ci, 2 * oy, 2 * ox) += g;
          dx->at(in, ci, 2 * oy, 2 * ox + 1) += g;
          dx->at(in, ci, 2 * oy + 1, 2 * ox) += g;
          dx->at(in, ci, 2 * oy + 1, 2 * ox + 1) += g;
        }
}

// Global average pooling to (N, C).
inline Tensor global_avg_pool(const Tensor& x) {
  Tensor out = Tensor::matrix(x.n, x.c);
  const double inv = 1.0 / (x.h * x.w);
  for (int in = 0; in < x.n; ++in)
    for (int ci = 0; ci < x.c; ++ci) {
      double acc = 0.0;
      const double* ip = x.ptr(in, ci);
      for (int p = 0; p < x.h * x.w; ++p) acc += ip[p];
      out.at(in, ci, 0, 0) = acc * inv;
    }
  return out;
}

inline void global_avg_pool_backward(const Tensor& dout, Tensor* dx) {
  const double inv = 1.0 / (dx->h * dx->w);
  for (int in = 0; in < dout.n; ++in)
    for (int ci = 0; ci < dout.c; ++ci) {
      double g = dout.at(in, ci, 0, 0) * inv;
      double* dp = dx->ptr(in, ci);
      for (int p = 0; p < dx->h * dx->w; ++p) dp[p] += g;
    }
}

// Affine layer over (N, D) matrices. w: [k][d], b: [k].
inline Tensor affine(const Tensor& x, std::span<const double> w, std::span<const double> b,
                     int k) {
  Tensor out = Tensor::matrix(x.n, k);
  for (int in = 0; in < x.n; ++in)
    for (int j = 0; j < k; ++j) {
      double acc = b[static_cast<std::size_t>(j)];
      for (int d = 0; d < x.c; ++d)
        acc += x.at(in, d, 0, 0) * w[static_cast<std::size_t>(j * x.c + d)];
      out.at(in, j, 0, 0) = acc;
    }
  return out;
}

inline void affine_backward(const Tensor& x, std::span<const double> w, const Tensor& dout,
                            Tensor* dx, std::span<double> dw, std::span<double> db) {
  for (int in = 0; in < x.n; ++in)
    for (int j = 0; j < dout.c; ++j) {
      double g = dout.at(in, j, 0, 0);
      db[static_cast<std::size_t>(j)] += g;
      for (int d = 0; d < x.c; ++d) {
        dw[static_cast<std::size_t>(j * x.c + d)] += g * x.at(in, d, 0, 0);
        if (dx != nullptr) dx->at(in, d, 0, 0) += g * w[static_cast<std::size_t>(j * x.c + d)];
      }
    }
}

// Softmax cross-entropy, mean over the batch, computed in log space so
// extreme logits cannot underflow into an infinite loss. Fills dlogits with
// (softmax - onehot) / N.
inline double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                    Tensor* dlogits) {
  const int n = logits.n, k = logits.c;
  if (dlogits != nullptr) *dlogits = Tensor::matrix(n, k);
  double loss = 0.0;
  const double inv_n = 1.0 / n;
  std::vector<double> probs(static_cast<std::size_t>(k));
  for (int in = 0; in < n; ++in) {
    double mx = logits.at(in, 0, 0, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at(in, j, 0, 0));
    double z = 0.0;
    for (int j = 0; j < k; ++j) {
      probs[static_cast<std::size_t>(j)] = std::exp(logits.at(in, j, 0, 0) - mx);
      z += probs[static_cast<std::size_t>(j)];
    }
    int y = labels[static_cast<std::size_t>(in)];
    loss -= (logits.at(in, y, 0, 0) - mx - std::log(z)) * inv_n;
    if (dlogits != nullptr)
      for (int j = 0; j < k; ++j)
        dlogits->at(in, j, 0, 0) =
            (probs[static_cast<std::size_t>(j)] / z - (j == y ? 1.0 : 0.0)) * inv_n;
  }
  return loss;
}

}  // namespace bfnas::micronet
