#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bfnas::micronet {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense NCHW tensor of doubles. 2-D data (N, D) is stored as (N, D, 1, 1).
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

  static Tensor matrix(int rows, int cols) { return Tensor(rows, cols, 1, 1); }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  double& at(int in, int ic, int iy, int ix) {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  double at(int in, int ic, int iy, int ix) const {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  double* ptr(int in, int ic) { return &v[(static_cast<std::size_t>(in) * c + ic) * h * w]; }
  const double* ptr(int in, int ic) const {
    return &v[(static_cast<std::size_t>(in) * c + ic) * h * w];
  }

  Tensor& operator+=(const Tensor& o) {
    assert(same_shape(o));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
};

}  // namespace bfnas::micronet
