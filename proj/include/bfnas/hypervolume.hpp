#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "bfnas/evo.hpp"

namespace bfnas {

struct PointBeyondReferenceError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Keep only points not dominated within the set (duplicates collapse to one).
inline std::vector<ObjectiveVector> nondominated_subset(std::vector<ObjectiveVector> pts) {
  std::vector<ObjectiveVector> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(pts[j], pts[i])) keep = false;
      if (pts[j] == pts[i] && j < i) keep = false;
    }
    if (keep) out.push_back(pts[i]);
  }
  return out;
}

inline double hv2d(std::vector<ObjectiveVector> pts, double rx, double ry) {
  pts = nondominated_subset(std::move(pts));
  std::sort(pts.begin(), pts.end());
  double volume = 0.0;
  double prev_y = ry;
  for (const auto& p : pts) {
    volume += (rx - p[0]) * (prev_y - p[1]);
    prev_y = p[1];
  }
  return volume;
}

}  // namespace detail

// Exact hypervolume of a minimization front against a reference point: 2D by
// the sorted staircase, 3D by slicing along the third objective and summing
// 2D areas per slab.
inline double hypervolume(const std::vector<ObjectiveVector>& points,
                          const ObjectiveVector& reference) {
  if (reference.size() != 2 && reference.size() != 3)
    throw std::invalid_argument("hypervolume: reference must be 2D or 3D");
  for (const auto& p : points) {
    if (p.size() != reference.size())
      throw LengthMismatchError("hypervolume: point/reference length mismatch");
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > reference[i])
        throw PointBeyondReferenceError("hypervolume: point beyond reference");
  }
  if (points.empty()) return 0.0;

  if (reference.size() == 2) return detail::hv2d(points, reference[0], reference[1]);

  auto pts = detail::nondominated_subset(points);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });
  double volume = 0.0;
  std::vector<ObjectiveVector> slab;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    slab.push_back({pts[i][0], pts[i][1]});
    double z_hi = (i + 1 < pts.size()) ? pts[i + 1][2] : reference[2];
    if (z_hi > pts[i][2])
      volume += (z_hi - pts[i][2]) * detail::hv2d(slab, reference[0], reference[1]);
  }
  return volume;
}

}  // namespace bfnas
