#include <algorithm>
#include <limits>

#include "navscale/curation.hpp"

namespace navscale::curation {

double path_length(std::span<const PoseSE2> poses, std::size_t start, std::size_t end) {
  double length = 0.0;
  for (std::size_t i = start + 1; i <= end && i < poses.size(); ++i) {
    length += distance(poses[i - 1].position(), poses[i].position());
  }
  return length;
}

double peak_prominence(std::span<const double> f, std::size_t i) {
  const double height = f[i];
  double left_min = height;
  for (std::size_t j = i; j-- > 0;) {
    if (f[j] > height) break;
    left_min = std::min(left_min, f[j]);
  }
  double right_min = height;
  for (std::size_t j = i + 1; j < f.size(); ++j) {
    if (f[j] > height) break;
    right_min = std::min(right_min, f[j]);
  }
  return height - std::max(left_min, right_min);
}

std::vector<IndexRange> segment_goals(std::span<const PoseSE2> poses, const SegmentConfig& config) {
  std::vector<IndexRange> segments;
  const std::size_t n = poses.size();
  if (n < 2) return segments;

  std::vector<double> f;
  std::size_t start = 0;
  while (start + 1 < n) {
    const Point2 origin = poses[start].position();
    f.resize(n - start);
    for (std::size_t i = start; i < n; ++i) f[i - start] = distance(origin, poses[i].position());

    std::size_t split = 0;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      if (!(f[i] > f[i - 1] && f[i] >= f[i + 1])) continue;
      if (peak_prominence(f, i) >= config.min_prominence_m) {
        split = i;
        break;
      }
    }
    if (split == 0) {
      if (path_length(poses, start, n - 1) >= config.min_length_m) segments.push_back({start, n - 1});
      break;
    }
    segments.push_back({start, start + split});
    start += split;
  }
  return segments;
}

}  // namespace navscale::curation
