#include <algorithm>
#include <cmath>
#include <vector>

#include "catalyst/kernels.hpp"

namespace catalyst::kernels::scalar {
namespace {

double sum(std::span<const float> x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v);
  return acc;
}

double sum_sq_dev(std::span<const float> x, double center) {
  double acc = 0.0;
  for (float v : x) {
    const double d = static_cast<double>(v) - center;
    acc += d * d;
  }
  return acc;
}

float max(std::span<const float> x) {
  float m = x[0];
  for (float v : x.subspan(1)) m = std::max(m, v);
  return m;
}

double clipped_sum(std::span<const double> x, double cap) {
  double acc = 0.0;
  for (double v : x) acc += std::min(v, cap);
  return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, std::span<const float> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += alpha * static_cast<double>(x[i]);
  }
}

}  // namespace

double median_by_selection(std::span<const float> x) {
  std::vector<float> v(x.begin(), x.end());
  const std::size_t hi = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + hi, v.end());
  const double upper = v[hi];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + hi);
  return 0.5 * (lower + upper);
}

namespace {

// x[i] sits at every rank in [#{x < x[i]}, #{x <= x[i]}).
double median(std::span<const float> x) {
  const std::size_t n = x.size();
  if (n > kRankCountLimit) return median_by_selection(x);
  const std::size_t lo = (n - 1) / 2, hi = n / 2;
  float a = 0.0f, b = 0.0f;
  bool have_a = false, have_b = false;
  for (std::size_t i = 0; i < n && !(have_a && have_b); ++i) {
    std::size_t lt = 0, le = 0;
    for (std::size_t j = 0; j < n; ++j) {
      lt += x[j] < x[i];
      le += x[j] <= x[i];
    }
    if (!have_a && lt <= lo && lo < le) {
      a = x[i];
      have_a = true;
    }
    if (!have_b && lt <= hi && hi < le) {
      b = x[i];
      have_b = true;
    }
  }
  return 0.5 * (static_cast<double>(a) + static_cast<double>(b));
}

double entropy(std::span<const float> x, double total) {
  double h = 0.0;
  for (float v : x) {
    if (v <= 0.0f) continue;
    const double p = static_cast<double>(v) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

const KernelTable kTable{Isa::kScalar, sum,           sum_sq_dev,
                         max,          clipped_sum,   squared_distance,
                         axpy,         median,        entropy};

}  // namespace catalyst::kernels::scalar
