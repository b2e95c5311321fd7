#include "dampwave/cutoffs.hpp"

#include <cmath>

#include "dampwave/spectral.hpp"

namespace dampwave {
namespace cutoff_detail {
namespace {

// psi(s) and psi(1 - s) together; both accurate near 0.
struct StepPair {
  double psi;
  double complement;
};

StepPair step_pair(double s) {
  if (s <= 0.0) return {0.0, 1.0};
  if (s >= 1.0) return {1.0, 0.0};
  const double e = std::exp(1.0 / s - 1.0 / (1.0 - s));
  if (std::isinf(e)) return {0.0, 1.0};
  return {1.0 / (1.0 + e), e / (1.0 + e)};
}

}  // namespace

double step(double s) { return step_pair(s).psi; }

double step_d1(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const auto [psi, comp] = step_pair(s);
  const double g = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
  return g * psi * comp;
}

double step_d2(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const auto [psi, comp] = step_pair(s);
  const double w = psi * comp;
  if (w == 0.0) return 0.0;
  const double u = 1.0 - s;
  const double g = 1.0 / (s * s) + 1.0 / (u * u);
  const double dg = -2.0 / (s * s * s) + 2.0 / (u * u * u);
  return dg * w + g * g * w * (comp - psi);
}

}  // namespace cutoff_detail

namespace {

constexpr double kLowInner = 0.5;
constexpr double kLowOuter = 0.75;
constexpr double kHighInner = 2.0;
constexpr double kHighOuter = 3.0;
constexpr double kLowScale = 1.0 / (kLowOuter - kLowInner);
constexpr double kHighScale = 1.0 / (kHighOuter - kHighInner);

void check_radius(double r) {
  if (!(r >= 0.0)) throw DomainError("cutoff: radius must be nonnegative");
}

}  // namespace

double eval_cutoff(Band which, double r) {
  check_radius(r);
  using cutoff_detail::step;
  const double sl = (r - kLowInner) * kLowScale;
  const double sh = (r - kHighInner) * kHighScale;
  switch (which) {
    case Band::Low: return step(1.0 - sl);
    case Band::High: return step(sh);
    case Band::Mid:
      if (r < kHighInner) return step(sl);
      return step(1.0 - sh);
  }
  return 0.0;
}

double eval_cutoff_derivative(Band which, int order, double r) {
  check_radius(r);
  if (order != 1 && order != 2) throw DomainError("eval_cutoff_derivative: order must be 1 or 2");
  using namespace cutoff_detail;
  switch (which) {
    case Band::Low: {
      const double s = 1.0 - (r - kLowInner) * kLowScale;
      return order == 1 ? -kLowScale * step_d1(s) : kLowScale * kLowScale * step_d2(s);
    }
    case Band::High: {
      const double s = (r - kHighInner) * kHighScale;
      return order == 1 ? kHighScale * step_d1(s) : kHighScale * kHighScale * step_d2(s);
    }
    case Band::Mid: break;
  }
  throw DomainError("eval_cutoff_derivative: only the L and H profiles are supported");
}

}  // namespace dampwave
