#pragma once

namespace dampwave {

enum class Band { Low, Mid, High };

/// Smooth radial frequency cutoffs.
///
///   chi_L = 1 on [0, 1/2], 0 on [3/4, inf)
///   chi_H = 0 on [0, 2],   1 on [3, inf)
///   chi_M = 1 - chi_L - chi_H
///
/// Transitions use the C-infinity step psi(s) = h(s) / (h(s) + h(1 - s)),
/// h(s) = exp(-1/s), mapped affinely onto each band. Values that are close to
/// zero are computed without cancellation via psi(1 - s) = 1 - psi(s).
double eval_cutoff(Band which, double r);

/// d/dr or d^2/dr^2 of chi_L or chi_H (order 1 or 2).
double eval_cutoff_derivative(Band which, int order, double r);

namespace cutoff_detail {
/// psi and its first two derivatives on [0, 1].
double step(double s);
double step_d1(double s);
double step_d2(double s);
}  // namespace cutoff_detail

}  // namespace dampwave
