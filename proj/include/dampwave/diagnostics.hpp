#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dampwave/evolution.hpp"

namespace dampwave {

/// Time range for power-law fits. Negative bounds select the tail half of
/// the recorded history.
struct FitWindow {
  double t_min = -1.0;
  double t_max = -1.0;
};

struct DecaySeries {
  double q = 1.0;
  std::vector<double> times;
  std::vector<double> norms;
  /// Slope of log ||u||_q against log(1 + t) on the fit window.
  double fitted_exponent = 0.0;
  /// -n/2 (1 - 1/q).
  double expected_exponent = 0.0;
  /// sup_t (1 + t)^{n/2 (1 - 1/q)} ||u(t)||_q.
  double scaled_sup = 0.0;
  std::size_t fit_points = 0;
};

struct DecayReport {
  std::vector<DecaySeries> series;
};

/// Least-squares slope of log y against log(1 + t) for t in the window.
/// Returns the slope and the number of points used.
std::pair<double, std::size_t> fit_power_law(std::span<const double> t, std::span<const double> y, FitWindow window);

/// Requires a completed history with >= 40 snapshots and >= 20 points in
/// the fit window. q in {1, 2, inf} uses the recorded series; other q need
/// stored fields.
DecayReport decay_report(const StateHistory& history, std::span<const double> q_list, FitWindow window = {});

struct MassReport {
  /// int (u0 + u1).
  double linear = 0.0;
  /// Trapezoid of f_mass_series over the simulated horizon.
  double nonlinear_truncated = 0.0;
  /// int_T^inf A (1 + t)^{-gamma} dt from the tail fit (0 when not used).
  double tail = 0.0;
  double fitted_gamma = 0.0;
  /// n (p - 1) / 2.
  double expected_gamma = 0.0;
  bool extrapolated = false;
  /// Set when the fitted gamma is <= 1 and the tail was dropped.
  bool flagged = false;
  double total = 0.0;
  double total_truncated = 0.0;
};

MassReport mass_M(const Field& u0, const Field& u1, const StateHistory& history);

/// sup over snapshots of ||u||_1 + (1 + t)^{n/2} ||u||_inf.
double x_norm(const StateHistory& history);

inline constexpr int kProfileParts = 5;

struct ProfileReport {
  MassReport mass;
  std::vector<double> q_list;
  /// Snapshot times t > 0 used for the profile error.
  std::vector<double> times;
  /// scaled_error[qi][k] = t^{n/2 (1 - 1/q)} ||u(t) - M G_t||_q.
  std::vector<std::vector<double>> scaled_error;
  /// Times at which A_1 .. A_5 were evaluated.
  std::vector<double> a_times;
  /// a_norms[j][qi][k] = ||A_{j+1}(a_times[k])||_q.
  std::array<std::vector<std::vector<double>>, kProfileParts> a_norms;
  /// max over a_times and q of ||sum A_j - (Duhamel - M_nl G_t)||_q.
  double completeness_error = 0.0;
};

/// Requires stored fields, and stored forcing spectra when a_times is
/// non-empty. Each a_time must be a snapshot time with an even index so that
/// t/2 is also a snapshot.
ProfileReport profile_report(const StateHistory& history, const Field& u0, const Field& u1,
                             std::span<const double> q_list, std::span<const double> a_times = {});

struct FujitaOptions {
  /// Grid used for the sweep; default_grid(n) when unset.
  bool use_default_grid = true;
  Grid grid;
  double width = 1.0;
  double dt = 0.0;  // 0: default for the dimension
  int output_every = 0;  // 0: about 200 snapshots
  unsigned workers = 0;
};

struct FujitaEntry {
  double p = 0.0;
  /// "decayed", "growing" or "blowup".
  std::string classification;
  double blowup_time = 0.0;
  std::vector<double> times;
  /// (1 + t)^{n/2} ||u(t)||_inf.
  std::vector<double> scaled_sup;
  bool boundary_flagged = false;
};

/// Tail test on (1 + t)^{n/2} ||u||_inf over the last half of the horizon.
std::string classify_tail(std::span<const double> scaled);

/// Runs u0 = u1 = amplitude * exp(-|x|^2 / width^2) for every p.
/// Requires amplitude > 0 and min(p) < 1 + 2/n < max(p).
std::vector<FujitaEntry> fujita_classify(int n, std::span<const double> p_list, double amplitude, double horizon,
                                         const FujitaOptions& options = {});

}  // namespace dampwave
