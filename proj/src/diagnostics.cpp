#include "dampwave/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dampwave/parallel.hpp"
#include "dampwave/propagators.hpp"

namespace dampwave {

namespace {

double decay_exponent(int n, double q) { return -0.5 * n * (1.0 - 1.0 / q); }

std::vector<double> norm_series(const StateHistory& h, double q) {
  if (q == 1.0) return h.u_l1;
  if (q == 2.0) return h.u_l2;
  if (std::isinf(q)) return h.u_inf;
  if (!h.has_fields()) throw DomainError("decay_report: q = " + std::to_string(q) + " needs stored fields");
  std::vector<double> out;
  for (const auto& s : h.snapshots) out.push_back(lq_norm(s.u, q));
  return out;
}

// Trapezoid weights for uniform nodes lo..hi with spacing h.
double trapezoid_weight(std::size_t k, std::size_t lo, std::size_t hi, double h) {
  if (hi == lo) return 0.0;
  return (k == lo || k == hi) ? 0.5 * h : h;
}

double trapezoid(std::span<const double> t, std::span<const double> y, std::size_t lo, std::size_t hi) {
  double acc = 0.0;
  for (std::size_t k = lo; k < hi; ++k) acc += 0.5 * (t[k + 1] - t[k]) * (y[k] + y[k + 1]);
  return acc;
}

}  // namespace

std::pair<double, std::size_t> fit_power_law(std::span<const double> t, std::span<const double> y, FitWindow window) {
  double lo = window.t_min, hi = window.t_max;
  if (lo < 0.0 || hi < 0.0) {
    const double last = t.empty() ? 0.0 : t.back();
    if (lo < 0.0) lo = 0.5 * last;
    if (hi < 0.0) hi = last;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < lo - 1e-12 || t[k] > hi + 1e-12 || !(y[k] > 0.0)) continue;
    const double x = std::log1p(t[k]), v = std::log(y[k]);
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
    ++count;
  }
  if (count < 2) return {std::nan(""), count};
  const double denom = count * sxx - sx * sx;
  return {(count * sxy - sx * sy) / denom, count};
}

DecayReport decay_report(const StateHistory& history, std::span<const double> q_list, FitWindow window) {
  if (history.outcome != Outcome::Completed) throw DomainError("decay_report: history ended in blowup");
  if (history.size() < 40) throw DomainError("decay_report: need at least 40 snapshots");
  const int n = history.grid.dim();
  DecayReport report;
  for (double q : q_list) {
    if (!(q >= 1.0)) throw DomainError("decay_report: q must be >= 1");
    DecaySeries s;
    s.q = q;
    s.times = history.times;
    s.norms = norm_series(history, q);
    s.expected_exponent = decay_exponent(n, q);
    const auto [slope, used] = fit_power_law(s.times, s.norms, window);
    if (used < 20) throw DomainError("decay_report: fewer than 20 snapshots in the fit window");
    s.fitted_exponent = slope;
    s.fit_points = used;
    for (std::size_t k = 0; k < s.times.size(); ++k)
      s.scaled_sup = std::max(s.scaled_sup, std::pow(1.0 + s.times[k], -s.expected_exponent) * s.norms[k]);
    report.series.push_back(std::move(s));
  }
  return report;
}

MassReport mass_M(const Field& u0, const Field& u1, const StateHistory& history) {
  if (history.outcome != Outcome::Completed) throw DomainError("mass_M: history ended in blowup");
  if (!(u0.grid == history.grid) || !(u1.grid == history.grid)) throw DomainError("mass_M: grid mismatch");
  MassReport r;
  r.linear = integral(u0) + integral(u1);
  r.expected_gamma = 0.5 * history.grid.dim() * (history.p - 1.0);
  const auto& t = history.times;
  const auto& f = history.f_mass_series;
  if (t.size() >= 2) r.nonlinear_truncated = trapezoid(t, f, 0, t.size() - 1);
  r.total_truncated = r.linear + r.nonlinear_truncated;
  r.total = r.total_truncated;

  const std::size_t start = t.size() - t.size() / 4;
  const bool any_mass = std::any_of(f.begin() + start, f.end(), [](double v) { return v != 0.0; });
  if (t.size() < 8 || !any_mass) return r;
  FitWindow w{t[start], t.back()};
  const auto [slope, used] = fit_power_law(t, f, w);
  r.fitted_gamma = -slope;
  if (!(r.fitted_gamma > 1.0) || used < 2) {
    r.flagged = true;
    return r;
  }
  // A from the last sample keeps the extrapolation anchored at the data.
  const double T = t.back();
  const double a = f.back() * std::pow(1.0 + T, r.fitted_gamma);
  r.tail = a * std::pow(1.0 + T, 1.0 - r.fitted_gamma) / (r.fitted_gamma - 1.0);
  r.extrapolated = true;
  r.total = r.total_truncated + r.tail;
  return r;
}

double x_norm(const StateHistory& history) {
  const double half_n = 0.5 * history.grid.dim();
  double sup = 0.0;
  for (std::size_t k = 0; k < history.size(); ++k) {
    const double v = history.u_l1[k] + std::pow(1.0 + history.times[k], half_n) * history.u_inf[k];
    if (!std::isfinite(v)) return v;
    sup = std::max(sup, v);
  }
  return sup;
}

ProfileReport profile_report(const StateHistory& history, const Field& u0, const Field& u1,
                             std::span<const double> q_list, std::span<const double> a_times) {
  if (!history.has_fields()) throw DomainError("profile_report: history has no stored fields");
  ProfileReport r;
  r.mass = mass_M(u0, u1, history);
  r.q_list.assign(q_list.begin(), q_list.end());
  const Grid& g = history.grid;
  const int n = g.dim();
  const double M = r.mass.total;

  r.scaled_error.assign(q_list.size(), {});
  for (std::size_t k = 0; k < history.size(); ++k) {
    const double t = history.times[k];
    if (t <= 0.0 || t > g.validity_window()) continue;
    r.times.push_back(t);
    const Field gt = heat_kernel_field(g, t, M);
    Field diff = history.snapshots[k].u;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= gt.values[i];
    for (std::size_t qi = 0; qi < q_list.size(); ++qi)
      r.scaled_error[qi].push_back(std::pow(t, -decay_exponent(n, q_list[qi])) * lq_norm(diff, q_list[qi]));
  }

  if (a_times.empty()) return r;
  if (history.forcing.size() != history.size()) throw DomainError("profile_report: history has no forcing spectra");
  const auto& times = history.times;
  const double step = times.size() > 1 ? times[1] - times[0] : 0.0;
  const auto s = squared_frequencies(g);
  const double cn = std::pow(2.0 * std::numbers::pi, -0.5 * n);
  const double m_nl = r.mass.nonlinear_truncated + r.mass.tail;
  for (auto& part : r.a_norms) part.assign(q_list.size(), {});

  for (double t : a_times) {
    const long idx = std::lround(t / step);
    if (step <= 0.0 || idx < 2 || idx % 2 != 0 || static_cast<std::size_t>(idx) >= times.size() ||
        std::abs(times[idx] - t) > 1e-9 * std::max(1.0, t) || std::abs(times[idx] - idx * step) > 1e-9 * t)
      throw DomainError("profile_report: A-decomposition time " + std::to_string(t) +
                        " is not an even-indexed uniform snapshot");
    const std::size_t m = idx, half = idx / 2;
    std::array<Spectrum, kProfileParts> parts;
    for (auto& p : parts) p = Spectrum(g);
    Spectrum whole(g);
    // Mass of the nonlinearity beyond t/2.
    const double late_mass = trapezoid(times, history.f_mass_series, half, times.size() - 1) + r.mass.tail;
    for (std::size_t k = 0; k <= m; ++k) {
      const double tau = times[k];
      const auto& F = history.forcing[k].coeffs;
      const double w_early = k <= half ? trapezoid_weight(k, 0, half, step) : 0.0;
      const double w_late = k >= half ? trapezoid_weight(k, half, m, step) : 0.0;
      const double w_all = trapezoid_weight(k, 0, m, step);
      const Complex f0 = F[0];
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double kk = k1(t - tau, s[i]);
        const double hh = heat(t - tau, s[i]);
        const double ht = heat(t, s[i]);
        whole.coeffs[i] += w_all * kk * F[i];
        if (w_early != 0.0) {
          parts[0].coeffs[i] += w_early * (kk - hh) * F[i];
          parts[2].coeffs[i] += w_early * (hh - ht) * F[i];
          parts[3].coeffs[i] += w_early * ht * (F[i] - f0);
        }
        if (w_late != 0.0) parts[1].coeffs[i] += w_late * kk * F[i];
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double ht = heat(t, s[i]);
      parts[4].coeffs[i] = -late_mass * cn * ht;
      whole.coeffs[i] -= m_nl * cn * ht;
    }
    Spectrum sum(g);
    std::array<Field, kProfileParts> fields;
    for (int j = 0; j < kProfileParts; ++j) {
      for (std::size_t i = 0; i < s.size(); ++i) sum.coeffs[i] += parts[j].coeffs[i];
      fields[j] = inverse(parts[j]);
    }
    for (std::size_t i = 0; i < s.size(); ++i) sum.coeffs[i] -= whole.coeffs[i];
    const Field residue = inverse(sum);
    r.a_times.push_back(t);
    for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
      for (int j = 0; j < kProfileParts; ++j) r.a_norms[j][qi].push_back(lq_norm(fields[j], q_list[qi]));
      r.completeness_error = std::max(r.completeness_error, lq_norm(residue, q_list[qi]));
    }
  }
  return r;
}

std::string classify_tail(std::span<const double> scaled) {
  if (scaled.size() < 4) throw DomainError("classify_tail: series too short");
  for (std::size_t k = scaled.size() / 2; k + 1 < scaled.size(); ++k)
    if (scaled[k + 1] > scaled[k] * (1.0 + 1e-9)) return "growing";
  return "decayed";
}

std::vector<FujitaEntry> fujita_classify(int n, std::span<const double> p_list, double amplitude, double horizon,
                                         const FujitaOptions& options) {
  if (!(amplitude > 0.0)) throw DomainError("fujita_classify: data must have positive mass (amplitude > 0)");
  if (p_list.empty()) throw DomainError("fujita_classify: empty p list");
  const double pf = 1.0 + 2.0 / n;
  const auto [lo, hi] = std::minmax_element(p_list.begin(), p_list.end());
  if (!(*lo < pf && *hi > pf))
    throw DomainError("fujita_classify: p list must straddle the Fujita exponent " + std::to_string(pf));
  const Grid grid = options.use_default_grid ? default_grid(n) : options.grid;
  if (grid.dim() != n) throw DomainError("fujita_classify: grid dimension differs from n");
  const Field data = gaussian_data(grid, amplitude, options.width);

  EvolveConfig base = default_evolve_config(n, horizon);
  if (options.dt > 0.0) base.dt = options.dt;
  base.output_every = options.output_every > 0
                          ? options.output_every
                          : std::max(1, static_cast<int>(std::lround(horizon / base.dt / 200.0)));
  base.store_fields = false;
  for (double p : p_list) {
    EvolveConfig cfg = base;
    cfg.p = p;
    validate(cfg, grid);
  }

  std::vector<FujitaEntry> out(p_list.size());
  parallel_for(p_list.size(), options.workers, [&](std::size_t i) {
    EvolveConfig cfg = base;
    cfg.p = p_list[i];
    const StateHistory h = nonlinear_evolve(data, data, cfg);
    FujitaEntry e;
    e.p = cfg.p;
    e.times = h.times;
    for (std::size_t k = 0; k < h.size(); ++k) e.scaled_sup.push_back(std::pow(1.0 + h.times[k], 0.5 * n) * h.u_inf[k]);
    e.boundary_flagged = h.boundary_flagged();
    if (h.outcome == Outcome::Blowup) {
      e.classification = "blowup";
      e.blowup_time = h.blowup_time;
    } else {
      e.classification = classify_tail(e.scaled_sup);
    }
    out[i] = std::move(e);
  });
  return out;
}

}  // namespace dampwave
