#include "dampwave/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dampwave/diagnostics.hpp"
#include "dampwave/fft_engine.hpp"
#include "dampwave/propagators.hpp"

namespace dampwave {

bool StateHistory::boundary_flagged() const {
  return std::any_of(boundary_fraction.begin(), boundary_fraction.end(), [](double f) { return f > 1e-3; });
}

void validate(const EvolveConfig& cfg, const Grid& grid) {
  if (!(cfg.p > 1.0) || !std::isfinite(cfg.p)) throw DomainError("EvolveConfig.p must be > 1");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw DomainError("EvolveConfig.dt must be positive");
  if (!(cfg.t_end > 0.0)) throw DomainError("EvolveConfig.t_end must be positive");
  if (cfg.t_end > grid.validity_window() * (1 + 1e-12))
    throw DomainError("EvolveConfig.t_end exceeds the validity window " + std::to_string(grid.validity_window()));
  const double steps = cfg.t_end / cfg.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw DomainError("EvolveConfig.t_end must be an integer multiple of dt");
  if (!(cfg.dealias_factor >= 1.0)) throw DomainError("EvolveConfig.dealias_factor must be >= 1");
  grid.refined(cfg.dealias_factor);
  if (!(cfg.blowup_threshold >= 0.0)) throw DomainError("EvolveConfig.blowup_threshold must be >= 0");
  if (cfg.output_every < 1) throw DomainError("EvolveConfig.output_every must be >= 1");
  if (!(cfg.nonlinearity_scale >= 0.0) || !std::isfinite(cfg.nonlinearity_scale))
    throw DomainError("EvolveConfig.nonlinearity_scale must be finite and >= 0");
}

EvolveConfig default_evolve_config(int dim, double t_end) {
  EvolveConfig cfg;
  cfg.dt = dim == 1 ? 0.05 : 0.1;
  cfg.t_end = t_end;
  cfg.output_every = std::max(1, static_cast<int>(std::lround(t_end / cfg.dt / 200.0)));
  return cfg;
}

namespace {

using CVec = std::vector<Complex>;

void check_pair(const Field& u0, const Field& u1) {
  if (!(u0.grid == u1.grid)) throw DomainError("initial data live on different grids");
  if (u0.values.size() != u0.grid.size() || u1.values.size() != u1.grid.size())
    throw DomainError("initial data length does not match grid");
  for (const Field* f : {&u0, &u1})
    for (double v : f->values)
      if (!std::isfinite(v)) throw DomainError("initial data contain non-finite values");
}

double power(double a, double p) {
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  if (p == 4.0) return (a * a) * (a * a);
  return std::pow(a, p);
}

// |u + d|^p - |u|^p without cancellation when d is small against u.
double power_difference(double u, double d, double p) {
  if (u != 0.0 && std::abs(d) < 0.5 * std::abs(u)) return power(std::abs(u), p) * std::expm1(p * std::log1p(d / u));
  return power(std::abs(u + d), p) - power(std::abs(u), p);
}

// Exact per-mode propagation and Duhamel weights for one step of size h.
struct StepCoefficients {
  std::vector<double> s00, s01, s10, s11, w0u, w1u, w0v, w1v;

  StepCoefficients(const Grid& grid, double h) {
    const auto s = squared_frequencies(grid);
    const std::size_t n = s.size();
    for (auto* v : {&s00, &s01, &s10, &s11, &w0u, &w1u, &w0v, &w1v}) v->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Transfer tr = transfer(h, s[i]);
      s00[i] = tr.uu;
      s01[i] = tr.uv;
      s10[i] = tr.vu;
      s11[i] = tr.vv;
      w0u[i] = k1_integral(h, s[i]);
      w1u[i] = k1_ramp_integral(h, s[i]);
      w0v[i] = tr.uv;
      w1v[i] = w0u[i] / h;
    }
  }
};

struct ForcingStats {
  double max_abs = 0.0;
  double mass = 0.0;
  double l1 = 0.0;
  bool finite = true;
};

// Evaluates scale * |u|^p (or its increment) on the refined grid.
class NonlinearTerm {
 public:
  NonlinearTerm(const Grid& coarse, double factor, double p, double scale)
      : coarse_(coarse), fine_(coarse.refined(factor)), p_(p), scale_(scale), a_(fine_.size()), b_(fine_.size()) {}

  ForcingStats evaluate(const CVec& uhat, CVec& fhat) {
    to_fine(uhat, a_);
    ForcingStats st;
    for (auto& z : a_) {
      const double u = z.real();
      if (!std::isfinite(u)) st.finite = false;
      st.max_abs = std::max(st.max_abs, std::abs(u));
      const double f = scale_ * power(std::abs(u), p_);
      st.mass += f;
      st.l1 += std::abs(f);
      z = Complex(f, 0.0);
    }
    st.mass *= fine_.cell_volume();
    st.l1 *= fine_.cell_volume();
    from_fine(a_, fhat);
    return st;
  }

  // F[f(u + d) - f(u)]; max_abs refers to u + d.
  ForcingStats increment(const CVec& uhat, const CVec& dhat, CVec& out) {
    to_fine(uhat, a_);
    to_fine(dhat, b_);
    ForcingStats st;
    for (std::size_t i = 0; i < a_.size(); ++i) {
      const double u = a_[i].real(), d = b_[i].real();
      if (!std::isfinite(u) || !std::isfinite(d)) st.finite = false;
      st.max_abs = std::max(st.max_abs, std::abs(u + d));
      a_[i] = Complex(scale_ * power_difference(u, d, p_), 0.0);
    }
    from_fine(a_, out);
    return st;
  }

 private:
  void to_fine(const CVec& in, CVec& work) {
    detail::pad_spectrum(coarse_, in, fine_, work);
    detail::from_continuum(fine_, work);
    detail::fft_inplace(fine_, work, +1);
  }
  void from_fine(CVec& work, CVec& out) {
    detail::fft_inplace(fine_, work, -1);
    detail::to_continuum(fine_, work);
    out.resize(coarse_.size());
    detail::truncate_spectrum(fine_, work, coarse_, out);
  }

  Grid coarse_, fine_;
  double p_, scale_;
  CVec a_, b_;
};

Field to_field(const Grid& grid, const CVec& coeffs) {
  Spectrum s(grid);
  s.coeffs = coeffs;
  return inverse(s);
}

void record_norms(StateHistory& h, const Field& u) {
  h.u_l1.push_back(lq_norm(u, 1.0));
  h.u_l2.push_back(lq_norm(u, 2.0));
  h.u_inf.push_back(lq_norm(u, kInfinity));
  h.boundary_fraction.push_back(boundary_mass_fraction(u));
}

double resolve_threshold(const EvolveConfig& cfg, const Field& u0, const Field& u1) {
  if (cfg.blowup_threshold > 0.0) return cfg.blowup_threshold;
  const double base = std::max(lq_norm(u0, kInfinity), lq_norm(u1, kInfinity));
  return base > 0.0 ? 1e6 * base : kInfinity;
}

}  // namespace

State linear_evolve(const Field& u0, const Field& u1, double t) {
  check_pair(u0, u1);
  if (!(t >= 0.0)) throw DomainError("linear_evolve: t must be nonnegative");
  const Grid& g = u0.grid;
  const Spectrum a = forward(u0), b = forward(u1);
  const auto s = squared_frequencies(g);
  Spectrum u(g), v(g);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Transfer tr = transfer(t, s[i]);
    u.coeffs[i] = tr.uu * a.coeffs[i] + tr.uv * b.coeffs[i];
    v.coeffs[i] = tr.vu * a.coeffs[i] + tr.vv * b.coeffs[i];
  }
  return {inverse(u), inverse(v), t};
}

StateHistory nonlinear_evolve(const Field& u0, const Field& u1, const EvolveConfig& cfg) {
  check_pair(u0, u1);
  const Grid& g = u0.grid;
  validate(cfg, g);
  const double threshold = resolve_threshold(cfg, u0, u1);
  const long steps = std::lround(cfg.t_end / cfg.dt);
  const bool active = cfg.nonlinearity_scale != 0.0;

  StateHistory hist;
  hist.grid = g;
  hist.p = cfg.p;
  hist.dt = cfg.dt;

  const StepCoefficients c(g, cfg.dt);
  NonlinearTerm nl(g, cfg.dealias_factor, cfg.p, cfg.nonlinearity_scale);
  CVec u = forward(u0).coeffs, v = forward(u1).coeffs;
  const std::size_t n = u.size();
  CVec f(n), fs(n), us(n);

  for (long m = 0;; ++m) {
    const double t = m * cfg.dt;
    ForcingStats st;
    if (active) st = nl.evaluate(u, f);
    const bool snapshot = m % cfg.output_every == 0 || m == steps;
    Field uf;
    bool blown = active && (!st.finite || st.max_abs > threshold);
    if (snapshot || blown) {
      uf = to_field(g, u);
      const double mx = lq_norm(uf, kInfinity);
      if (!std::isfinite(mx) || mx > threshold) blown = true;
    }
    if (snapshot || blown) {
      hist.times.push_back(t);
      record_norms(hist, uf);
      hist.f_mass_series.push_back(st.mass);
      hist.f_l1_series.push_back(st.l1);
      if (cfg.store_fields) hist.snapshots.push_back({uf, to_field(g, v), t});
      if (cfg.store_forcing) {
        Spectrum fsp(g);
        if (active) fsp.coeffs = f;
        hist.forcing.push_back(std::move(fsp));
      }
    }
    if (blown) {
      hist.outcome = Outcome::Blowup;
      hist.blowup_time = t;
      break;
    }
    if (m == steps) break;

    if (!active) {
      for (std::size_t i = 0; i < n; ++i) {
        const Complex a = u[i], b = v[i];
        u[i] = c.s00[i] * a + c.s01[i] * b;
        v[i] = c.s10[i] * a + c.s11[i] * b;
      }
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) us[i] = c.s00[i] * u[i] + c.s01[i] * v[i] + c.w0u[i] * f[i];
    nl.evaluate(us, fs);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex df = fs[i] - f[i];
      const Complex vn = c.s10[i] * u[i] + c.s11[i] * v[i] + c.w0v[i] * f[i] + c.w1v[i] * df;
      u[i] = us[i] + c.w1u[i] * df;
      v[i] = vn;
    }
  }
  return hist;
}

PicardResult picard_iterate(const Field& u0, const Field& u1, const EvolveConfig& cfg, int iterations) {
  check_pair(u0, u1);
  const Grid& g = u0.grid;
  validate(cfg, g);
  if (iterations < 2) throw DomainError("picard_iterate: iterations must be >= 2");
  const double threshold = resolve_threshold(cfg, u0, u1);
  const long steps = std::lround(cfg.t_end / cfg.dt);
  const std::size_t n = g.size();

  std::vector<long> snap_steps;
  for (long m = 0; m <= steps; ++m)
    if (m % cfg.output_every == 0 || m == steps) snap_steps.push_back(m);

  // Iterate -1 is zero; its increment is the linear solution.
  std::vector<CVec> u(steps + 1, CVec(n)), d(steps + 1, CVec(n));
  std::vector<CVec> v_snap(snap_steps.size(), CVec(n)), dv_snap(snap_steps.size(), CVec(n));
  {
    const Spectrum a = forward(u0), b = forward(u1);
    const auto s = squared_frequencies(g);
    for (long m = 0; m <= steps; ++m) {
      const double t = m * cfg.dt;
      for (std::size_t i = 0; i < n; ++i) {
        const Transfer tr = transfer(t, s[i]);
        d[m][i] = tr.uu * a.coeffs[i] + tr.uv * b.coeffs[i];
      }
    }
    for (std::size_t k = 0; k < snap_steps.size(); ++k) {
      const double t = snap_steps[k] * cfg.dt;
      for (std::size_t i = 0; i < n; ++i) {
        const Transfer tr = transfer(t, s[i]);
        dv_snap[k][i] = tr.vu * a.coeffs[i] + tr.vv * b.coeffs[i];
      }
    }
  }

  auto make_history = [&](const std::vector<CVec>& us, const std::vector<CVec>* vs, bool fields) {
    StateHistory h;
    h.grid = g;
    h.p = cfg.p;
    h.dt = cfg.dt;
    for (std::size_t k = 0; k < snap_steps.size(); ++k) {
      const double t = snap_steps[k] * cfg.dt;
      const Field uf = to_field(g, us[snap_steps[k]]);
      h.times.push_back(t);
      record_norms(h, uf);
      if (fields && cfg.store_fields) h.snapshots.push_back({uf, to_field(g, (*vs)[k]), t});
    }
    return h;
  };

  const StepCoefficients c(g, cfg.dt);
  NonlinearTerm nl(g, cfg.dealias_factor, cfg.p, cfg.nonlinearity_scale);
  PicardResult result;
  CVec gcur(n), gnext(n), a(n), b(n);

  for (int it = 0; it < iterations; ++it) {
    std::fill(a.begin(), a.end(), Complex{});
    std::fill(b.begin(), b.end(), Complex{});
    std::size_t snap = 0;
    bool failed = false;
    ForcingStats st = nl.increment(u[0], d[0], gcur);
    failed = !st.finite || st.max_abs > threshold;
    auto advance_snapshot_v = [&](long m) {
      if (snap < snap_steps.size() && snap_steps[snap] == m) {
        for (std::size_t i = 0; i < n; ++i) {
          v_snap[snap][i] += dv_snap[snap][i];
          dv_snap[snap][i] = b[i];
        }
        ++snap;
      }
    };
    for (std::size_t i = 0; i < n; ++i) u[0][i] += d[0][i];
    std::fill(d[0].begin(), d[0].end(), Complex{});
    advance_snapshot_v(0);
    for (long m = 0; m < steps && !failed; ++m) {
      st = nl.increment(u[m + 1], d[m + 1], gnext);
      failed = !st.finite || st.max_abs > threshold;
      for (std::size_t i = 0; i < n; ++i) {
        u[m + 1][i] += d[m + 1][i];
        const Complex dg = gnext[i] - gcur[i];
        const Complex an = c.s00[i] * a[i] + c.s01[i] * b[i] + c.w0u[i] * gcur[i] + c.w1u[i] * dg;
        const Complex bn = c.s10[i] * a[i] + c.s11[i] * b[i] + c.w0v[i] * gcur[i] + c.w1v[i] * dg;
        a[i] = an;
        b[i] = bn;
        d[m + 1][i] = an;
      }
      advance_snapshot_v(m + 1);
      std::swap(gcur, gnext);
    }
    if (failed) {
      result.outcome = Outcome::Blowup;
      result.message = "iterate " + std::to_string(it) + " exceeded the blowup threshold or became non-finite";
      return result;
    }
    result.iterates.push_back(make_history(u, &v_snap, true));
    const StateHistory inc = make_history(d, nullptr, false);
    result.contraction_series.push_back(x_norm(inc));
    if (!std::isfinite(result.contraction_series.back())) {
      result.outcome = Outcome::Blowup;
      result.message = "iterate " + std::to_string(it + 1) + " is non-finite";
      return result;
    }
  }
  // Final iterate u^(K) = u^(K-1) + d.
  for (long m = 0; m <= steps; ++m)
    for (std::size_t i = 0; i < n; ++i) u[m][i] += d[m][i];
  for (std::size_t k = 0; k < snap_steps.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) v_snap[k][i] += dv_snap[k][i];
  result.iterates.push_back(make_history(u, &v_snap, true));
  return result;
}

}  // namespace dampwave
