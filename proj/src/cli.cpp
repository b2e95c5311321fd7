#include "dampwave/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dampwave/diagnostics.hpp"
#include "dampwave/estimate_verifier.hpp"
#include "dampwave/evolution.hpp"
#include "dampwave/propagators.hpp"

namespace dampwave::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "inf" || text == "+inf") return kInfinity;
  if (text == "-inf") return -kInfinity;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(text) + "'");
  return v;
}

long long parse_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_double(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string get_field(const ExperimentConfig& c, const std::string& key) {
  if (key == "command") return c.command;
  if (key == "dim") return std::to_string(c.dim);
  if (key == "box_length") return format_number(c.box_length);
  if (key == "points") return std::to_string(c.points);
  if (key == "p") return format_number(c.p);
  if (key == "dt") return format_number(c.dt);
  if (key == "t_end") return format_number(c.t_end);
  if (key == "output_every") return std::to_string(c.output_every);
  if (key == "dealias_factor") return format_number(c.dealias_factor);
  if (key == "blowup_threshold") return format_number(c.blowup_threshold);
  if (key == "amplitude") return format_number(c.amplitude);
  if (key == "u1_amplitude") return format_number(c.u1_amplitude);
  if (key == "width") return format_number(c.width);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "q_list") return format_list(c.q_list);
  if (key == "p_list") return format_list(c.p_list);
  if (key == "iterations") return std::to_string(c.iterations);
  if (key == "a_times") return format_list(c.a_times);
  if (key == "catalog") return c.catalog;
  if (key == "epsilon") return format_number(c.epsilon);
  if (key == "workers") return std::to_string(c.workers);
  if (key == "output_dir") return c.output_dir;
  throw ConfigError(key, "unknown key");
}

std::string q_label(double q) { return std::isinf(q) ? "Linf" : "L" + format_number(q); }

json num(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

// ---------------------------------------------------------------------------
// Output bookkeeping

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
  void row(double t, const std::vector<double>& values) {
    std::vector<std::string> cells{format_number(t)};
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
  }
  std::string text() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_cell(cells[i]);
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Tracks written files so a failed run can remove them again.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    created_dir_ = !fs::exists(dir_);
    fs::create_directories(dir_);
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& name : written_) fs::remove(dir_ / name, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) throw std::runtime_error("cannot open " + path.string());
    if (std::find(written_.begin(), written_.end(), name) == written_.end()) written_.push_back(name);
    out << content;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& written() const { return written_; }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
  bool created_dir_ = false;
  bool committed_ = false;
};

struct Reports {
  std::string text;
  void add(const json& j) { text += j.dump() + "\n"; }
};

// ---------------------------------------------------------------------------
// Setup shared by the commands

struct Setup {
  Grid grid;
  EvolveConfig evolve;
  Field u0, u1;
};

// Fills the zero-valued "use the default" fields so the echo is explicit.
ExperimentConfig resolve(ExperimentConfig c) {
  if (c.box_length == 0.0 || c.points == 0) {
    const Grid g = default_grid(c.dim);
    if (c.box_length == 0.0) c.box_length = g.box_length();
    if (c.points == 0) c.points = g.points_per_axis();
  }
  const EvolveConfig d = default_evolve_config(c.dim, c.t_end);
  if (c.dt == 0.0) c.dt = d.dt;
  if (c.output_every == 0) c.output_every = std::max(1, static_cast<int>(std::lround(c.t_end / c.dt / 200.0)));
  return c;
}

Setup make_setup(const ExperimentConfig& c) {
  Setup s;
  s.grid = make_grid(c.dim, c.box_length, c.points);
  s.evolve.p = c.p;
  s.evolve.dt = c.dt;
  s.evolve.t_end = c.t_end;
  s.evolve.output_every = c.output_every;
  s.evolve.dealias_factor = c.dealias_factor;
  s.evolve.blowup_threshold = c.blowup_threshold;
  s.u0 = gaussian_data(s.grid, c.amplitude, c.width);
  s.u1 = gaussian_data(s.grid, c.u1_amplitude, c.width);
  return s;
}

bool is_series_q(double q) { return q == 1.0 || q == 2.0 || std::isinf(q); }

double snapshot_norm(const StateHistory& h, std::size_t k, double q) {
  if (q == 1.0) return h.u_l1[k];
  if (q == 2.0) return h.u_l2[k];
  if (std::isinf(q)) return h.u_inf[k];
  return lq_norm(h.snapshots[k].u, q);
}

double profile_power(int dim, double q) { return 0.5 * dim * (1.0 - 1.0 / q); }

void add_decay_reports(Reports& reports, const std::vector<double>& t, const std::vector<std::vector<double>>& norms,
                       const std::vector<double>& q_list, int dim) {
  for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
    const double q = q_list[qi];
    const auto [slope, count] = fit_power_law(t, norms[qi], FitWindow{});
    double scaled = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
      scaled = std::max(scaled, std::pow(1.0 + t[k], profile_power(dim, q)) * norms[qi][k]);
    reports.add({{"report", "decay"},
                 {"q", num(q)},
                 {"fitted_exponent", num(slope)},
                 {"expected_exponent", num(0.0 - profile_power(dim, q) + 0.0)},
                 {"scaled_sup", num(scaled)},
                 {"fit_points", count}});
  }
}

// scaled_error[qi][k] at times[k]; reports the ratio between t = 10 and the
// last time when 10 is among the times.
void add_profile_ratio(Reports& reports, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& scaled_error, const std::vector<double>& q_list) {
  const auto it = std::find_if(times.begin(), times.end(), [](double t) { return std::abs(t - 10.0) < 1e-9; });
  if (it == times.end() || times.back() <= 10.0) return;
  const auto k10 = static_cast<std::size_t>(it - times.begin());
  for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
    const double early = scaled_error[qi][k10];
    const double late = scaled_error[qi].back();
    reports.add({{"report", "profile_ratio"},
                 {"q", num(q_list[qi])},
                 {"t_early", 10.0},
                 {"t_late", times.back()},
                 {"early", num(early)},
                 {"late", num(late)},
                 {"ratio", num(early > 0.0 ? late / early : kInfinity)}});
  }
}

json mass_json(const MassReport& m) {
  return {{"report", "mass"},
          {"linear", num(m.linear)},
          {"nonlinear_truncated", num(m.nonlinear_truncated)},
          {"tail", num(m.tail)},
          {"fitted_gamma", num(m.fitted_gamma)},
          {"expected_gamma", num(m.expected_gamma)},
          {"extrapolated", m.extrapolated},
          {"flagged", m.flagged},
          {"total", num(m.total)},
          {"total_truncated", num(m.total_truncated)}};
}

std::vector<std::string> norm_header(const std::vector<double>& q_list) {
  std::vector<std::string> h{"t"};
  for (double q : q_list) h.push_back(q_label(q));
  return h;
}

std::vector<std::string> error_header(const std::vector<double>& q_list) {
  std::vector<std::string> h{"t"};
  for (double q : q_list) h.push_back("scaled_error_" + q_label(q));
  return h;
}

// ---------------------------------------------------------------------------
// Commands. Each returns the outcome string.

std::string run_linear(const ExperimentConfig& c, OutputSet& out, Reports& reports) {
  const Setup s = make_setup(c);
  const int steps = static_cast<int>(std::lround(c.t_end / c.dt));
  const double mass = integral(s.u0) + integral(s.u1);
  Table norms(norm_header(c.q_list));
  Table profile(error_header(c.q_list));
  std::vector<double> times, profile_times;
  std::vector<std::vector<double>> series(c.q_list.size()), errors(c.q_list.size());
  for (int k = 0; k <= steps; k += c.output_every) {
    const double t = k * c.dt;
    const State st = linear_evolve(s.u0, s.u1, t);
    std::vector<double> row;
    for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) {
      row.push_back(lq_norm(st.u, c.q_list[qi]));
      series[qi].push_back(row.back());
    }
    times.push_back(t);
    norms.row(t, row);
    if (t == 0.0) continue;
    Field diff = st.u;
    const Field g = heat_kernel_field(s.grid, t, mass);
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= g.values[i];
    std::vector<double> err;
    for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) {
      err.push_back(std::pow(t, profile_power(c.dim, c.q_list[qi])) * lq_norm(diff, c.q_list[qi]));
      errors[qi].push_back(err.back());
    }
    profile_times.push_back(t);
    profile.row(t, err);
  }
  out.write("norms.csv", norms.text());
  out.write("profile.csv", profile.text());
  reports.add({{"report", "mass"}, {"linear", num(mass)}, {"total", num(mass)}});
  add_decay_reports(reports, times, series, c.q_list, c.dim);
  add_profile_ratio(reports, profile_times, errors, c.q_list);
  return "completed";
}

std::string write_history(const ExperimentConfig& c, const StateHistory& h, OutputSet& out, Reports& reports) {
  std::vector<std::string> header = norm_header(c.q_list);
  for (const char* extra : {"f_L1", "f_mass", "boundary_fraction"}) header.emplace_back(extra);
  Table norms(header);
  std::vector<std::vector<double>> series(c.q_list.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    std::vector<double> row;
    for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) {
      row.push_back(snapshot_norm(h, k, c.q_list[qi]));
      series[qi].push_back(row.back());
    }
    row.push_back(h.f_l1_series[k]);
    row.push_back(h.f_mass_series[k]);
    row.push_back(h.boundary_fraction[k]);
    norms.row(h.times[k], row);
  }
  out.write("norms.csv", norms.text());
  const bool completed = h.outcome == Outcome::Completed;
  reports.add({{"report", "outcome"},
               {"outcome", completed ? "completed" : "blowup"},
               {"blowup_time", num(completed ? 0.0 : h.blowup_time)},
               {"snapshots", h.size()},
               {"boundary_flagged", h.boundary_flagged()},
               {"x_norm", num(x_norm(h))}});
  if (completed && h.size() >= 40) add_decay_reports(reports, h.times, series, c.q_list, c.dim);
  return completed ? "completed" : "blowup";
}

std::string run_nonlinear(const ExperimentConfig& c, OutputSet& out, Reports& reports) {
  Setup s = make_setup(c);
  const bool need_fields = c.dim == 1 || !std::all_of(c.q_list.begin(), c.q_list.end(), is_series_q);
  s.evolve.store_fields = need_fields;
  const StateHistory h = nonlinear_evolve(s.u0, s.u1, s.evolve);
  const std::string outcome = write_history(c, h, out, reports);
  if (outcome != "completed") return outcome;
  const MassReport mass = mass_M(s.u0, s.u1, h);
  reports.add(mass_json(mass));
  if (h.has_fields()) {
    const ProfileReport pr = profile_report(h, s.u0, s.u1, c.q_list);
    Table profile(error_header(c.q_list));
    for (std::size_t k = 0; k < pr.times.size(); ++k) {
      std::vector<double> row;
      for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) row.push_back(pr.scaled_error[qi][k]);
      profile.row(pr.times[k], row);
    }
    out.write("profile.csv", profile.text());
    add_profile_ratio(reports, pr.times, pr.scaled_error, c.q_list);
  }
  return outcome;
}

std::string run_picard(const ExperimentConfig& c, OutputSet& out, Reports& reports) {
  const Setup s = make_setup(c);
  const PicardResult pr = picard_iterate(s.u0, s.u1, s.evolve, c.iterations);
  Table table({"k", "x_distance", "ratio"});
  for (std::size_t k = 0; k < pr.contraction_series.size(); ++k) {
    const double ratio = k == 0 || !(pr.contraction_series[k - 1] > 0.0)
                             ? std::nan("")
                             : pr.contraction_series[k] / pr.contraction_series[k - 1];
    table.row({std::to_string(k), format_number(pr.contraction_series[k]), format_number(ratio)});
  }
  out.write("contraction.csv", table.text());
  json summary{{"report", "contraction"},
               {"outcome", pr.outcome == Outcome::Completed ? "completed" : "blowup"},
               {"iterates", pr.iterates.size()},
               {"message", pr.message}};
  double worst = 0.0;
  for (std::size_t k = 1; k < pr.contraction_series.size(); ++k)
    if (pr.contraction_series[k - 1] > 0.0)
      worst = std::max(worst, pr.contraction_series[k] / pr.contraction_series[k - 1]);
  summary["max_ratio"] = num(worst);
  reports.add(summary);
  if (pr.outcome != Outcome::Completed || pr.iterates.empty()) return "blowup";

  const StateHistory& last = pr.iterates.back();
  write_history(c, last, out, reports);
  const StateHistory march = nonlinear_evolve(s.u0, s.u1, s.evolve);
  if (march.outcome == Outcome::Completed && march.has_fields() && last.has_fields()) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < std::min(march.size(), last.size()); ++k) {
      Field d = last.snapshots[k].u;
      for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= march.snapshots[k].u.values[i];
      diff = std::max(diff, lq_norm(d, kInfinity));
      scale = std::max(scale, march.u_inf[k]);
    }
    reports.add({{"report", "fixed_point_vs_march"},
                 {"max_sup_difference", num(diff)},
                 {"relative", num(scale > 0.0 ? diff / scale : 0.0)}});
  }
  return "completed";
}

std::vector<double> default_a_times(const ExperimentConfig& c) {
  std::vector<double> out;
  const double stride = c.dt * c.output_every;
  const long last = std::lround(c.t_end / stride);
  for (double target = 10.0; target <= c.t_end + 1e-9; target += 10.0) {
    long k = std::lround(target / stride);
    if (k % 2 != 0) k = k + 1 <= last ? k + 1 : k - 1;
    if (k <= 0) continue;
    const double t = k * stride;
    if (out.empty() || t > out.back() + 1e-9) out.push_back(t);
  }
  return out;
}

std::string run_profile(const ExperimentConfig& c, OutputSet& out, Reports& reports) {
  Setup s = make_setup(c);
  s.evolve.store_fields = true;
  s.evolve.store_forcing = true;
  const StateHistory h = nonlinear_evolve(s.u0, s.u1, s.evolve);
  const std::string outcome = write_history(c, h, out, reports);
  if (outcome != "completed") return outcome;
  const std::vector<double> a_times = c.a_times.empty() ? default_a_times(c) : c.a_times;
  const ProfileReport pr = profile_report(h, s.u0, s.u1, c.q_list, a_times);
  reports.add(mass_json(pr.mass));

  Table profile(error_header(c.q_list));
  for (std::size_t k = 0; k < pr.times.size(); ++k) {
    std::vector<double> row;
    for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) row.push_back(pr.scaled_error[qi][k]);
    profile.row(pr.times[k], row);
  }
  out.write("profile.csv", profile.text());
  add_profile_ratio(reports, pr.times, pr.scaled_error, c.q_list);

  std::vector<std::string> header{"t"};
  for (int j = 0; j < kProfileParts; ++j)
    for (double q : c.q_list) header.push_back("A" + std::to_string(j + 1) + "_" + q_label(q));
  Table parts(header);
  for (std::size_t k = 0; k < pr.a_times.size(); ++k) {
    std::vector<double> row;
    for (int j = 0; j < kProfileParts; ++j)
      for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) row.push_back(pr.a_norms[j][qi][k]);
    parts.row(pr.a_times[k], row);
  }
  out.write("a_norms.csv", parts.text());

  // The first A-times are pre-asymptotic; fit from 0.2 t_end on when that
  // leaves at least three points.
  FitWindow window{0.2 * c.t_end, kInfinity};
  if (std::count_if(pr.a_times.begin(), pr.a_times.end(), [&](double t) { return t >= window.t_min; }) < 3)
    window.t_min = 0.0;
  for (int j = 0; j < kProfileParts; ++j)
    for (std::size_t qi = 0; qi < c.q_list.size(); ++qi) {
      const double base = -profile_power(c.dim, c.q_list[qi]);
      double expected = std::nan("");
      if (j == 0) expected = base - 1.0;
      if (j == 1 || j == 4) expected = base - 0.5 * c.dim * (c.p - 1.0) + 1.0;
      const auto [slope, count] = fit_power_law(pr.a_times, pr.a_norms[j][qi], window);
      reports.add({{"report", "a_part"},
                   {"part", j + 1},
                   {"q", num(c.q_list[qi])},
                   {"fitted_order", num(slope)},
                   {"expected_order", num(expected)},
                   {"fit_from", num(window.t_min)},
                   {"fit_points", count}});
    }
  reports.add({{"report", "a_completeness"}, {"error", num(pr.completeness_error)}});
  return outcome;
}

std::string run_estimates(const ExperimentConfig& c, OutputSet& out, Reports& reports) {
  CatalogOptions opt;
  opt.epsilon = c.epsilon;
  opt.seed = c.seed;
  opt.workers = c.workers;
  opt.pointwise = c.catalog.find('p') != std::string::npos;
  opt.integrals = c.catalog.find('i') != std::string::npos;
  opt.heat = c.catalog.find('h') != std::string::npos;
  opt.operators = c.catalog.find('o') != std::string::npos;
  const auto rows = run_catalog(opt);
  Table table({"id", "variant", "empirical_C", "argmax_t", "argmax_r", "argmax_field", "refined_C", "drift",
               "extension_growth", "t_growth", "underflow_skipped", "pass", "note"});
  std::size_t failed = 0;
  for (const auto& r : rows) {
    table.row({r.id, r.variant, format_number(r.empirical_C), format_number(r.argmax_t), format_number(r.argmax_r),
               r.argmax_field, format_number(r.refined_C), format_number(r.drift), format_number(r.extension_growth),
               format_number(r.t_growth), std::to_string(r.underflow_skipped), r.pass ? "true" : "false", r.note});
    reports.add({{"report", "estimate"},
                 {"id", r.id},
                 {"variant", r.variant},
                 {"empirical_C", num(r.empirical_C)},
                 {"argmax_t", num(r.argmax_t)},
                 {"argmax_r", num(r.argmax_r)},
                 {"argmax_field", r.argmax_field},
                 {"refined_C", num(r.refined_C)},
                 {"drift", num(r.drift)},
                 {"extension_growth", num(r.extension_growth)},
                 {"t_growth", num(r.t_growth)},
                 {"underflow_skipped", r.underflow_skipped},
                 {"pass", r.pass},
                 {"note", r.note}});
    failed += !r.pass;
  }
  out.write("estimates.csv", table.text());
  reports.add({{"report", "catalog_summary"}, {"entries", rows.size()}, {"failed", failed}});
  return "completed";
}

std::string run_fujita(const ExperimentConfig& c, OutputSet& out, Reports& reports) {
  FujitaOptions opt;
  opt.use_default_grid = false;
  opt.grid = make_grid(c.dim, c.box_length, c.points);
  opt.width = c.width;
  opt.dt = c.dt;
  opt.output_every = c.output_every;
  opt.workers = c.workers;
  const auto entries = fujita_classify(c.dim, c.p_list, c.amplitude, c.t_end, opt);
  Table table({"p", "classification", "blowup_time", "boundary_flagged"});
  std::vector<std::string> header{"t"};
  std::size_t longest = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    table.row({format_number(e.p), e.classification, format_number(e.blowup_time),
               e.boundary_flagged ? "true" : "false"});
    reports.add({{"report", "fujita"},
                 {"p", num(e.p)},
                 {"classification", e.classification},
                 {"blowup_time", num(e.blowup_time)},
                 {"boundary_flagged", e.boundary_flagged}});
    header.push_back("scaled_sup_p" + format_number(e.p));
    if (e.times.size() > entries[longest].times.size()) longest = i;
  }
  out.write("fujita.csv", table.text());
  Table series(header);
  for (std::size_t k = 0; k < entries[longest].times.size(); ++k) {
    std::vector<std::string> row{format_number(entries[longest].times[k])};
    for (const auto& e : entries) row.push_back(k < e.scaled_sup.size() ? format_number(e.scaled_sup[k]) : "");
    series.row(row);
  }
  out.write("fujita_series.csv", series.text());
  return "completed";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cells.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  return cells;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split_csv_line(line));
  return rows;
}

bool to_number(const std::string& s, double& v) {
  try {
    v = parse_double("", s);
    return true;
  } catch (const ConfigError&) {
    if (s == "nan") {
      v = std::nan("");
      return true;
    }
    return false;
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "command",   "dim",          "box_length", "points", "p",        "dt",        "t_end",     "output_every",
      "dealias_factor", "blowup_threshold", "amplitude", "u1_amplitude", "width", "seed", "q_list", "p_list",
      "iterations", "a_times",     "catalog",    "epsilon", "workers",  "output_dir"};
  return keys;
}

void set_field(ExperimentConfig& c, std::string_view key_view, std::string_view value) {
  const std::string key(key_view);
  value = trim(value);
  auto integer = [&](long long lo, long long hi) {
    const long long v = parse_integer(key, value);
    if (v < lo || v > hi) throw ConfigError(key, "out of range: " + std::string(value));
    return v;
  };
  if (key == "command") {
    c.command = std::string(value);
  } else if (key == "dim") {
    c.dim = static_cast<int>(integer(-1000, 1000));
  } else if (key == "box_length") {
    c.box_length = parse_double(key, value);
  } else if (key == "points") {
    c.points = static_cast<int>(integer(0, 1 << 20));
  } else if (key == "p") {
    c.p = parse_double(key, value);
  } else if (key == "dt") {
    c.dt = parse_double(key, value);
  } else if (key == "t_end") {
    c.t_end = parse_double(key, value);
  } else if (key == "output_every") {
    c.output_every = static_cast<int>(integer(0, 1 << 30));
  } else if (key == "dealias_factor") {
    c.dealias_factor = parse_double(key, value);
  } else if (key == "blowup_threshold") {
    c.blowup_threshold = parse_double(key, value);
  } else if (key == "amplitude") {
    c.amplitude = parse_double(key, value);
  } else if (key == "u1_amplitude") {
    c.u1_amplitude = parse_double(key, value);
  } else if (key == "width") {
    c.width = parse_double(key, value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(integer(0, std::numeric_limits<long long>::max()));
  } else if (key == "q_list") {
    c.q_list = parse_list(key, value);
  } else if (key == "p_list") {
    c.p_list = parse_list(key, value);
  } else if (key == "iterations") {
    c.iterations = static_cast<int>(integer(0, 1000));
  } else if (key == "a_times") {
    c.a_times = parse_list(key, value);
  } else if (key == "catalog") {
    c.catalog = std::string(value);
  } else if (key == "epsilon") {
    c.epsilon = parse_double(key, value);
  } else if (key == "workers") {
    c.workers = static_cast<unsigned>(integer(0, 4096));
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (!seen.insert(key).second) throw ConfigError(key, "given twice");
    set_field(c, key, line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + get_field(cfg, key) + "\n";
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void validate(const ExperimentConfig& c) {
  const auto& cmds = commands();
  if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
    throw ConfigError("command", "unknown command '" + c.command + "'");
  if (c.dim < 1 || c.dim > 3) throw ConfigError("dim", "must be 1, 2 or 3");
  if (!(c.box_length >= 0.0) || !std::isfinite(c.box_length)) throw ConfigError("box_length", "must be >= 0");
  if (c.points < 0) throw ConfigError("points", "must be >= 0");
  if (!(c.t_end > 0.0) || !std::isfinite(c.t_end)) throw ConfigError("t_end", "must be positive");
  if (!(c.dt >= 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt", "must be >= 0");
  if (c.output_every < 0) throw ConfigError("output_every", "must be >= 0");
  if (!std::isfinite(c.amplitude) || !std::isfinite(c.u1_amplitude))
    throw ConfigError("amplitude", "must be finite");
  if (!(c.width > 0.0) || !std::isfinite(c.width)) throw ConfigError("width", "must be positive");
  if (c.q_list.empty()) throw ConfigError("q_list", "must not be empty");
  for (double q : c.q_list)
    if (!(q >= 1.0)) throw ConfigError("q_list", "entries must be >= 1");

  const ExperimentConfig r = resolve(c);
  Grid grid;
  try {
    grid = make_grid(r.dim, r.box_length, r.points);
  } catch (const DomainError& e) {
    throw ConfigError(std::string(e.what()).find("box_length") != std::string::npos ? "box_length" : "points",
                      e.what());
  }

  if (c.command == "verify-estimates") {
    if (c.catalog.empty() || c.catalog.find_first_not_of("piho") != std::string::npos)
      throw ConfigError("catalog", "letters must come from p, i, h, o");
    if (!(c.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
    return;
  }

  EvolveConfig ev;
  ev.p = r.command == "fujita-sweep" ? 2.0 : r.p;
  ev.dt = r.dt;
  ev.t_end = r.t_end;
  ev.output_every = r.output_every;
  ev.dealias_factor = r.dealias_factor;
  ev.blowup_threshold = r.blowup_threshold;
  try {
    dampwave::validate(ev, grid);
  } catch (const DomainError& e) {
    std::string msg = e.what();
    std::string field = "evolve";
    const std::string prefix = "EvolveConfig.";
    if (msg.rfind(prefix, 0) == 0) field = msg.substr(prefix.size(), msg.find(' ') - prefix.size());
    throw ConfigError(field, msg);
  }

  if (c.command == "run-nonlinear" || c.command == "picard" || c.command == "profile") {
    if (c.dim > 1 && !std::all_of(c.q_list.begin(), c.q_list.end(), is_series_q) && c.command == "run-nonlinear")
      throw ConfigError("q_list", "entries other than 1, 2 and inf need dim = 1");
  }
  if (c.command == "picard" && c.iterations < 2) throw ConfigError("iterations", "must be >= 2");
  if (c.command == "profile") {
    const double stride = r.dt * r.output_every;
    for (double t : c.a_times) {
      const double k = t / stride;
      const long idx = std::lround(k);
      if (std::abs(k - idx) > 1e-9 * std::max(1.0, k) || idx % 2 != 0 || idx <= 0 || t > r.t_end + 1e-9)
        throw ConfigError("a_times", "entry " + format_number(t) + " is not an even-index snapshot time");
    }
  }
  if (c.command == "fujita-sweep") {
    if (!(c.amplitude > 0.0)) throw ConfigError("amplitude", "fujita-sweep needs positive-mass data");
    if (c.p_list.empty()) throw ConfigError("p_list", "must not be empty");
    const double pf = 1.0 + 2.0 / c.dim;
    const auto [lo, hi] = std::minmax_element(c.p_list.begin(), c.p_list.end());
    if (!(*lo < pf && *hi > pf)) throw ConfigError("p_list", "must straddle the Fujita exponent " + format_number(pf));
    for (double p : c.p_list)
      if (!(p > 1.0)) throw ConfigError("p_list", "entries must be > 1");
  }
}

// ---------------------------------------------------------------------------
// Execution

std::string sha256_file(const fs::path& path) {
  const std::string data = read_file(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("sha256 failed for " + path.string());
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return fs::path(env);
  return fs::path(cfg.output_dir);
}

RunManifest execute(const ExperimentConfig& input) {
  validate(input);
  ExperimentConfig cfg = resolve(input);
  cfg.output_dir = resolve_output_dir(input).string();
  const auto start = std::chrono::steady_clock::now();

  OutputSet out(cfg.output_dir);
  Reports reports;
  std::string outcome;
  if (cfg.command == "run-linear") outcome = run_linear(cfg, out, reports);
  else if (cfg.command == "run-nonlinear") outcome = run_nonlinear(cfg, out, reports);
  else if (cfg.command == "picard") outcome = run_picard(cfg, out, reports);
  else if (cfg.command == "profile") outcome = run_profile(cfg, out, reports);
  else if (cfg.command == "verify-estimates") outcome = run_estimates(cfg, out, reports);
  else outcome = run_fujita(cfg, out, reports);
  out.write("reports.jsonl", reports.text);

  RunManifest m;
  m.config_text = to_config_text(cfg);
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.outcome = outcome;
  m.exit_code = outcome == "blowup" ? kExitBlowup : kExitOk;
  for (const auto& name : out.written())
    m.files.push_back({name, sha256_file(out.dir() / name), fs::file_size(out.dir() / name)});
  out.write("manifest.jsonl", manifest_to_jsonl(m));
  out.commit();
  return m;
}

std::string manifest_to_jsonl(const RunManifest& m) {
  std::string out = json{{"record", "config"}, {"text", m.config_text}}.dump() + "\n";
  out += json{{"record", "run"},
              {"version", m.version},
              {"wall_time", m.wall_time},
              {"outcome", m.outcome},
              {"exit_code", m.exit_code}}
             .dump() +
         "\n";
  for (const auto& f : m.files)
    out += json{{"record", "file"}, {"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}}.dump() + "\n";
  return out;
}

RunManifest read_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.jsonl" : path;
  std::istringstream in(read_file(file));
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string kind = j.at("record");
    if (kind == "config") {
      m.config_text = j.at("text");
    } else if (kind == "run") {
      m.version = j.at("version");
      m.wall_time = j.at("wall_time");
      m.outcome = j.at("outcome");
      m.exit_code = j.at("exit_code");
    } else if (kind == "file") {
      m.files.push_back({j.at("name"), j.at("sha256"), j.at("bytes")});
    }
  }
  return m;
}

FileDiff compare_tables(const std::string& name, const std::string& csv_a, const std::string& csv_b) {
  FileDiff d{name, "differs", {}, {}};
  const auto a = parse_csv(csv_a);
  const auto b = parse_csv(csv_b);
  if (a.empty() || b.empty() || a[0] != b[0]) {
    d.status = "schema_mismatch";
    d.note = "headers differ";
    return d;
  }
  if (a.size() != b.size()) {
    d.status = "schema_mismatch";
    d.note = "row counts differ: " + std::to_string(a.size() - 1) + " vs " + std::to_string(b.size() - 1);
    return d;
  }
  for (std::size_t col = 0; col < a[0].size(); ++col) {
    double worst = 0.0;
    for (std::size_t row = 1; row < a.size(); ++row) {
      const std::string ca = col < a[row].size() ? a[row][col] : "";
      const std::string cb = col < b[row].size() ? b[row][col] : "";
      if (ca == cb) continue;
      double x = 0.0, y = 0.0;
      if (!to_number(ca, x) || !to_number(cb, y) || std::isnan(x) || std::isnan(y) || std::isinf(x) ||
          std::isinf(y)) {
        worst = std::max(worst, 1.0);
        continue;
      }
      const double scale = std::max(std::abs(x), std::abs(y));
      if (scale > 0.0) worst = std::max(worst, std::abs(x - y) / scale);
    }
    d.columns.push_back({a[0][col], worst});
  }
  return d;
}

CompareReport compare(const fs::path& manifest_a, const fs::path& manifest_b) {
  auto dir_of = [](const fs::path& p) { return fs::is_directory(p) ? p : p.parent_path(); };
  const RunManifest ma = read_manifest(manifest_a);
  const RunManifest mb = read_manifest(manifest_b);
  const fs::path da = dir_of(manifest_a), db = dir_of(manifest_b);
  std::map<std::string, std::pair<const FileRecord*, const FileRecord*>> files;
  for (const auto& f : ma.files) files[f.name].first = &f;
  for (const auto& f : mb.files) files[f.name].second = &f;

  CompareReport report;
  for (const auto& [name, pair] : files) {
    const auto [fa, fb] = pair;
    if (!fa || !fb) {
      report.files.push_back({name, fa ? "only_a" : "only_b", {}, {}});
      continue;
    }
    if (fa->sha256 == fb->sha256) continue;
    if (fs::path(name).extension() == ".csv") {
      std::string ta, tb;
      try {
        ta = read_file(da / name);
        tb = read_file(db / name);
      } catch (const std::exception& e) {
        report.files.push_back({name, "differs", {}, e.what()});
        continue;
      }
      report.files.push_back(compare_tables(name, ta, tb));
    } else {
      report.files.push_back({name, "differs", {}, "digests differ"});
    }
  }
  return report;
}

std::string compare_to_jsonl(const CompareReport& report) {
  std::string out;
  for (const auto& f : report.files) {
    json cols = json::object();
    for (const auto& c : f.columns) cols[c.column] = num(c.max_rel_diff);
    out += json{{"file", f.name}, {"status", f.status}, {"max_rel_diff", cols}, {"note", f.note}}.dump() + "\n";
  }
  return out;
}

}  // namespace dampwave::cli
