#include "dampwave/fft_engine.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace dampwave::detail {
namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  fftw_plan get(const Grid& grid, int sign) {
    const auto key = std::make_tuple(grid.dim(), grid.points_per_axis(), sign);
    std::lock_guard lock(mutex);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    int shape[3];
    for (int d = 0; d < grid.dim(); ++d) shape[d] = grid.points_per_axis();
    auto* scratch = fftw_alloc_complex(grid.size());
    fftw_plan plan = fftw_plan_dft(grid.dim(), shape, scratch, scratch, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

// (-1)^{sum of axis indices}; N is even so this equals (-1)^{sum of k}.
template <typename Fn>
void for_each_parity(const Grid& grid, Fn&& fn) {
  const int n = grid.points_per_axis();
  const std::size_t total = grid.size();
  if (grid.dim() == 1) {
    for (std::size_t i = 0; i < total; ++i) fn(i, (i & 1) ? -1.0 : 1.0);
  } else if (grid.dim() == 2) {
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b, ++idx) fn(idx, ((a + b) & 1) ? -1.0 : 1.0);
  } else {
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c, ++idx) fn(idx, ((a + b + c) & 1) ? -1.0 : 1.0);
  }
}

double continuum_scale(const Grid& grid) {
  return grid.cell_volume() * std::pow(2.0 * std::numbers::pi, -0.5 * grid.dim());
}

struct AxisTarget {
  int count = 0;
  int index[2] = {0, 0};
  double weight[2] = {0.0, 0.0};
};

std::vector<AxisTarget> axis_targets(const Grid& coarse, const Grid& fine) {
  const int nc = coarse.points_per_axis();
  const int nf = fine.points_per_axis();
  std::vector<AxisTarget> out(nc);
  for (int j = 0; j < nc; ++j) {
    const int k = coarse.lattice_index(j);
    AxisTarget& t = out[j];
    if (nc == nf) {
      t.count = 1;
      t.index[0] = j;
      t.weight[0] = 1.0;
    } else if (k == -nc / 2) {
      t.count = 2;
      t.index[0] = nf - nc / 2;
      t.index[1] = nc / 2;
      t.weight[0] = t.weight[1] = 0.5;
    } else {
      t.count = 1;
      t.index[0] = k >= 0 ? k : k + nf;
      t.weight[0] = 1.0;
    }
  }
  return out;
}

template <typename Fn>
void for_each_target(const Grid& coarse, const Grid& fine, Fn&& fn) {
  if (coarse.dim() != fine.dim()) throw DomainError("pad/truncate: dimension mismatch");
  if (fine.points_per_axis() < coarse.points_per_axis())
    throw DomainError("pad/truncate: fine grid must not be coarser");
  const auto targets = axis_targets(coarse, fine);
  const int nc = coarse.points_per_axis();
  const std::size_t nf = static_cast<std::size_t>(fine.points_per_axis());
  if (coarse.dim() == 1) {
    for (int a = 0; a < nc; ++a) {
      const auto& ta = targets[a];
      for (int p = 0; p < ta.count; ++p) fn(static_cast<std::size_t>(a), ta.index[p], ta.weight[p]);
    }
  } else if (coarse.dim() == 2) {
    std::size_t idx = 0;
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b, ++idx) {
        const auto& ta = targets[a];
        const auto& tb = targets[b];
        for (int p = 0; p < ta.count; ++p)
          for (int q = 0; q < tb.count; ++q)
            fn(idx, ta.index[p] * nf + tb.index[q], ta.weight[p] * tb.weight[q]);
      }
  } else {
    std::size_t idx = 0;
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b)
        for (int c = 0; c < nc; ++c, ++idx) {
          const auto& ta = targets[a];
          const auto& tb = targets[b];
          const auto& tc = targets[c];
          for (int p = 0; p < ta.count; ++p)
            for (int q = 0; q < tb.count; ++q)
              for (int r = 0; r < tc.count; ++r)
                fn(idx, (ta.index[p] * nf + tb.index[q]) * nf + tc.index[r],
                   ta.weight[p] * tb.weight[q] * tc.weight[r]);
        }
  }
}

}  // namespace

void fft_inplace(const Grid& grid, std::span<Complex> data, int sign) {
  if (data.size() != grid.size()) throw DomainError("fft: array length does not match grid");
  fftw_plan plan = plan_cache().get(grid, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

void to_continuum(const Grid& grid, std::span<Complex> data) {
  const double scale = continuum_scale(grid);
  for_each_parity(grid, [&](std::size_t i, double parity) { data[i] *= scale * parity; });
}

void from_continuum(const Grid& grid, std::span<Complex> data) {
  const double scale = 1.0 / (continuum_scale(grid) * static_cast<double>(grid.size()));
  for_each_parity(grid, [&](std::size_t i, double parity) { data[i] *= scale * parity; });
}

void pad_spectrum(const Grid& coarse, std::span<const Complex> in, const Grid& fine, std::span<Complex> out) {
  std::fill(out.begin(), out.end(), Complex{});
  for_each_target(coarse, fine, [&](std::size_t c, std::size_t f, double w) { out[f] += w * in[c]; });
}

void truncate_spectrum(const Grid& fine, std::span<const Complex> in, const Grid& coarse, std::span<Complex> out) {
  std::fill(out.begin(), out.end(), Complex{});
  for_each_target(coarse, fine, [&](std::size_t c, std::size_t f, double) { out[c] += in[f]; });
}

}  // namespace dampwave::detail
