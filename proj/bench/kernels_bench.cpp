// Serial reference vs OpenMP kernels at several grid sizes.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "tfe/kernels.hpp"

using namespace tfe;
namespace ks = tfe::kernels::serial;
namespace kp = tfe::kernels::parallel;

namespace {

struct Fixture {
  GridPtr grid;
  std::vector<double> u, d2u, xw, w, density, out;
  kernels::PentaBands H;

  explicit Fixture(int n)
      : grid(Grid::graded(40.0, n, 2.0)), u(n), d2u(n), xw(n), w(n), density(n), out(n), H(n) {
    const auto x = grid->nodes();
    for (int i = 0; i < n; ++i) {
      u[i] = 0.01 * x[i] * x[i] * std::exp(-x[i]);
      xw[i] = std::pow(x[i], 5.0);
    }
    ks::apply_stencil(grid->second_difference(), u, d2u);
    ks::flux_potential(xw, d2u, 3.0, w, density);
  }
};

template <bool Parallel>
void BM_flux_potential(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) {
      kp::flux_potential(f.xw, f.d2u, 3.0, f.w, f.density);
    } else {
      ks::flux_potential(f.xw, f.d2u, 3.0, f.w, f.density);
    }
    benchmark::DoNotOptimize(f.w.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_apply_stencil(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  const auto& s = f.grid->second_difference();
  for (auto _ : st) {
    if constexpr (Parallel) {
      kp::apply_stencil(s, f.u, f.out);
    } else {
      ks::apply_stencil(s, f.u, f.out);
    }
    benchmark::DoNotOptimize(f.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_gradient_assembly(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  const auto& s = f.grid->second_difference();
  const auto q = f.grid->weights();
  for (auto _ : st) {
    if constexpr (Parallel) {
      kp::gradient_assembly(s, q, f.w, f.out);
    } else {
      ks::gradient_assembly(s, q, f.w, f.out);
    }
    benchmark::DoNotOptimize(f.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_hessian_bands(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  const auto& s = f.grid->second_difference();
  const auto q = f.grid->weights();
  for (auto _ : st) {
    if constexpr (Parallel) {
      kp::hessian_bands(s, q, f.xw, f.d2u, 3.0, 1e-3, 1e-10, f.H);
    } else {
      ks::hessian_bands(s, q, f.xw, f.d2u, 3.0, 1e-3, 1e-10, f.H);
    }
    benchmark::DoNotOptimize(f.H.d0.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_weighted_dot(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  const auto q = f.grid->weights();
  for (auto _ : st) {
    double r;
    if constexpr (Parallel) {
      r = kp::weighted_dot(q, f.u, f.d2u);
    } else {
      r = ks::weighted_dot(q, f.u, f.d2u);
    }
    benchmark::DoNotOptimize(r);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_pentadiagonal_solve(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  ks::hessian_bands(f.grid->second_difference(), f.grid->weights(), f.xw, f.d2u, 3.0, 1e-3, 1e-10,
                    f.H);
  for (auto _ : st) {
    benchmark::DoNotOptimize(kernels::solve_pentadiagonal_spd(f.H, f.u, f.out));
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

#define TFE_BENCH_PAIR(fn)                                             \
  BENCHMARK(fn<false>)->Name(#fn "/serial")->RangeMultiplier(8)->Range(1 << 10, 1 << 19); \
  BENCHMARK(fn<true>)->Name(#fn "/parallel")->RangeMultiplier(8)->Range(1 << 10, 1 << 19)

TFE_BENCH_PAIR(BM_flux_potential);
TFE_BENCH_PAIR(BM_apply_stencil);
TFE_BENCH_PAIR(BM_gradient_assembly);
TFE_BENCH_PAIR(BM_hessian_bands);
TFE_BENCH_PAIR(BM_weighted_dot);
BENCHMARK(BM_pentadiagonal_solve)->RangeMultiplier(8)->Range(1 << 10, 1 << 19);

}  // namespace

BENCHMARK_MAIN();
