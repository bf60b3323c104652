#include "panograph/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

namespace panograph::kernels {

void mix_forward(const MixDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  const std::size_t L = d.length;
#pragma omp parallel
  {
    std::vector<double> acc(L);
#pragma omp for collapse(2) schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t o = 0; o < d.out; ++o) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < d.in; ++i) {
          const double wio = w[i * d.out + o];
          const double* xr = x.data() + (b * d.in + i) * L;
          for (std::size_t l = 0; l < L; ++l) acc[l] += wio * xr[l];
        }
        double* yr = y.data() + (b * d.out + o) * L;
        for (std::size_t l = 0; l < L; ++l) yr[l] += acc[l];
      }
    }
  }
}

void mix_backward_input(const MixDims& d, std::span<const double> dy, std::span<const double> w,
                        std::span<double> dx) {
  const std::size_t L = d.length;
#pragma omp parallel
  {
    std::vector<double> acc(L);
#pragma omp for collapse(2) schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t i = 0; i < d.in; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t o = 0; o < d.out; ++o) {
          const double wio = w[i * d.out + o];
          const double* gr = dy.data() + (b * d.out + o) * L;
          for (std::size_t l = 0; l < L; ++l) acc[l] += wio * gr[l];
        }
        double* xr = dx.data() + (b * d.in + i) * L;
        for (std::size_t l = 0; l < L; ++l) xr[l] += acc[l];
      }
    }
  }
}

void mix_backward_weight(const MixDims& d, std::span<const double> x, std::span<const double> dy,
                         std::span<double> dw) {
  const std::size_t L = d.length;
  // dy transposed to [batch][length][out] turns the per-weight dot products into
  // contiguous axpy updates over `out`, keeping the (b, l) summation order.
  std::vector<double> dyt(d.batch * L * d.out);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t o = 0; o < d.out; ++o) dyt[(b * L + l) * d.out + o] = dy[(b * d.out + o) * L + l];
#pragma omp parallel
  {
    std::vector<double> acc(d.out);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < d.in; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t b = 0; b < d.batch; ++b) {
        const double* xr = x.data() + (b * d.in + i) * L;
        const double* gb = dyt.data() + b * L * d.out;
        for (std::size_t l = 0; l < L; ++l) {
          const double a = xr[l];
          const double* gl = gb + l * d.out;
          for (std::size_t o = 0; o < d.out; ++o) acc[o] += a * gl[o];
        }
      }
      double* wr = dw.data() + i * d.out;
      for (std::size_t o = 0; o < d.out; ++o) wr[o] += acc[o];
    }
  }
}

void aggregate_forward(const AggregateDims& d, std::span<const double> z, std::span<const double> g,
                       std::span<double> y) {
  const std::size_t N = d.nodes;
  std::vector<double> gt(N * N);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t m = 0; m < N; ++m) gt[m * N + n] = g[n * N + m];
#pragma omp parallel
  {
    std::vector<double> acc(N);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* zr = z.data() + r * N;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t m = 0; m < N; ++m) {
        const double a = zr[m];
        const double* gm = gt.data() + m * N;
        for (std::size_t n = 0; n < N; ++n) acc[n] += gm[n] * a;
      }
      double* yr = y.data() + r * N;
      for (std::size_t n = 0; n < N; ++n) yr[n] += acc[n];
    }
  }
}

void aggregate_backward_input(const AggregateDims& d, std::span<const double> dy, std::span<const double> g,
                              std::span<double> dz) {
  const std::size_t N = d.nodes;
#pragma omp parallel
  {
    std::vector<double> acc(N);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* gr = dy.data() + r * N;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t n = 0; n < N; ++n) {
        const double a = gr[n];
        const double* gn = g.data() + n * N;
        for (std::size_t m = 0; m < N; ++m) acc[m] += gn[m] * a;
      }
      double* zr = dz.data() + r * N;
      for (std::size_t m = 0; m < N; ++m) zr[m] += acc[m];
    }
  }
}

void aggregate_backward_matrix(const AggregateDims& d, std::span<const double> dy, std::span<const double> z,
                               std::span<double> dg) {
  const std::size_t N = d.nodes;
#pragma omp parallel
  {
    std::vector<double> acc(N);
#pragma omp for schedule(static)
    for (std::size_t n = 0; n < N; ++n) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double a = dy[r * N + n];
        const double* zr = z.data() + r * N;
        for (std::size_t m = 0; m < N; ++m) acc[m] += a * zr[m];
      }
      double* gn = dg.data() + n * N;
      for (std::size_t m = 0; m < N; ++m) gn[m] += acc[m];
    }
  }
}

namespace {

// Input frame feeding output frame `to` through tap k, or -1 when it falls in the padding.
inline long source_frame(const TemporalDims& d, std::size_t to, std::size_t k) {
  const long t = static_cast<long>(to * d.stride + k * d.dilation) - static_cast<long>(d.pad());
  return (t < 0 || t >= static_cast<long>(d.time)) ? -1 : t;
}

}  // namespace

void temporal_forward(const TemporalDims& d, std::span<const double> x, std::span<const double> w,
                      std::span<double> y) {
  const std::size_t N = d.nodes;
  const std::size_t To = d.out_time();
#pragma omp parallel
  {
    std::vector<double> acc(To * N);
#pragma omp for collapse(2) schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t o = 0; o < d.out; ++o) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < d.in; ++i) {
          const double* xi = x.data() + (b * d.in + i) * d.time * N;
          for (std::size_t k = 0; k < d.taps; ++k) {
            const double wk = w[(o * d.in + i) * d.taps + k];
            for (std::size_t to = 0; to < To; ++to) {
              const long t = source_frame(d, to, k);
              if (t < 0) continue;
              const double* xr = xi + static_cast<std::size_t>(t) * N;
              double* ar = acc.data() + to * N;
              for (std::size_t n = 0; n < N; ++n) ar[n] += wk * xr[n];
            }
          }
        }
        double* yo = y.data() + (b * d.out + o) * To * N;
        for (std::size_t j = 0; j < To * N; ++j) yo[j] += acc[j];
      }
    }
  }
}

void temporal_backward_input(const TemporalDims& d, std::span<const double> dy, std::span<const double> w,
                             std::span<double> dx) {
  const std::size_t N = d.nodes;
  const std::size_t To = d.out_time();
#pragma omp parallel
  {
    std::vector<double> acc(d.time * N);
#pragma omp for collapse(2) schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t i = 0; i < d.in; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t o = 0; o < d.out; ++o) {
          const double* go = dy.data() + (b * d.out + o) * To * N;
          for (std::size_t k = 0; k < d.taps; ++k) {
            const double wk = w[(o * d.in + i) * d.taps + k];
            for (std::size_t to = 0; to < To; ++to) {
              const long t = source_frame(d, to, k);
              if (t < 0) continue;
              double* ar = acc.data() + static_cast<std::size_t>(t) * N;
              const double* gr = go + to * N;
              for (std::size_t n = 0; n < N; ++n) ar[n] += wk * gr[n];
            }
          }
        }
        double* xi = dx.data() + (b * d.in + i) * d.time * N;
        for (std::size_t j = 0; j < d.time * N; ++j) xi[j] += acc[j];
      }
    }
  }
}

void temporal_backward_weight(const TemporalDims& d, std::span<const double> x, std::span<const double> dy,
                              std::span<double> dw) {
  const std::size_t N = d.nodes;
  const std::size_t To = d.out_time();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t o = 0; o < d.out; ++o) {
    for (std::size_t i = 0; i < d.in; ++i) {
      for (std::size_t k = 0; k < d.taps; ++k) {
        double s = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
          const double* xi = x.data() + (b * d.in + i) * d.time * N;
          const double* go = dy.data() + (b * d.out + o) * To * N;
          for (std::size_t to = 0; to < To; ++to) {
            const long t = source_frame(d, to, k);
            if (t < 0) continue;
            const double* xr = xi + static_cast<std::size_t>(t) * N;
            const double* gr = go + to * N;
            for (std::size_t n = 0; n < N; ++n) s += xr[n] * gr[n];
          }
        }
        dw[(o * d.in + i) * d.taps + k] += s;
      }
    }
  }
}

int configure_threads_from_env() {
  if (const char* env = std::getenv("PANOGRAPH_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0 && cap < omp_get_max_threads()) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // Non-numeric values leave the runtime default in place.
    }
  }
  return omp_get_max_threads();
}

// Straight loop nests, one output element at a time.
namespace reference {

void mix_forward(const MixDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out; ++o)
      for (std::size_t l = 0; l < d.length; ++l) {
        double s = 0.0;
        for (std::size_t i = 0; i < d.in; ++i) s += w[i * d.out + o] * x[(b * d.in + i) * d.length + l];
        y[(b * d.out + o) * d.length + l] += s;
      }
}

void mix_backward_input(const MixDims& d, std::span<const double> dy, std::span<const double> w,
                        std::span<double> dx) {
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t i = 0; i < d.in; ++i)
      for (std::size_t l = 0; l < d.length; ++l) {
        double s = 0.0;
        for (std::size_t o = 0; o < d.out; ++o) s += w[i * d.out + o] * dy[(b * d.out + o) * d.length + l];
        dx[(b * d.in + i) * d.length + l] += s;
      }
}

void mix_backward_weight(const MixDims& d, std::span<const double> x, std::span<const double> dy,
                         std::span<double> dw) {
  for (std::size_t i = 0; i < d.in; ++i)
    for (std::size_t o = 0; o < d.out; ++o) {
      double s = 0.0;
      for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t l = 0; l < d.length; ++l)
          s += x[(b * d.in + i) * d.length + l] * dy[(b * d.out + o) * d.length + l];
      dw[i * d.out + o] += s;
    }
}

void aggregate_forward(const AggregateDims& d, std::span<const double> z, std::span<const double> g,
                       std::span<double> y) {
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t n = 0; n < d.nodes; ++n) {
      double s = 0.0;
      for (std::size_t m = 0; m < d.nodes; ++m) s += g[n * d.nodes + m] * z[r * d.nodes + m];
      y[r * d.nodes + n] += s;
    }
}

void aggregate_backward_input(const AggregateDims& d, std::span<const double> dy, std::span<const double> g,
                              std::span<double> dz) {
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t m = 0; m < d.nodes; ++m) {
      double s = 0.0;
      for (std::size_t n = 0; n < d.nodes; ++n) s += g[n * d.nodes + m] * dy[r * d.nodes + n];
      dz[r * d.nodes + m] += s;
    }
}

void aggregate_backward_matrix(const AggregateDims& d, std::span<const double> dy, std::span<const double> z,
                               std::span<double> dg) {
  for (std::size_t n = 0; n < d.nodes; ++n)
    for (std::size_t m = 0; m < d.nodes; ++m) {
      double s = 0.0;
      for (std::size_t r = 0; r < d.rows; ++r) s += dy[r * d.nodes + n] * z[r * d.nodes + m];
      dg[n * d.nodes + m] += s;
    }
}

void temporal_forward(const TemporalDims& d, std::span<const double> x, std::span<const double> w,
                      std::span<double> y) {
  const std::size_t To = d.out_time();
  const long pad = static_cast<long>(d.pad());
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out; ++o)
      for (std::size_t to = 0; to < To; ++to)
        for (std::size_t n = 0; n < d.nodes; ++n) {
          double s = 0.0;
          for (std::size_t i = 0; i < d.in; ++i)
            for (std::size_t k = 0; k < d.taps; ++k) {
              const long t = static_cast<long>(to * d.stride + k * d.dilation) - pad;
              if (t < 0 || t >= static_cast<long>(d.time)) continue;
              s += w[(o * d.in + i) * d.taps + k] * x[((b * d.in + i) * d.time + t) * d.nodes + n];
            }
          y[((b * d.out + o) * To + to) * d.nodes + n] += s;
        }
}

void temporal_backward_input(const TemporalDims& d, std::span<const double> dy, std::span<const double> w,
                             std::span<double> dx) {
  const std::size_t To = d.out_time();
  const long pad = static_cast<long>(d.pad());
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t i = 0; i < d.in; ++i)
      for (std::size_t t = 0; t < d.time; ++t)
        for (std::size_t n = 0; n < d.nodes; ++n) {
          double s = 0.0;
          for (std::size_t o = 0; o < d.out; ++o)
            for (std::size_t k = 0; k < d.taps; ++k) {
              const long shifted = static_cast<long>(t) + pad - static_cast<long>(k * d.dilation);
              if (shifted < 0 || shifted % static_cast<long>(d.stride) != 0) continue;
              const auto to = static_cast<std::size_t>(shifted) / d.stride;
              if (to >= To) continue;
              s += w[(o * d.in + i) * d.taps + k] * dy[((b * d.out + o) * To + to) * d.nodes + n];
            }
          dx[((b * d.in + i) * d.time + t) * d.nodes + n] += s;
        }
}

void temporal_backward_weight(const TemporalDims& d, std::span<const double> x, std::span<const double> dy,
                              std::span<double> dw) {
  const std::size_t To = d.out_time();
  const long pad = static_cast<long>(d.pad());
  for (std::size_t o = 0; o < d.out; ++o)
    for (std::size_t i = 0; i < d.in; ++i)
      for (std::size_t k = 0; k < d.taps; ++k) {
        double s = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b)
          for (std::size_t to = 0; to < To; ++to) {
            const long t = static_cast<long>(to * d.stride + k * d.dilation) - pad;
            if (t < 0 || t >= static_cast<long>(d.time)) continue;
            for (std::size_t n = 0; n < d.nodes; ++n)
              s += x[((b * d.in + i) * d.time + t) * d.nodes + n] * dy[((b * d.out + o) * To + to) * d.nodes + n];
          }
        dw[(o * d.in + i) * d.taps + k] += s;
      }
}

}  // namespace reference
}  // namespace panograph::kernels
