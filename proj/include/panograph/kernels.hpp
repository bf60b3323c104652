#pragma once

// Data-parallel inner loops of the network. Every kernel has an OpenMP
// version (panograph::kernels) and a plain serial version
// (panograph::kernels::reference) used by the tests and the benchmark.
// Each output element is owned by exactly one thread and accumulated in a
// fixed order, so both versions produce bitwise identical results.
//
// All kernels accumulate into their output (`out += ...`); callers zero the
// output first when they need a plain assignment.

#include <cstddef>
#include <span>

namespace panograph::kernels {

/// Dimensions of a channel-mixing (1x1 convolution) problem:
/// x is [batch][in][length], W is [in][out], y is [batch][out][length].
struct MixDims {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
  std::size_t length;
};

/// Dimensions of a node aggregation: z and y are [rows][nodes], G is [nodes][nodes].
struct AggregateDims {
  std::size_t rows;
  std::size_t nodes;
};

/// Temporal convolution over x [batch][in][time][nodes] with kernel W [out][in][taps].
struct TemporalDims {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
  std::size_t time;
  std::size_t nodes;
  std::size_t taps;
  std::size_t dilation;
  std::size_t stride;

  std::size_t pad() const { return dilation * (taps - 1) / 2; }
  std::size_t out_time() const { return (time + stride - 1) / stride; }
};

// y[b,o,l] += sum_i W[i,o] x[b,i,l]
void mix_forward(const MixDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
// dx[b,i,l] += sum_o W[i,o] dy[b,o,l]
void mix_backward_input(const MixDims& d, std::span<const double> dy, std::span<const double> w,
                        std::span<double> dx);
// dW[i,o] += sum_{b,l} x[b,i,l] dy[b,o,l]
void mix_backward_weight(const MixDims& d, std::span<const double> x, std::span<const double> dy,
                         std::span<double> dw);

// y[r,n] += sum_m G[n,m] z[r,m]
void aggregate_forward(const AggregateDims& d, std::span<const double> z, std::span<const double> g,
                       std::span<double> y);
// dz[r,m] += sum_n G[n,m] dy[r,n]
void aggregate_backward_input(const AggregateDims& d, std::span<const double> dy, std::span<const double> g,
                              std::span<double> dz);
// dG[n,m] += sum_r dy[r,n] z[r,m]
void aggregate_backward_matrix(const AggregateDims& d, std::span<const double> dy, std::span<const double> z,
                               std::span<double> dg);

// y[b,o,t',n] += sum_{i,k} W[o,i,k] x[b,i,t'*stride + k*dilation - pad, n]  (zero padded)
void temporal_forward(const TemporalDims& d, std::span<const double> x, std::span<const double> w,
                      std::span<double> y);
void temporal_backward_input(const TemporalDims& d, std::span<const double> dy, std::span<const double> w,
                             std::span<double> dx);
void temporal_backward_weight(const TemporalDims& d, std::span<const double> x, std::span<const double> dy,
                              std::span<double> dw);

namespace reference {

void mix_forward(const MixDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void mix_backward_input(const MixDims& d, std::span<const double> dy, std::span<const double> w,
                        std::span<double> dx);
void mix_backward_weight(const MixDims& d, std::span<const double> x, std::span<const double> dy,
                         std::span<double> dw);
void aggregate_forward(const AggregateDims& d, std::span<const double> z, std::span<const double> g,
                       std::span<double> y);
void aggregate_backward_input(const AggregateDims& d, std::span<const double> dy, std::span<const double> g,
                              std::span<double> dz);
void aggregate_backward_matrix(const AggregateDims& d, std::span<const double> dy, std::span<const double> z,
                               std::span<double> dg);
void temporal_forward(const TemporalDims& d, std::span<const double> x, std::span<const double> w,
                      std::span<double> y);
void temporal_backward_input(const TemporalDims& d, std::span<const double> dy, std::span<const double> w,
                             std::span<double> dx);
void temporal_backward_weight(const TemporalDims& d, std::span<const double> x, std::span<const double> dy,
                              std::span<double> dw);

}  // namespace reference

/// Applies the PANOGRAPH_THREADS cap (if set) to the OpenMP runtime.
/// Returns the thread count in effect.
int configure_threads_from_env();

}  // namespace panograph::kernels
