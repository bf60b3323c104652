#pragma once

// Independent brute-force implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "panograph/graph.hpp"
#include "panograph/reassign.hpp"
#include "panograph/tensor.hpp"

namespace oracle {

using panograph::Tensor;
using panograph::reassign::Candidate;
using panograph::reassign::TrackId;

/// Dense D^-1/2 A D^-1/2 over an explicit 0/1 matrix.
inline Tensor normalize(const std::vector<std::vector<int>>& a) {
  const std::size_t n = a.size();
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i][j] && deg[i] > 0 && deg[j] > 0) out.at({i, j}) = 1.0 / std::sqrt(deg[i] * deg[j]);
  return out;
}

/// Expected partitions of a panoramic topology: identity, intra edges, inter edges.
inline std::vector<Tensor> partitions(const panograph::graph::GraphTopology& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<int>> intra(n, std::vector<int>(n, 0)), inter = intra;
  for (auto [a, b] : g.intra_edges) intra[a][b] = intra[b][a] = 1;
  for (auto [a, b] : g.inter_edges) inter[a][b] = inter[b][a] = 1;
  Tensor eye({n, n});
  for (std::size_t i = 0; i < n; ++i) eye.at({i, i}) = 1.0;
  return {eye, normalize(intra), normalize(inter)};
}

/// Two-stage roster assignment written from the definition:
/// a candidate is kept when fewer than M candidates beat it (higher score, or equal score and smaller id);
/// each slot s goes to the smallest kept id congruent to s mod M; the remaining kept ids,
/// ascending, fill the empty slots in ascending order.
inline std::vector<std::optional<TrackId>> assign(const std::vector<Candidate>& cands, std::size_t M) {
  std::vector<TrackId> kept;
  for (const auto& c : cands) {
    std::size_t better = 0;
    for (const auto& o : cands) {
      if (o.score > c.score || (o.score == c.score && o.track_id < c.track_id)) ++better;
    }
    if (better < M) kept.push_back(c.track_id);
  }
  std::vector<std::optional<TrackId>> slots(M);
  std::set<TrackId> placed;
  for (std::size_t s = 0; s < M; ++s) {
    std::optional<TrackId> best;
    for (TrackId id : kept) {
      const auto r = static_cast<std::size_t>(((id % static_cast<TrackId>(M)) + static_cast<TrackId>(M)) %
                                              static_cast<TrackId>(M));
      if (r == s && (!best || id < *best)) best = id;
    }
    if (best) {
      slots[s] = best;
      placed.insert(*best);
    }
  }
  std::vector<TrackId> rest;
  for (TrackId id : kept)
    if (!placed.count(id)) rest.push_back(id);
  std::sort(rest.begin(), rest.end());
  std::size_t k = 0;
  for (std::size_t s = 0; s < M && k < rest.size(); ++s)
    if (!slots[s]) slots[s] = rest[k++];
  return slots;
}

/// Population std of x plus population std of y, two passes.
inline double spread(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto pstd = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
  };
  return pstd(xs) + pstd(ys);
}

/// Random panoramic topology with M <= 4, V <= 8, n <= 2.
inline panograph::graph::GraphTopology random_topology(std::mt19937_64& rng) {
  using namespace panograph::graph;
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  const std::size_t V = pick(1, 8);
  const std::size_t M = pick(1, 4);
  const std::size_t n = pick(0, 2);
  auto body = make_body(Layout::Chain, V);
  std::vector<ObjectAttachment> att;
  for (std::size_t s = 0; s < n; ++s) {
    std::set<std::size_t> joints;
    const std::size_t links = pick(1, std::min<std::size_t>(V, 2));
    while (joints.size() < links) joints.insert(pick(0, V - 1));
    for (std::size_t j : joints) att.push_back({s, j});
  }
  body = attach_objects(body, n, att);
  const InterVariant variants[] = {InterVariant::None, InterVariant::FullyConnected, InterVariant::Linear,
                                   InterVariant::Pairwise};
  return make_panoramic(body, M, variants[pick(0, 3)]);
}

/// Checks one topology to `tol`; returns an empty string or a description of the first failure.
inline std::string check_adjacency(const panograph::graph::GraphTopology& g, double tol) {
  const auto adj = panograph::graph::partition_and_normalize(g);
  const auto expect = partitions(g);
  const std::size_t n = g.num_nodes();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& p = adj.partitions[k];
    if (p.shape() != panograph::Shape{n, n}) return "partition shape";
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(p.at({i, j}) - p.at({j, i})) > tol) return "asymmetric partition " + std::to_string(k);
        if (std::abs(p.at({i, j}) - expect[k].at({i, j})) > tol) return "oracle mismatch in partition " + std::to_string(k);
      }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      int nonzero = 0;
      for (std::size_t k = 0; k < 3; ++k) nonzero += adj.partitions[k].at({i, j}) != 0.0;
      if (nonzero > 1) return "overlapping support";
    }
  return {};
}

}  // namespace oracle
