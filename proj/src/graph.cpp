#include "panograph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "panograph/errors.hpp"

namespace panograph::graph {

namespace {

constexpr std::size_t kCocoJoints = 17;
constexpr std::size_t kCocoLeftHip = 11;
constexpr std::size_t kCocoRightHip = 12;

const std::vector<Edge>& coco_edges() {
  static const std::vector<Edge> edges = {
      {0, 1},  {0, 2},  {1, 3},   {2, 4},   {0, 5},   {0, 6},   {5, 7},   {7, 9},   {6, 8},
      {8, 10}, {5, 11}, {6, 12},  {5, 6},   {11, 12}, {11, 13}, {13, 15}, {12, 14}, {14, 16},
  };
  return edges;
}

Edge ordered(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

Layout parse_layout(std::string_view name) {
  if (name == "coco17") return Layout::Coco17;
  if (name == "chain") return Layout::Chain;
  throw ConfigError("unknown skeleton layout '" + std::string(name) + "' (expected coco17 or chain)");
}

std::string to_string(Layout layout) { return layout == Layout::Coco17 ? "coco17" : "chain"; }

InterVariant parse_inter_variant(std::string_view name) {
  if (name == "none") return InterVariant::None;
  if (name == "fully-connected") return InterVariant::FullyConnected;
  if (name == "linear") return InterVariant::Linear;
  if (name == "pairwise") return InterVariant::Pairwise;
  throw ConfigError("unknown inter-body variant '" + std::string(name) +
                    "' (expected none, fully-connected, linear or pairwise)");
}

std::string to_string(InterVariant variant) {
  switch (variant) {
    case InterVariant::None: return "none";
    case InterVariant::FullyConnected: return "fully-connected";
    case InterVariant::Linear: return "linear";
    case InterVariant::Pairwise: return "pairwise";
  }
  return "pairwise";
}

std::size_t GraphTopology::num_nodes() const {
  if (shared_objects) return num_persons * body.joints + body.objects;
  return num_persons * body.nodes();
}

std::size_t GraphTopology::block_of(std::size_t node) const {
  if (shared_objects) {
    const std::size_t person_nodes = num_persons * body.joints;
    return node >= person_nodes ? num_persons : node / body.joints;
  }
  return node / body.nodes();
}

std::vector<Edge> build_intra_topology(Layout layout, std::size_t joints) {
  if (layout == Layout::Coco17) {
    if (joints != kCocoJoints) {
      throw ConfigError("coco17 layout requires 17 joints, got " + std::to_string(joints));
    }
    return coco_edges();
  }
  if (joints == 0) throw ConfigError("chain layout requires at least one joint");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < joints; ++i) edges.emplace_back(i, i + 1);
  return edges;
}

std::vector<std::size_t> center_joints(Layout layout, std::size_t joints) {
  if (layout == Layout::Coco17) return {kCocoLeftHip, kCocoRightHip};
  return {joints / 2};
}

BodyTopology make_body(Layout layout, std::size_t joints) {
  BodyTopology body;
  body.layout = layout;
  body.joints = joints;
  body.edges = build_intra_topology(layout, joints);
  body.centers = center_joints(layout, joints);
  return body;
}

BodyTopology attach_objects(BodyTopology body, std::size_t objects, const std::vector<ObjectAttachment>& attachments) {
  if (body.objects != 0) throw ConfigError("objects are already attached to this body topology");
  std::set<Edge> seen(body.edges.begin(), body.edges.end());
  for (const auto& a : attachments) {
    if (a.slot >= objects) {
      throw ConfigError("object attachment slot " + std::to_string(a.slot) + " out of range (n=" +
                        std::to_string(objects) + ")");
    }
    if (a.joint >= body.joints) {
      throw ConfigError("object attachment joint " + std::to_string(a.joint) + " out of range (V=" +
                        std::to_string(body.joints) + ")");
    }
    const Edge e = ordered(body.joints + a.slot, a.joint);
    if (!seen.insert(e).second) throw ConfigError("duplicate object attachment");
    body.edges.push_back(e);
  }
  body.objects = objects;
  body.attachments = attachments;
  return body;
}

std::vector<Edge> build_inter_edges(std::size_t persons, const BodyTopology& body, InterVariant variant) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  switch (variant) {
    case InterVariant::None:
      break;
    case InterVariant::Linear:
      for (std::size_t p = 0; p + 1 < persons; ++p) pairs.emplace_back(p, p + 1);
      break;
    case InterVariant::FullyConnected:
    case InterVariant::Pairwise:
      for (std::size_t p = 0; p < persons; ++p)
        for (std::size_t q = p + 1; q < persons; ++q) pairs.emplace_back(p, q);
      break;
  }
  // Fully-connected joins body centers only; pairwise and linear also join object keypoints.
  const bool link_objects = variant != InterVariant::FullyConnected;
  const std::size_t stride = body.nodes();
  std::vector<Edge> edges;
  for (auto [p, q] : pairs) {
    for (std::size_t c : body.centers) edges.emplace_back(p * stride + c, q * stride + c);
    if (link_objects) {
      for (std::size_t s = 0; s < body.objects; ++s) {
        edges.emplace_back(p * stride + body.joints + s, q * stride + body.joints + s);
      }
    }
  }
  return edges;
}

GraphTopology make_panoramic(const BodyTopology& body, std::size_t persons, InterVariant variant) {
  if (persons == 0) throw ConfigError("number of persons must be at least 1");
  GraphTopology g;
  g.num_persons = persons;
  g.body = body;
  const std::size_t stride = body.nodes();
  for (std::size_t p = 0; p < persons; ++p) {
    for (auto [a, b] : body.edges) g.intra_edges.emplace_back(p * stride + a, p * stride + b);
  }
  g.inter_edges = build_inter_edges(persons, body, variant);
  validate(g);
  return g;
}

GraphTopology make_shared_object_graph(const BodyTopology& body, std::size_t persons, InterVariant variant) {
  if (persons == 0) throw ConfigError("number of persons must be at least 1");
  GraphTopology g;
  g.num_persons = persons;
  g.body = body;
  g.shared_objects = true;
  const std::size_t V = body.joints;
  const std::size_t object_base = persons * V;
  for (std::size_t p = 0; p < persons; ++p) {
    for (auto [a, b] : body.edges) {
      if (a < V && b < V) g.intra_edges.emplace_back(p * V + a, p * V + b);
    }
    for (const auto& att : body.attachments) {
      g.intra_edges.push_back(ordered(p * V + att.joint, object_base + att.slot));
    }
  }
  if (variant != InterVariant::None) {
    BodyTopology joints_only = body;
    joints_only.objects = 0;
    for (auto e : build_inter_edges(persons, joints_only, variant)) g.inter_edges.push_back(e);
  }
  validate(g);
  return g;
}

void validate(const GraphTopology& g) {
  const std::size_t total = g.num_nodes();
  std::set<Edge> seen;
  auto check = [&](const std::vector<Edge>& edges, bool intra) {
    for (auto [a, b] : edges) {
      if (a >= total || b >= total) throw ConfigError("edge endpoint out of range");
      if (a == b) throw ConfigError("self loop in edge list");
      if (!seen.insert(ordered(a, b)).second) throw ConfigError("duplicate edge");
      const std::size_t ba = g.block_of(a);
      const std::size_t bb = g.block_of(b);
      const bool shared_link = g.shared_objects && (ba == g.num_persons || bb == g.num_persons);
      if (intra && ba != bb && !shared_link) throw ConfigError("intra edge spans two person blocks");
      if (!intra && ba == bb) throw ConfigError("inter edge within a single person block");
    }
  };
  check(g.intra_edges, true);
  check(g.inter_edges, false);
}

Tensor normalized_adjacency(std::size_t nodes, const std::vector<Edge>& edges) {
  Tensor a({nodes, nodes});
  for (auto [i, j] : edges) {
    a.at({i, j}) = 1.0;
    a.at({j, i}) = 1.0;
  }
  std::vector<double> degree(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) degree[i] += a[i * nodes + j];
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      double& v = a[i * nodes + j];
      if (v == 0.0) continue;
      v /= std::sqrt(degree[i] * degree[j]);
    }
  }
  return a;
}

PartitionedAdjacency partition_and_normalize(const GraphTopology& topology) {
  const std::size_t n = topology.num_nodes();
  PartitionedAdjacency adj;
  adj.size = n;
  adj.partitions[0] = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) adj.partitions[0][i * n + i] = 1.0;
  adj.partitions[1] = normalized_adjacency(n, topology.intra_edges);
  adj.partitions[2] = normalized_adjacency(n, topology.inter_edges);
  return adj;
}

std::vector<std::size_t> bone_parents(const BodyTopology& body) {
  const std::size_t V = body.joints;
  std::vector<std::vector<std::size_t>> neighbours(V);
  for (auto [a, b] : body.edges) {
    if (a < V && b < V) {
      neighbours[a].push_back(b);
      neighbours[b].push_back(a);
    }
  }
  for (auto& list : neighbours) std::sort(list.begin(), list.end());

  std::vector<std::size_t> parent(body.nodes());
  std::vector<bool> visited(V, false);
  for (std::size_t i = 0; i < V; ++i) parent[i] = i;
  // Joints unreachable from the root keep themselves as parent (zero bone).
  std::queue<std::size_t> frontier;
  if (V > 0) {
    frontier.push(0);
    visited[0] = true;
  }
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v : neighbours[u]) {
      if (visited[v]) continue;
      visited[v] = true;
      parent[v] = u;
      frontier.push(v);
    }
  }
  for (std::size_t s = 0; s < body.objects; ++s) {
    const std::size_t node = V + s;
    parent[node] = node;
    for (const auto& a : body.attachments) {
      if (a.slot == s) {
        parent[node] = a.joint;
        break;
      }
    }
  }
  return parent;
}

}  // namespace panograph::graph
