#pragma once

// Panoramic multi-person-object graph: per-person body topology, optional
// object keypoints wired to body joints, inter-person links, and the three
// normalized adjacency partitions (self / intra-person / inter-person).

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "panograph/tensor.hpp"

namespace panograph::graph {

enum class Layout { Coco17, Chain };
enum class InterVariant { None, FullyConnected, Linear, Pairwise };

Layout parse_layout(std::string_view name);
std::string to_string(Layout layout);
InterVariant parse_inter_variant(std::string_view name);
std::string to_string(InterVariant variant);

/// Undirected edge, stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

struct ObjectAttachment {
  std::size_t slot;   // object keypoint index in [0, n)
  std::size_t joint;  // body joint index in [0, V)

  bool operator==(const ObjectAttachment&) const = default;
};

/// One person-object unit in local node indices: joints [0, V), objects [V, V+n).
struct BodyTopology {
  Layout layout = Layout::Chain;
  std::size_t joints = 0;
  std::size_t objects = 0;
  std::vector<Edge> edges;
  std::vector<ObjectAttachment> attachments;
  std::vector<std::size_t> centers;

  std::size_t nodes() const { return joints + objects; }
};

struct GraphTopology {
  std::size_t num_persons = 0;
  BodyTopology body;
  std::vector<Edge> intra_edges;  // global node indices
  std::vector<Edge> inter_edges;  // global node indices
  bool shared_objects = false;    // objects stored once after all persons

  std::size_t nodes_per_person() const { return body.nodes(); }
  std::size_t num_nodes() const;
  /// Person block of a global node, or num_persons for a shared object node.
  std::size_t block_of(std::size_t node) const;
};

/// Self, intra-person and inter-person partitions, each symmetrically normalized.
struct PartitionedAdjacency {
  static constexpr std::size_t kPartitions = 3;
  std::size_t size = 0;
  std::array<Tensor, kPartitions> partitions;  // each [size, size]
};

/// The 18 COCO limb edges over the 17-keypoint order, or the chain (i, i+1).
std::vector<Edge> build_intra_topology(Layout layout, std::size_t joints);

/// Center joints used for relative coordinates and inter-person links.
std::vector<std::size_t> center_joints(Layout layout, std::size_t joints);

BodyTopology make_body(Layout layout, std::size_t joints);

/// Adds n per-person object keypoints, each linked to its attachment joints.
BodyTopology attach_objects(BodyTopology body, std::size_t objects, const std::vector<ObjectAttachment>& attachments);

/// Global inter-person edges for M copies of `body`.
std::vector<Edge> build_inter_edges(std::size_t persons, const BodyTopology& body, InterVariant variant);

/// M replicas of `body` (intra edges) plus inter-person edges.
GraphTopology make_panoramic(const BodyTopology& body, std::size_t persons, InterVariant variant);

/// Object nodes shared by all persons (the pose*M+objects ablation): M*V + n nodes,
/// each object linked to the attachment joints of every person. Graph-level only.
GraphTopology make_shared_object_graph(const BodyTopology& body, std::size_t persons, InterVariant variant);

/// Throws ConfigError if any structural invariant of the topology is violated.
void validate(const GraphTopology& topology);

PartitionedAdjacency partition_and_normalize(const GraphTopology& topology);

/// D^{-1/2} A D^{-1/2} of a symmetric 0/1 matrix built from `edges`; isolated rows stay zero.
Tensor normalized_adjacency(std::size_t nodes, const std::vector<Edge>& edges);

/// Bone parent of every local node: BFS tree over the body joints rooted at joint 0,
/// objects hang from their first attachment joint. The root is its own parent.
std::vector<std::size_t> bone_parents(const BodyTopology& body);

}  // namespace panograph::graph
