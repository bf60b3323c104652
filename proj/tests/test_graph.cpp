#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "panograph/errors.hpp"
#include "panograph/graph.hpp"

namespace {

using namespace panograph;
using namespace panograph::graph;

TEST(Graph, CocoTopology) {
  const auto edges = build_intra_topology(Layout::Coco17, 17);
  EXPECT_EQ(edges.size(), 18u);
  for (const auto& [a, b] : edges) {
    EXPECT_LT(a, b);
    EXPECT_LT(b, 17u);
  }
  EXPECT_EQ(center_joints(Layout::Coco17, 17), (std::vector<std::size_t>{11, 12}));
  EXPECT_THROW(make_body(Layout::Coco17, 15), ConfigError);
}

TEST(Graph, ChainTopology) {
  const auto edges = build_intra_topology(Layout::Chain, 4);
  EXPECT_EQ(edges, (std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_EQ(center_joints(Layout::Chain, 5), (std::vector<std::size_t>{2}));
}

TEST(Graph, ParseNames) {
  EXPECT_EQ(parse_layout("coco17"), Layout::Coco17);
  EXPECT_EQ(parse_inter_variant("fully-connected"), InterVariant::FullyConnected);
  EXPECT_EQ(to_string(InterVariant::Linear), "linear");
  EXPECT_THROW(parse_layout("hand21"), ConfigError);
  EXPECT_THROW(parse_inter_variant("star"), ConfigError);
}

TEST(Graph, ObjectAttachmentErrors) {
  const auto body = make_body(Layout::Chain, 3);
  EXPECT_THROW(attach_objects(body, 1, {{1, 0}}), ConfigError);
  EXPECT_THROW(attach_objects(body, 1, {{0, 3}}), ConfigError);
  EXPECT_THROW(attach_objects(body, 1, {{0, 1}, {0, 1}}), ConfigError);
  const auto with_ball = attach_objects(body, 1, {{0, 2}});
  EXPECT_EQ(with_ball.nodes(), 4u);
}

TEST(Graph, NbaSizes) {
  auto body = attach_objects(make_body(Layout::Coco17, 17), 2, {{0, 9}, {0, 10}, {1, 9}, {1, 10}});
  const auto g = make_panoramic(body, 12, InterVariant::Pairwise);
  EXPECT_EQ(g.num_nodes(), 228u);
  const auto adj = partition_and_normalize(g);
  EXPECT_EQ(adj.partitions[0].shape(), (Shape{228, 228}));
}

TEST(Graph, SinglePersonHasNoInterEdges) {
  const auto g = make_panoramic(make_body(Layout::Chain, 4), 1, InterVariant::Pairwise);
  EXPECT_TRUE(g.inter_edges.empty());
  const auto adj = partition_and_normalize(g);
  for (double v : adj.partitions[2].values()) EXPECT_EQ(v, 0.0);
}

TEST(Graph, InterVariantsLinkCenters) {
  const auto body = make_body(Layout::Chain, 3);  // center joint 1
  const auto pairwise = build_inter_edges(3, body, InterVariant::Pairwise);
  const auto linear = build_inter_edges(3, body, InterVariant::Linear);
  const auto full = build_inter_edges(3, body, InterVariant::FullyConnected);
  EXPECT_EQ(pairwise, (std::vector<Edge>{{1, 4}, {1, 7}, {4, 7}}));
  EXPECT_EQ(linear, (std::vector<Edge>{{1, 4}, {4, 7}}));
  EXPECT_EQ(full, pairwise);
  EXPECT_TRUE(build_inter_edges(3, body, InterVariant::None).empty());
}

TEST(Graph, PairwiseLinksObjectsAcrossPersons) {
  const auto body = attach_objects(make_body(Layout::Chain, 3), 1, {{0, 2}});
  const auto pairwise = build_inter_edges(2, body, InterVariant::Pairwise);
  const auto full = build_inter_edges(2, body, InterVariant::FullyConnected);
  const std::set<Edge> p(pairwise.begin(), pairwise.end());
  EXPECT_TRUE(p.count({3, 7}));   // ball of person 0 <-> ball of person 1
  EXPECT_TRUE(p.count({1, 5}));   // centers
  EXPECT_EQ(full, (std::vector<Edge>{{1, 5}}));
}

TEST(Graph, SharedObjectGraph) {
  const auto body = attach_objects(make_body(Layout::Chain, 3), 1, {{0, 2}});
  const auto g = make_shared_object_graph(body, 2, InterVariant::Pairwise);
  EXPECT_EQ(g.num_nodes(), 7u);
  EXPECT_EQ(g.block_of(6), 2u);
  EXPECT_NO_THROW(validate(g));
}

TEST(Graph, BoneParents) {
  const auto coco = make_body(Layout::Coco17, 17);
  const auto parents = bone_parents(coco);
  EXPECT_EQ(parents[0], 0u);
  std::set<Edge> edges(coco.edges.begin(), coco.edges.end());
  for (std::size_t i = 1; i < 17; ++i) {
    EXPECT_TRUE(edges.count({std::min(i, parents[i]), std::max(i, parents[i])})) << i;
  }
  const auto ball = attach_objects(make_body(Layout::Chain, 4), 1, {{0, 3}});
  EXPECT_EQ(bone_parents(ball)[4], 3u);
}

TEST(Graph, NormalizedAdjacencyIsolatedRowsStayZero) {
  const auto a = normalized_adjacency(3, {{0, 1}});
  EXPECT_DOUBLE_EQ(a.at({0, 1}), 1.0);
  EXPECT_EQ(a.at({2, 2}), 0.0);
}

TEST(Graph, TwoPersonExample) {
  // Two 2-joint chains with pairwise center links: every node has degree 1 within each partition.
  const auto g = make_panoramic(make_body(Layout::Chain, 2), 2, InterVariant::Pairwise);
  const auto adj = partition_and_normalize(g);
  EXPECT_DOUBLE_EQ(adj.partitions[1].at({0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(adj.partitions[2].at({1, 3}), 1.0);
  EXPECT_EQ(adj.partitions[2].at({0, 2}), 0.0);
}

}  // namespace
