#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvscreen/ingest.hpp"

namespace mvscreen::graph {

/// Cosine similarity accumulated in double precision. Throws LengthMismatch
/// or ZeroVector. The result is clamped to [-1, 1].
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Edge validity band and neighbourhood. Both bounds are inclusive.
struct SimilarityConfig {
  double tau_low = 0.40;
  double tau_high = 0.70;
  std::size_t window_frames = 12;

  /// Throws InvalidConfig unless 0 <= tau_low < tau_high <= 1 and window_frames > 0.
  void validate() const;
};

struct GraphNode {
  std::string frame_id;
  std::string participant_id;
  std::int64_t timestamp = 0;

  bool operator==(const GraphNode&) const = default;
};

struct Edge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Undirected graph over frames. Edges are unique and sorted by (i, j).
class SimilarityGraph {
 public:
  SimilarityGraph() = default;
  /// Normalises edge orientation and order, and builds adjacency. Throws
  /// InvalidConfig on self loops, duplicate pairs, out-of-range indices or
  /// cross-participant edges.
  SimilarityGraph(std::vector<GraphNode> nodes, std::vector<Edge> edges);

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Sorted neighbour indices.
  const std::vector<std::size_t>& neighbors(std::size_t node) const { return adjacency_[node]; }
  std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }
  bool has_edge(std::size_t a, std::size_t b) const;

  bool operator==(const SimilarityGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::vector<GraphNode> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// One node per dataset frame (dataset order). Pairs are considered only
/// within one participant and at most window_frames positions apart.
/// Work is split across `threads` workers; the edge set does not depend
/// on the thread count.
SimilarityGraph build_graph(const ingest::Dataset& dataset, const SimilarityConfig& cfg,
                            unsigned threads = 1);

/// Debug export: a header line {"config": {...}, "nodes": [...]} followed
/// by one {i, j, weight} line per edge.
void write_graph(std::ostream& out, const SimilarityGraph& graph, const SimilarityConfig& cfg);
void write_graph(const std::filesystem::path& path, const SimilarityGraph& graph,
                 const SimilarityConfig& cfg);

struct LoadedGraph {
  SimilarityGraph graph;
  SimilarityConfig config;
};
LoadedGraph read_graph(std::istream& in);
LoadedGraph load_graph(const std::filesystem::path& path);

}  // namespace mvscreen::graph
