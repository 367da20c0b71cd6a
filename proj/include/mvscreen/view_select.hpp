#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvscreen/similarity.hpp"

namespace mvscreen::select {

struct SelectionConfig {
  std::size_t k = 3;

  /// Throws InvalidConfig when k < 2.
  void validate() const;
};

/// A connected induced k-node subgraph. Members are node indices ordered by
/// (timestamp, frame_id); degree_sum uses degrees in the full pruned graph.
struct Candidate {
  std::vector<std::size_t> members;
  std::size_t degree_sum = 0;

  bool operator==(const Candidate&) const = default;
};

struct MultiViewGroup {
  std::string group_id;
  std::string participant_id;
  std::vector<std::string> frame_ids;  // ascending timestamp
  std::size_t degree_sum = 0;

  bool operator==(const MultiViewGroup&) const = default;
};

/// Strict weak ordering used for the greedy pass: degree_sum ascending,
/// then earliest member timestamp, then member frame ids lexicographically.
bool candidate_less(const graph::SimilarityGraph& graph, const Candidate& a, const Candidate& b);

/// Every connected induced subgraph with exactly k nodes, each exactly once,
/// sorted by candidate_less. Uses the ESU extension scheme, so no subset is
/// generated twice and disconnected subsets are never visited.
std::vector<Candidate> enumerate_k_subgraphs(const graph::SimilarityGraph& graph, std::size_t k,
                                             unsigned threads = 1);

/// Greedy disjoint selection over the sorted candidates: a candidate is
/// taken iff none of its nodes has been taken yet. Groups come back in
/// selection order; group ids are numbered per participant from 1.
std::vector<MultiViewGroup> select_views(const graph::SimilarityGraph& graph,
                                         const SelectionConfig& cfg, unsigned threads = 1);

/// "<participant>-g<ordinal>", ordinal zero-padded to three digits.
std::string make_group_id(const std::string& participant_id, std::size_t ordinal);

/// Throws InvalidConfig if any frame id occurs in two groups.
void check_disjoint(std::span<const MultiViewGroup> groups);

/// JSON Lines of {group_id, frame_ids, degree_sum}.
void write_groups(std::ostream& out, std::span<const MultiViewGroup> groups);
void write_groups(const std::filesystem::path& path, std::span<const MultiViewGroup> groups);
std::vector<MultiViewGroup> read_groups(std::istream& in);
std::vector<MultiViewGroup> load_groups(const std::filesystem::path& path);

}  // namespace mvscreen::select
