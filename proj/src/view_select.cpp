#include "mvscreen/view_select.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "mvscreen/error.hpp"

namespace mvscreen::select {

namespace {

using graph::SimilarityGraph;

bool member_before(const SimilarityGraph& g, std::size_t a, std::size_t b) {
  const auto& na = g.nodes()[a];
  const auto& nb = g.nodes()[b];
  return std::tie(na.timestamp, na.frame_id, a) < std::tie(nb.timestamp, nb.frame_id, b);
}

// Wernicke's ESU: starting from root v, only nodes with index > v are ever
// added, and a node enters the extension set only through the first
// subgraph member it is adjacent to, which makes every connected set reachable
// along exactly one path.
class Esu {
 public:
  Esu(const SimilarityGraph& g, std::size_t k, std::vector<Candidate>& out)
      : g_(g), k_(k), out_(out), in_nbhd_(g.node_count(), 0) {}

  void run_from(std::size_t root) {
    std::vector<std::size_t> ext;
    for (auto u : g_.neighbors(root)) {
      if (u > root) ext.push_back(u);
    }
    sub_.assign(1, root);
    mark(root, +1);
    extend(ext, root);
    mark(root, -1);
  }

 private:
  // in_nbhd_ counts how many current subgraph members have the node in
  // their closed neighbourhood.
  void mark(std::size_t v, int delta) {
    in_nbhd_[v] += delta;
    for (auto u : g_.neighbors(v)) in_nbhd_[u] += delta;
  }

  void extend(std::vector<std::size_t> ext, std::size_t root) {
    if (sub_.size() == k_) {
      emit();
      return;
    }
    while (!ext.empty()) {
      const std::size_t w = ext.back();
      ext.pop_back();
      std::vector<std::size_t> next = ext;
      for (auto u : g_.neighbors(w)) {
        if (u > root && in_nbhd_[u] == 0) next.push_back(u);
      }
      sub_.push_back(w);
      mark(w, +1);
      extend(std::move(next), root);
      mark(w, -1);
      sub_.pop_back();
    }
  }

  void emit() {
    Candidate c;
    c.members = sub_;
    std::sort(c.members.begin(), c.members.end(),
              [&](std::size_t a, std::size_t b) { return member_before(g_, a, b); });
    for (auto m : c.members) c.degree_sum += g_.degree(m);
    out_.push_back(std::move(c));
  }

  const SimilarityGraph& g_;
  std::size_t k_;
  std::vector<Candidate>& out_;
  std::vector<std::size_t> sub_;
  std::vector<int> in_nbhd_;
};

}  // namespace

void SelectionConfig::validate() const {
  if (k < 2) throw Error(Errc::InvalidConfig, "group size k must be at least 2");
}

bool candidate_less(const SimilarityGraph& graph, const Candidate& a, const Candidate& b) {
  if (a.degree_sum != b.degree_sum) return a.degree_sum < b.degree_sum;
  const auto& nodes = graph.nodes();
  const auto ts_a = nodes[a.members.front()].timestamp;
  const auto ts_b = nodes[b.members.front()].timestamp;
  if (ts_a != ts_b) return ts_a < ts_b;
  const auto ids_less = std::lexicographical_compare(
      a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
      [&](std::size_t x, std::size_t y) { return nodes[x].frame_id < nodes[y].frame_id; });
  if (ids_less) return true;
  const auto ids_greater = std::lexicographical_compare(
      b.members.begin(), b.members.end(), a.members.begin(), a.members.end(),
      [&](std::size_t x, std::size_t y) { return nodes[x].frame_id < nodes[y].frame_id; });
  if (ids_greater) return false;
  // Only reachable with duplicate frame ids; keeps the order total.
  return a.members < b.members;
}

std::vector<Candidate> enumerate_k_subgraphs(const SimilarityGraph& graph, std::size_t k,
                                             unsigned threads) {
  SelectionConfig{k}.validate();
  const std::size_t n = graph.node_count();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::vector<std::vector<Candidate>> partial(workers);

  auto work = [&](std::size_t w) {
    Esu esu(graph, k, partial[w]);
    for (std::size_t root = w; root < n; root += workers) esu.run_from(root);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  std::vector<Candidate> all;
  for (auto& part : partial) {
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  std::sort(all.begin(), all.end(),
            [&](const Candidate& a, const Candidate& b) { return candidate_less(graph, a, b); });
  return all;
}

std::string make_group_id(const std::string& participant_id, std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu", ordinal);
  return participant_id + "-g" + buf;
}

std::vector<MultiViewGroup> select_views(const SimilarityGraph& graph, const SelectionConfig& cfg,
                                         unsigned threads) {
  cfg.validate();
  const auto candidates = enumerate_k_subgraphs(graph, cfg.k, threads);
  std::vector<bool> taken(graph.node_count(), false);
  std::map<std::string, std::size_t> ordinals;
  std::vector<MultiViewGroup> groups;

  for (const auto& c : candidates) {
    if (std::any_of(c.members.begin(), c.members.end(), [&](std::size_t m) { return taken[m]; })) {
      continue;
    }
    MultiViewGroup group;
    group.participant_id = graph.nodes()[c.members.front()].participant_id;
    group.group_id = make_group_id(group.participant_id, ++ordinals[group.participant_id]);
    group.degree_sum = c.degree_sum;
    for (auto m : c.members) {
      taken[m] = true;
      group.frame_ids.push_back(graph.nodes()[m].frame_id);
    }
    groups.push_back(std::move(group));
  }
  check_disjoint(groups);
  return groups;
}

void check_disjoint(std::span<const MultiViewGroup> groups) {
  std::set<std::string> seen;
  for (const auto& g : groups) {
    for (const auto& id : g.frame_ids) {
      if (!seen.insert(id).second) {
        throw Error(Errc::InvalidConfig, "frame " + id + " appears in more than one group");
      }
    }
  }
}

void write_groups(std::ostream& out, std::span<const MultiViewGroup> groups) {
  for (const auto& g : groups) {
    nlohmann::ordered_json obj;
    obj["group_id"] = g.group_id;
    obj["frame_ids"] = g.frame_ids;
    obj["degree_sum"] = g.degree_sum;
    out << obj.dump() << '\n';
  }
}

void write_groups(const std::filesystem::path& path, std::span<const MultiViewGroup> groups) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write groups " + path.string());
  write_groups(out, groups);
}

std::vector<MultiViewGroup> read_groups(std::istream& in) {
  std::vector<MultiViewGroup> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      MultiViewGroup g;
      g.group_id = obj.at("group_id").get<std::string>();
      g.frame_ids = obj.at("frame_ids").get<std::vector<std::string>>();
      g.degree_sum = obj.at("degree_sum").get<std::size_t>();
      const auto pos = g.group_id.rfind("-g");
      if (pos == std::string::npos || pos == 0) {
        throw Error(Errc::MalformedRecord, "group id " + g.group_id + " lacks a participant prefix");
      }
      g.participant_id = g.group_id.substr(0, pos);
      groups.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedRecord, "groups line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  check_disjoint(groups);
  return groups;
}

std::vector<MultiViewGroup> load_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open groups " + path.string());
  return read_groups(in);
}

}  // namespace mvscreen::select
