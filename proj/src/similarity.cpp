#include "mvscreen/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "mvscreen/error.hpp"

namespace mvscreen::graph {

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " components");
  }
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    norm_a += x * x;
    norm_b += y * y;
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw Error(Errc::ZeroVector, "cosine similarity of a zero vector is undefined");
  }
  const double sim = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
  return std::clamp(sim, -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

void SimilarityConfig::validate() const {
  if (!(tau_high > 0.0 && tau_high <= 1.0)) {
    throw Error(Errc::InvalidConfig, "tau_high must lie in (0, 1]");
  }
  if (!(tau_low >= 0.0 && tau_low < 1.0)) {
    throw Error(Errc::InvalidConfig, "tau_low must lie in [0, 1)");
  }
  if (!(tau_low < tau_high)) {
    throw Error(Errc::InvalidConfig, "tau_low must be below tau_high");
  }
  if (window_frames == 0) {
    throw Error(Errc::InvalidConfig, "window_frames must be positive");
  }
}

SimilarityGraph::SimilarityGraph(std::vector<GraphNode> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), adjacency_(nodes_.size()) {
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i == e.j || e.j >= nodes_.size()) {
      throw Error(Errc::InvalidConfig, "edge (" + std::to_string(e.i) + ", " +
                                           std::to_string(e.j) + ") is not a valid node pair");
    }
    if (nodes_[e.i].participant_id != nodes_[e.j].participant_id) {
      throw Error(Errc::InvalidConfig, "edge crosses participants: " + nodes_[e.i].frame_id +
                                           " / " + nodes_[e.j].frame_id);
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (e > 0 && edges_[e].i == edges_[e - 1].i && edges_[e].j == edges_[e - 1].j) {
      throw Error(Errc::InvalidConfig, "duplicate edge (" + std::to_string(edges_[e].i) + ", " +
                                           std::to_string(edges_[e].j) + ")");
    }
    adjacency_[edges_[e].i].push_back(edges_[e].j);
    adjacency_[edges_[e].j].push_back(edges_[e].i);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

bool SimilarityGraph::has_edge(std::size_t a, std::size_t b) const {
  const auto& adj = adjacency_.at(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

SimilarityGraph build_graph(const ingest::Dataset& dataset, const SimilarityConfig& cfg,
                            unsigned threads) {
  cfg.validate();
  const auto& frames = dataset.frames();
  const auto& emb = dataset.embeddings();
  const std::size_t n = frames.size();

  std::vector<GraphNode> nodes;
  nodes.reserve(n);
  for (const auto& f : frames) nodes.push_back({f.frame_id, f.participant_id, f.timestamp});

  auto scan = [&](std::size_t begin, std::size_t end, std::vector<Edge>& out) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t last = std::min(n - 1, i + cfg.window_frames);
      for (std::size_t j = i + 1; j <= last; ++j) {
        if (frames[j].participant_id != frames[i].participant_id) break;
        const double sim = cosine_similarity(emb.row(i), emb.row(j));
        if (sim >= cfg.tau_low && sim <= cfg.tau_high) out.push_back({i, j, sim});
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::vector<std::vector<Edge>> partial(workers);
  if (workers == 1) {
    scan(0, n, partial[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n, w * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back(scan, begin, end, std::ref(partial[w]));
    }
    for (auto& t : pool) t.join();
  }

  std::vector<Edge> edges;
  for (auto& part : partial) edges.insert(edges.end(), part.begin(), part.end());
  return SimilarityGraph(std::move(nodes), std::move(edges));
}

void write_graph(std::ostream& out, const SimilarityGraph& graph, const SimilarityConfig& cfg) {
  nlohmann::ordered_json header;
  header["config"] = {{"tau_low", cfg.tau_low},
                      {"tau_high", cfg.tau_high},
                      {"window_frames", cfg.window_frames}};
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& node : graph.nodes()) {
    nodes.push_back({{"frame_id", node.frame_id},
                     {"participant_id", node.participant_id},
                     {"timestamp", node.timestamp}});
  }
  header["nodes"] = std::move(nodes);
  out << header.dump() << '\n';
  for (const auto& e : graph.edges()) {
    nlohmann::ordered_json line;
    line["i"] = e.i;
    line["j"] = e.j;
    line["weight"] = e.weight;
    out << line.dump() << '\n';
  }
}

void write_graph(const std::filesystem::path& path, const SimilarityGraph& graph,
                 const SimilarityConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write graph " + path.string());
  write_graph(out, graph, cfg);
}

LoadedGraph read_graph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Errc::MalformedRecord, "graph file is empty");
  }
  LoadedGraph loaded;
  std::vector<GraphNode> nodes;
  std::vector<Edge> edges;
  std::size_t line_no = 1;
  try {
    const auto header = nlohmann::json::parse(line);
    const auto& c = header.at("config");
    loaded.config.tau_low = c.at("tau_low").get<double>();
    loaded.config.tau_high = c.at("tau_high").get<double>();
    loaded.config.window_frames = c.at("window_frames").get<std::size_t>();
    for (const auto& node : header.at("nodes")) {
      nodes.push_back({node.at("frame_id").get<std::string>(),
                       node.at("participant_id").get<std::string>(),
                       node.at("timestamp").get<std::int64_t>()});
    }
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto obj = nlohmann::json::parse(line);
      edges.push_back({obj.at("i").get<std::size_t>(), obj.at("j").get<std::size_t>(),
                       obj.at("weight").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRecord, "graph line " + std::to_string(line_no) + ": " + e.what());
  }
  loaded.config.validate();
  loaded.graph = SimilarityGraph(std::move(nodes), std::move(edges));
  return loaded;
}

LoadedGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open graph " + path.string());
  return read_graph(in);
}

}  // namespace mvscreen::graph
