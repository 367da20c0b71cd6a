#include "mvscreen/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "mvscreen/error.hpp"
#include "mvscreen/text.hpp"

namespace mvscreen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

fs::path resolve(const fs::path& base_dir, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base_dir / p;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw Error(Errc::InvalidConfig, "unknown key \"" + key + "\" in " + where);
  }
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw Error(Errc::IoError, std::string(what) + " not found: " + path.string());
  }
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(Errc::IoError, "cannot create output directory " + dir.string());
  }
}

void write_json(const fs::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

ordered_json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

identify::KeywordLexicon lexicon_for(const PipelineConfig& cfg) {
  return cfg.lexicon ? identify::KeywordLexicon::load(*cfg.lexicon)
                     : identify::KeywordLexicon::defaults();
}

}  // namespace

PipelineConfig apply_config(PipelineConfig cfg, const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  try {
    reject_unknown(doc, {"manifest", "embeddings", "output_dir", "similarity", "selection", "caption",
                         "lexicon", "eval", "threads"},
                   "config");
    if (doc.contains("manifest")) cfg.manifest = resolve(base_dir, doc["manifest"].get<std::string>());
    if (doc.contains("embeddings")) {
      cfg.embeddings = resolve(base_dir, doc["embeddings"].get<std::string>());
    }
    if (doc.contains("output_dir")) {
      cfg.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
    }
    if (doc.contains("lexicon")) cfg.lexicon = resolve(base_dir, doc["lexicon"].get<std::string>());
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<unsigned>();
    if (auto it = doc.find("similarity"); it != doc.end()) {
      reject_unknown(*it, {"tau_low", "tau_high", "window_frames"}, "similarity");
      cfg.similarity.tau_low = it->value("tau_low", cfg.similarity.tau_low);
      cfg.similarity.tau_high = it->value("tau_high", cfg.similarity.tau_high);
      cfg.similarity.window_frames = it->value("window_frames", cfg.similarity.window_frames);
    }
    if (auto it = doc.find("selection"); it != doc.end()) {
      reject_unknown(*it, {"k"}, "selection");
      cfg.selection.k = it->value("k", cfg.selection.k);
    }
    if (auto it = doc.find("caption"); it != doc.end()) {
      reject_unknown(*it, {"provider", "endpoint", "captions", "cache", "image_root", "max_in_flight",
                           "attempts", "initial_backoff_ms", "timeout_ms"},
                     "caption");
      auto& c = cfg.caption;
      if (it->contains("provider")) {
        const auto name = (*it)["provider"].get<std::string>();
        if (name == "mock") c.provider = caption::ProviderKind::Mock;
        else if (name == "file") c.provider = caption::ProviderKind::File;
        else if (name == "remote") c.provider = caption::ProviderKind::Remote;
        else throw Error(Errc::InvalidConfig, "unknown provider \"" + name + "\"");
      }
      c.endpoint = it->value("endpoint", c.endpoint);
      if (it->contains("captions")) c.captions = resolve(base_dir, (*it)["captions"].get<std::string>());
      if (it->contains("cache")) c.cache = resolve(base_dir, (*it)["cache"].get<std::string>());
      if (it->contains("image_root")) {
        c.image_root = resolve(base_dir, (*it)["image_root"].get<std::string>());
      }
      c.max_in_flight = it->value("max_in_flight", c.max_in_flight);
      c.attempts = it->value("attempts", c.attempts);
      c.initial_backoff = std::chrono::milliseconds(
          it->value("initial_backoff_ms", static_cast<std::int64_t>(c.initial_backoff.count())));
      c.timeout = std::chrono::milliseconds(
          it->value("timeout_ms", static_cast<std::int64_t>(c.timeout.count())));
    }
    if (auto it = doc.find("eval"); it != doc.end()) {
      reject_unknown(*it, {"folds", "seed", "bleu_smoothing"}, "eval");
      cfg.folds = it->value("folds", cfg.folds);
      cfg.seed = it->value("seed", cfg.seed);
      cfg.bleu_smoothing = it->value("bleu_smoothing", cfg.bleu_smoothing);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  require_file(path, "config file");
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
  return apply_config(std::move(base), doc, path.parent_path());
}

ingest::Dataset load_dataset(const PipelineConfig& cfg) {
  require_file(cfg.manifest, "manifest");
  require_file(cfg.embeddings, "embeddings file");
  auto frames = ingest::parse_manifest(cfg.manifest);
  auto embeddings = ingest::load_embeddings(cfg.embeddings);
  return ingest::validate_dataset(std::move(frames), embeddings);
}

std::optional<ScreenLabel> group_label(const select::MultiViewGroup& group,
                                       const ingest::Dataset& dataset) {
  std::vector<std::pair<ScreenLabel, std::size_t>> counts;  // first-seen order
  for (const auto& id : group.frame_ids) {
    const auto& label = dataset.frame(id).label;
    if (!label) continue;
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == *label; });
    if (it == counts.end()) counts.emplace_back(*label, 1);
    else ++it->second;
  }
  if (counts.empty()) return std::nullopt;
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

IngestSummary ingest_check(const PipelineConfig& cfg) {
  const auto ds = load_dataset(cfg);
  IngestSummary s;
  s.frames = ds.size();
  s.dim = ds.embeddings().dim();
  std::set<std::string> participants;
  for (const auto& f : ds.frames()) {
    participants.insert(f.participant_id);
    if (f.label) ++s.labelled;
  }
  s.participants = participants.size();
  return s;
}

std::vector<select::MultiViewGroup> run_select(const PipelineConfig& cfg) {
  cfg.similarity.validate();
  cfg.selection.validate();
  const auto ds = load_dataset(cfg);
  const OutputLayout out{cfg.output_dir};
  ensure_output_dir(out.root);
  const auto g = graph::build_graph(ds, cfg.similarity, cfg.threads);
  auto groups = select::select_views(g, cfg.selection, cfg.threads);
  graph::write_graph(out.graph(), g, cfg.similarity);
  select::write_groups(out.groups(), groups);
  return groups;
}

std::unique_ptr<caption::CaptionProvider> make_provider(const CaptionSettings& s) {
  switch (s.provider) {
    case caption::ProviderKind::Mock: return std::make_unique<caption::MockProvider>();
    case caption::ProviderKind::File:
      require_file(s.captions, "captions file");
      return std::make_unique<caption::FileProvider>(s.captions);
    case caption::ProviderKind::Remote:
      return std::make_unique<caption::RemoteProvider>(
          caption::RemoteOptions{s.endpoint, s.attempts, s.initial_backoff, s.timeout, s.cache});
  }
  throw Error(Errc::InvalidConfig, "unknown provider");
}

std::vector<caption::SceneDescription> run_caption(const PipelineConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const OutputLayout out{cfg.output_dir};
  const auto groups = select::load_groups(out.groups());
  auto provider = make_provider(cfg.caption);

  std::vector<caption::CaptionRequest> requests;
  requests.reserve(groups.size());
  for (const auto& g : groups) {
    caption::CaptionRequest req{g, {}, group_label(g, ds)};
    for (const auto& id : g.frame_ids) {
      const auto& path = ds.frame(id).image_path;
      req.images.push_back(cfg.caption.image_root.empty() ? path
                                                          : (cfg.caption.image_root / path).string());
    }
    requests.push_back(std::move(req));
  }
  auto descriptions = caption::caption_groups(requests, *provider, cfg.caption.max_in_flight);
  if (auto* remote = dynamic_cast<caption::RemoteProvider*>(provider.get())) remote->flush_cache();
  caption::write_descriptions(out.descriptions(), descriptions);
  return descriptions;
}

std::vector<identify::ScreenVerdict> run_identify(const PipelineConfig& cfg) {
  const OutputLayout out{cfg.output_dir};
  const auto descriptions = caption::load_descriptions(out.descriptions());
  auto verdicts = identify::identify_all(descriptions, lexicon_for(cfg));
  identify::write_verdicts(out.verdicts(), verdicts);
  return verdicts;
}

eval::EvalReport run_evaluate(const PipelineConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const OutputLayout out{cfg.output_dir};
  const auto groups = select::load_groups(out.groups());
  const auto descriptions = caption::load_descriptions(out.descriptions());
  const auto verdicts = identify::load_verdicts(out.verdicts());

  std::map<std::string, const caption::SceneDescription*> by_desc;
  for (const auto& d : descriptions) by_desc[d.group_id] = &d;
  std::map<std::string, const identify::ScreenVerdict*> by_verdict;
  for (const auto& v : verdicts) by_verdict[v.group_id] = &v;

  std::map<std::string, eval::EvalSample> samples;
  std::map<std::string, ScreenLabel> labels;
  for (const auto& g : groups) {
    auto v = by_verdict.find(g.group_id);
    if (v == by_verdict.end()) throw Error(Errc::MalformedRecord, "no verdict for group " + g.group_id);
    eval::EvalSample s;
    s.group_id = g.group_id;
    s.predicted_primary = v->second->primary_type;
    s.predicted_binary = v->second->binary;
    s.actual = group_label(g, ds);
    if (s.actual) labels[g.group_id] = *s.actual;
    if (auto d = by_desc.find(g.group_id); d != by_desc.end()) s.candidate = d->second->text;
    for (const auto& id : g.frame_ids) {
      const auto& annotation = ds.frame(id).annotation;
      if (annotation && !text::tokenize(*annotation).empty()) s.references.push_back(*annotation);
    }
    samples.emplace(g.group_id, std::move(s));
  }

  const eval::BleuOptions bleu{cfg.bleu_smoothing};
  ordered_json folds_doc;
  folds_doc["n_folds"] = cfg.folds;
  folds_doc["seed"] = cfg.seed;
  folds_doc["folds"] = ordered_json::array();
  if (groups.size() >= cfg.folds) {
    const auto folds = eval::make_folds(groups, cfg.folds, cfg.seed, labels);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      folds_doc["folds"].push_back(folds[f]);
      std::vector<eval::EvalSample> fold_samples;
      for (const auto& id : folds[f]) fold_samples.push_back(samples.at(id));
      write_json(out.fold_report(f + 1), eval::to_json(eval::evaluate(fold_samples, f + 1, bleu)));
    }
  }
  write_json(out.folds(), folds_doc);

  std::vector<eval::EvalSample> all;
  for (const auto& g : groups) all.push_back(samples.at(g.group_id));
  auto aggregate = eval::evaluate(all, std::nullopt, bleu);
  write_json(out.aggregate_report(), eval::to_json(aggregate));
  return aggregate;
}

void run_report(const PipelineConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const OutputLayout out{cfg.output_dir};
  const auto loaded = graph::load_graph(out.graph());
  const auto groups = select::load_groups(out.groups());
  const auto verdicts = identify::load_verdicts(out.verdicts());
  std::map<std::string, const identify::ScreenVerdict*> by_verdict;
  for (const auto& v : verdicts) by_verdict[v.group_id] = &v;

  // Per-type table from the stored reports.
  {
    std::ofstream csv(out.per_type_csv(), std::ios::binary);
    if (!csv) throw Error(Errc::IoError, "cannot write " + out.per_type_csv().string());
    csv << "scope,type,accuracy,count\n";
    auto emit = [&](const std::string& scope, const ordered_json& report) {
      for (const auto& [type, entry] : report.at("per_type_accuracy").items()) {
        csv << scope << ',' << type << ',' << format_double(entry.at("accuracy").get<double>()) << ','
            << entry.at("count").get<std::size_t>() << '\n';
      }
    };
    const auto folds = read_json(out.folds());
    for (std::size_t f = 1; f <= folds.at("folds").size(); ++f) {
      emit("fold" + std::to_string(f), read_json(out.fold_report(f)));
    }
    emit("aggregate", read_json(out.aggregate_report()));
  }

  // Group-mean embeddings projected to two dimensions.
  {
    std::vector<std::vector<double>> means;
    for (const auto& g : groups) {
      std::vector<double> mean(ds.embeddings().dim(), 0.0);
      for (const auto& id : g.frame_ids) {
        const auto row = ds.embeddings().row(*ds.index_of(id));
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
      }
      for (auto& x : mean) x /= static_cast<double>(g.frame_ids.size());
      means.push_back(std::move(mean));
    }
    const auto projected = eval::pca_2d(means);
    std::ofstream csv(out.pca_csv(), std::ios::binary);
    if (!csv) throw Error(Errc::IoError, "cannot write " + out.pca_csv().string());
    csv << "group_id,participant_id,predicted,actual,pc1,pc2\n";
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto& g = groups[i];
      auto v = by_verdict.find(g.group_id);
      const auto actual = group_label(g, ds);
      csv << g.group_id << ',' << g.participant_id << ','
          << (v == by_verdict.end() ? "" : to_string(v->second->primary_type)) << ','
          << (actual ? to_string(*actual) : "") << ',' << format_double(projected[i][0]) << ','
          << format_double(projected[i][1]) << '\n';
    }
  }

  // Graph statistics.
  {
    const auto& g = loaded.graph;
    ordered_json summary;
    summary["config"] = {{"tau_low", loaded.config.tau_low},
                         {"tau_high", loaded.config.tau_high},
                         {"window_frames", loaded.config.window_frames}};
    summary["nodes"] = g.node_count();
    summary["edges"] = g.edges().size();
    std::size_t isolated = 0;
    std::size_t max_degree = 0;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (g.degree(n) == 0) ++isolated;
      max_degree = std::max(max_degree, g.degree(n));
    }
    summary["isolated_nodes"] = isolated;
    summary["max_degree"] = max_degree;
    if (!g.edges().empty()) {
      double sum = 0.0;
      double lo = g.edges().front().weight;
      double hi = lo;
      for (const auto& e : g.edges()) {
        sum += e.weight;
        lo = std::min(lo, e.weight);
        hi = std::max(hi, e.weight);
      }
      summary["weight"] = {{"min", lo}, {"mean", sum / static_cast<double>(g.edges().size())}, {"max", hi}};
    } else {
      summary["weight"] = nullptr;
    }
    std::size_t covered = 0;
    for (const auto& grp : groups) covered += grp.frame_ids.size();
    summary["groups"] = groups.size();
    summary["frames_in_groups"] = covered;
    write_json(out.graph_summary(), summary);
  }
}

eval::EvalReport run_all(const PipelineConfig& cfg) {
  run_select(cfg);
  run_caption(cfg);
  run_identify(cfg);
  auto report = run_evaluate(cfg);
  run_report(cfg);
  return report;
}

}  // namespace mvscreen::pipeline
