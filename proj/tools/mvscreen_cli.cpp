// Command-line front end for the screen-exposure pipeline.
//
// Exit status: 0 success, 1 validation or I/O error, 2 caption provider
// failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvscreen/error.hpp"
#include "mvscreen/pipeline.hpp"
#include "mvscreen/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mvscreen;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitProvider = 2;

// Flag values; only flags the user actually passed override the config file.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> manifest;
  std::optional<std::string> embeddings;
  std::optional<std::string> out;
  std::optional<double> tau_low;
  std::optional<double> tau_high;
  std::optional<std::size_t> window;
  std::optional<std::size_t> k;
  std::optional<std::string> provider;
  std::optional<std::string> endpoint;
  std::optional<std::string> captions;
  std::optional<std::string> cache;
  std::optional<std::string> image_root;
  std::optional<std::size_t> max_in_flight;
  std::optional<int> attempts;
  std::optional<long> backoff_ms;
  std::optional<std::string> lexicon;
  std::optional<std::size_t> folds;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool bleu_smoothing = false;
};

void add_pipeline_options(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.config, "JSON config file (flags override it)");
  app.add_option("--manifest", o.manifest, "Frame manifest (JSON Lines)");
  app.add_option("--embeddings", o.embeddings, "EMB1 embedding file");
  app.add_option("-o,--out", o.out, "Output directory");
  app.add_option("--tau-low", o.tau_low, "Lower similarity bound (default 0.40)");
  app.add_option("--tau-high", o.tau_high, "Upper similarity bound (default 0.70)");
  app.add_option("--window", o.window, "Window in frame positions (default 12)");
  app.add_option("-k,--group-size", o.k, "Frames per multi-view group (default 3)");
  app.add_option("--provider", o.provider, "Caption provider")
      ->check(CLI::IsMember({"mock", "file", "remote"}));
  app.add_option("--endpoint", o.endpoint, "Remote captioning service base URL");
  app.add_option("--captions", o.captions, "Captions file for the file provider");
  app.add_option("--cache", o.cache, "Cache file for remote captions");
  app.add_option("--image-root", o.image_root, "Prefix for image paths sent to the remote service");
  app.add_option("--max-in-flight", o.max_in_flight, "Concurrent caption requests (default 4)");
  app.add_option("--attempts", o.attempts, "Remote attempts per group (default 3)");
  app.add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff (default 500)");
  app.add_option("--lexicon", o.lexicon, "Keyword lexicon JSON {phrase: type}");
  app.add_option("--folds", o.folds, "Cross-validation folds (default 4)");
  app.add_option("--seed", o.seed, "Fold shuffling seed (default 42)");
  app.add_option("--threads", o.threads, "Worker threads for graph and enumeration");
  app.add_flag("--bleu-smoothing", o.bleu_smoothing, "Add-one smoothing for BLEU orders 2-4");
}

pipeline::PipelineConfig resolve_config(const Overrides& o) {
  pipeline::PipelineConfig cfg;
  if (o.config) cfg = pipeline::load_config(*o.config, cfg);
  if (o.manifest) cfg.manifest = *o.manifest;
  if (o.embeddings) cfg.embeddings = *o.embeddings;
  if (o.out) cfg.output_dir = *o.out;
  if (o.tau_low) cfg.similarity.tau_low = *o.tau_low;
  if (o.tau_high) cfg.similarity.tau_high = *o.tau_high;
  if (o.window) cfg.similarity.window_frames = *o.window;
  if (o.k) cfg.selection.k = *o.k;
  if (o.provider) {
    cfg.caption.provider = *o.provider == "file"     ? caption::ProviderKind::File
                           : *o.provider == "remote" ? caption::ProviderKind::Remote
                                                     : caption::ProviderKind::Mock;
  }
  if (o.endpoint) cfg.caption.endpoint = *o.endpoint;
  if (o.captions) cfg.caption.captions = *o.captions;
  if (o.cache) cfg.caption.cache = fs::path(*o.cache);
  if (o.image_root) cfg.caption.image_root = *o.image_root;
  if (o.max_in_flight) cfg.caption.max_in_flight = *o.max_in_flight;
  if (o.attempts) cfg.caption.attempts = *o.attempts;
  if (o.backoff_ms) cfg.caption.initial_backoff = std::chrono::milliseconds(*o.backoff_ms);
  if (o.lexicon) cfg.lexicon = fs::path(*o.lexicon);
  if (o.folds) cfg.folds = *o.folds;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.bleu_smoothing) cfg.bleu_smoothing = true;
  return cfg;
}

void print_report(const eval::EvalReport& report) {
  std::cout << eval::to_json(report).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view screen exposure pipeline"};
  app.set_version_flag("--version", std::string("mvscreen ") + pipeline::kVersion +
                                        " (embeddings " + ingest::kEmbeddingMagic + ", " +
                                        ingest::kManifestVersion + ")");
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  add_pipeline_options(app, o);

  auto* ingest_check = app.add_subcommand("ingest-check", "Validate manifest and embeddings");
  auto* select_views = app.add_subcommand("select-views", "Build the similarity graph and select groups");
  auto* caption_cmd = app.add_subcommand("caption", "Describe each selected group");
  auto* identify_cmd = app.add_subcommand("identify", "Map descriptions to screen types");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score verdicts per fold and overall");
  auto* report_cmd = app.add_subcommand("report", "Write CSV tables, PCA projection and graph stats");
  auto* run_cmd = app.add_subcommand("run", "Run the full chain");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labelled dataset");
  synthetic::SyntheticOptions synth;
  std::string synth_dir = "synthetic";
  synth_cmd->add_option("dir", synth_dir, "Destination directory")->required();
  synth_cmd->add_option("--scenes-per-type", synth.scenes_per_type);
  synth_cmd->add_option("--nonscreen-scenes", synth.nonscreen_scenes);
  synth_cmd->add_option("--participants", synth.participants);
  synth_cmd->add_option("--dim", synth.dim);
  synth_cmd->add_option("--synth-seed", synth.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (synth_cmd->parsed()) {
      const auto data = synthetic::make_synthetic(synth);
      const fs::path dir(synth_dir);
      fs::create_directories(dir);
      ingest::write_manifest(dir / "manifest.jsonl", data.frames);
      ingest::save_embeddings(dir / "embeddings.emb1", data.embeddings);
      std::ofstream planted(dir / "planted.jsonl", std::ios::binary);
      for (const auto& s : data.scenes) {
        nlohmann::ordered_json line;
        line["frame_ids"] = s.frame_ids;
        line["label"] = std::string(to_string(s.label));
        planted << line.dump() << '\n';
      }
      std::cout << "wrote " << data.frames.size() << " frames and " << data.scenes.size()
                << " planted scenes to " << dir.string() << '\n';
      return kExitOk;
    }

    const auto cfg = resolve_config(o);
    if (ingest_check->parsed()) {
      const auto s = pipeline::ingest_check(cfg);
      std::cout << "ok: " << s.frames << " frames, " << s.participants << " participant(s), dim "
                << s.dim << ", " << s.labelled << " labelled\n";
    } else if (select_views->parsed()) {
      const auto groups = pipeline::run_select(cfg);
      std::cout << groups.size() << " group(s) written to "
                << pipeline::OutputLayout{cfg.output_dir}.groups().string() << '\n';
    } else if (caption_cmd->parsed()) {
      const auto d = pipeline::run_caption(cfg);
      std::cout << d.size() << " description(s) written\n";
    } else if (identify_cmd->parsed()) {
      const auto v = pipeline::run_identify(cfg);
      std::cout << v.size() << " verdict(s) written\n";
    } else if (evaluate_cmd->parsed()) {
      print_report(pipeline::run_evaluate(cfg));
    } else if (report_cmd->parsed()) {
      pipeline::run_report(cfg);
      std::cout << "report written to " << cfg.output_dir.string() << '\n';
    } else if (run_cmd->parsed()) {
      print_report(pipeline::run_all(cfg));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_provider_failure() ? kExitProvider : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
