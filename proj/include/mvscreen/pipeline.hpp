#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvscreen/caption.hpp"
#include "mvscreen/eval.hpp"
#include "mvscreen/identify.hpp"
#include "mvscreen/ingest.hpp"
#include "mvscreen/similarity.hpp"
#include "mvscreen/view_select.hpp"

namespace mvscreen::pipeline {

inline constexpr char kVersion[] = "0.1.0";

struct CaptionSettings {
  caption::ProviderKind provider = caption::ProviderKind::Mock;
  std::string endpoint;
  std::filesystem::path captions;            // File provider input
  std::optional<std::filesystem::path> cache;  // Remote provider cache
  std::filesystem::path image_root;          // prefixed to image paths sent to Remote
  std::size_t max_in_flight = 4;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{30000};
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path embeddings;
  std::filesystem::path output_dir = "out";
  graph::SimilarityConfig similarity;
  select::SelectionConfig selection;
  CaptionSettings caption;
  std::optional<std::filesystem::path> lexicon;
  std::size_t folds = 4;
  std::uint64_t seed = 42;
  bool bleu_smoothing = false;
  unsigned threads = 1;
};

/// Applies a JSON config document on top of `base`. Relative paths are
/// resolved against `base_dir`. Unknown keys are rejected.
PipelineConfig apply_config(PipelineConfig base, const nlohmann::json& doc,
                            const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Fixed artifact names inside the output directory.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path graph() const { return root / "graph.jsonl"; }
  std::filesystem::path groups() const { return root / "groups.jsonl"; }
  std::filesystem::path descriptions() const { return root / "descriptions.jsonl"; }
  std::filesystem::path verdicts() const { return root / "verdicts.jsonl"; }
  std::filesystem::path folds() const { return root / "folds.json"; }
  std::filesystem::path fold_report(std::size_t fold) const {
    return root / ("report_fold" + std::to_string(fold) + ".json");
  }
  std::filesystem::path aggregate_report() const { return root / "report_aggregate.json"; }
  std::filesystem::path per_type_csv() const { return root / "per_type.csv"; }
  std::filesystem::path pca_csv() const { return root / "pca.csv"; }
  std::filesystem::path graph_summary() const { return root / "graph_summary.json"; }
};

/// Loads and joins manifest and embeddings.
ingest::Dataset load_dataset(const PipelineConfig& cfg);

/// Majority label among member frames; ties go to the label seen first in
/// member order. nullopt when no member is labelled.
std::optional<ScreenLabel> group_label(const select::MultiViewGroup& group,
                                       const ingest::Dataset& dataset);

struct IngestSummary {
  std::size_t frames = 0;
  std::size_t participants = 0;
  std::uint32_t dim = 0;
  std::size_t labelled = 0;
};
IngestSummary ingest_check(const PipelineConfig& cfg);

// Each stage reads its inputs from files and writes its outputs to the
// output directory, so any suffix of the chain can be re-run.
std::vector<select::MultiViewGroup> run_select(const PipelineConfig& cfg);
std::vector<caption::SceneDescription> run_caption(const PipelineConfig& cfg);
std::vector<identify::ScreenVerdict> run_identify(const PipelineConfig& cfg);
eval::EvalReport run_evaluate(const PipelineConfig& cfg);
void run_report(const PipelineConfig& cfg);

/// Full chain; returns the aggregate report.
eval::EvalReport run_all(const PipelineConfig& cfg);

std::unique_ptr<caption::CaptionProvider> make_provider(const CaptionSettings& settings);

}  // namespace mvscreen::pipeline
