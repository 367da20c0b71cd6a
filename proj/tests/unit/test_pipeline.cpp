#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "mvscreen/error.hpp"
#include "mvscreen/pipeline.hpp"
#include "mvscreen/synthetic.hpp"
#include "../support/temp_dir.hpp"

using namespace mvscreen;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

synthetic::SyntheticDataset write_synthetic(const fs::path& dir, synthetic::SyntheticOptions opt = {}) {
  auto data = synthetic::make_synthetic(opt);
  ingest::write_manifest(dir / "manifest.jsonl", data.frames);
  ingest::save_embeddings(dir / "embeddings.emb1", data.embeddings);
  return data;
}

pipeline::PipelineConfig config_for(const testing::TempDir& dir) {
  pipeline::PipelineConfig cfg;
  cfg.manifest = dir / "manifest.jsonl";
  cfg.embeddings = dir / "embeddings.emb1";
  cfg.output_dir = dir / "out";
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MVSCREEN_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config: defaults, file values and relative paths") {
  const pipeline::PipelineConfig defaults;
  CHECK(defaults.selection.k == 3);
  CHECK(defaults.similarity.tau_high == 0.70);
  CHECK(defaults.similarity.tau_low == 0.40);
  CHECK(defaults.similarity.window_frames == 12);
  CHECK(defaults.folds == 4);
  CHECK(defaults.seed == 42);

  testing::TempDir dir;
  write_text(dir / "cfg.json", R"({"manifest": "m.jsonl", "similarity": {"tau_high": 0.8},
      "selection": {"k": 4}, "caption": {"provider": "file", "captions": "caps.jsonl"},
      "eval": {"folds": 5, "seed": 7}})");
  const auto cfg = pipeline::load_config(dir / "cfg.json");
  CHECK(cfg.manifest == dir / "m.jsonl");
  CHECK(cfg.similarity.tau_high == 0.8);
  CHECK(cfg.similarity.tau_low == 0.40);
  CHECK(cfg.selection.k == 4);
  CHECK(cfg.caption.provider == caption::ProviderKind::File);
  CHECK(cfg.caption.captions == dir / "caps.jsonl");
  CHECK(cfg.folds == 5);
  CHECK(cfg.seed == 7);
}

TEST_CASE("config: unknown keys and bad values are rejected") {
  testing::TempDir dir;
  write_text(dir / "a.json", R"({"similarity": {"tau_hi": 0.8}})");
  CHECK_THROWS_AS(pipeline::load_config(dir / "a.json"), Error);
  write_text(dir / "b.json", R"({"caption": {"provider": "magic"}})");
  CHECK_THROWS_AS(pipeline::load_config(dir / "b.json"), Error);
  write_text(dir / "c.json", "{not json");
  CHECK_THROWS_AS(pipeline::load_config(dir / "c.json"), Error);
  CHECK_THROWS_AS(pipeline::load_config(dir / "missing.json"), Error);
}

TEST_CASE("stages run one at a time and recover the planted scenes") {
  testing::TempDir dir;
  synthetic::SyntheticOptions opt;
  opt.scenes_per_type = 4;
  opt.nonscreen_scenes = 2;
  opt.dim = 64;
  opt.participants = 2;
  const auto data = write_synthetic(dir.path(), opt);
  const auto cfg = config_for(dir);

  const auto summary = pipeline::ingest_check(cfg);
  CHECK(summary.frames == data.frames.size());
  CHECK(summary.participants == 2);
  CHECK(summary.dim == 64);

  const auto groups = pipeline::run_select(cfg);
  std::set<std::vector<std::string>> planted, found;
  for (const auto& s : data.scenes) planted.insert(s.frame_ids);
  for (const auto& g : groups) found.insert(g.frame_ids);
  CHECK(found == planted);

  const auto descriptions = pipeline::run_caption(cfg);
  CHECK(descriptions.size() == groups.size());
  const auto verdicts = pipeline::run_identify(cfg);
  CHECK(verdicts.size() == groups.size());
  const auto report = pipeline::run_evaluate(cfg);
  REQUIRE(report.binary.has_value());
  CHECK(report.binary->accuracy() == 1.0);
  CHECK(report.groups == groups.size());
  pipeline::run_report(cfg);

  const pipeline::OutputLayout out{cfg.output_dir};
  for (const auto& p : {out.graph(), out.groups(), out.descriptions(), out.verdicts(), out.folds(),
                        out.fold_report(1), out.fold_report(4), out.aggregate_report(), out.per_type_csv(),
                        out.pca_csv(), out.graph_summary()}) {
    CAPTURE(p.string());
    CHECK(fs::exists(p));
  }
  const auto csv = slurp(out.per_type_csv());
  CHECK(csv.rfind("scope,type,accuracy,count\n", 0) == 0);
  CHECK(csv.find("aggregate,TV,1,4\n") != std::string::npos);
}

TEST_CASE("missing inputs name the path") {
  testing::TempDir dir;
  write_synthetic(dir.path(), {.scenes_per_type = 1, .participants = 1, .dim = 8});
  auto cfg = config_for(dir);
  cfg.embeddings = dir / "absent.emb1";
  try {
    pipeline::ingest_check(cfg);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
    CHECK(std::string(e.what()).find("absent.emb1") != std::string::npos);
  }
}

TEST_CASE("group_label takes the majority") {
  testing::TempDir dir;
  std::vector<ingest::FrameRecord> frames;
  ingest::EmbeddingMatrix emb(2);
  const std::vector<std::optional<ScreenLabel>> labels = {ScreenLabel::TV, ScreenLabel::Computer,
                                                          ScreenLabel::Computer, std::nullopt};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ingest::FrameRecord f;
    f.frame_id = "f" + std::to_string(i);
    f.participant_id = "p";
    f.timestamp = static_cast<std::int64_t>(i);
    f.image_path = f.frame_id + ".jpg";
    f.label = labels[i];
    frames.push_back(f);
    emb.add_row(f.frame_id, std::vector<float>{1.0f, static_cast<float>(i)});
  }
  const auto ds = ingest::validate_dataset(frames, emb);
  CHECK(pipeline::group_label({"p-g001", "p", {"f0", "f1", "f2"}, 0}, ds) == ScreenLabel::Computer);
  CHECK(pipeline::group_label({"p-g001", "p", {"f0", "f1"}, 0}, ds) == ScreenLabel::TV);
  CHECK_FALSE(pipeline::group_label({"p-g001", "p", {"f3"}, 0}, ds).has_value());
}

TEST_CASE("cli exit codes") {
  testing::TempDir dir;
  const std::string d = (dir.path()).string();
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("no-such-command") == 1);
  CHECK(run_cli("synth \"" + d + "\" --scenes-per-type 2 --participants 1 --dim 16") == 0);
  const std::string inputs = "--manifest \"" + d + "/manifest.jsonl\" --embeddings \"" + d +
                             "/embeddings.emb1\" --out \"" + d + "/out\"";
  CHECK(run_cli("ingest-check " + inputs) == 0);
  CHECK(run_cli("ingest-check --manifest \"" + d + "/nope.jsonl\" --embeddings \"" + d + "/embeddings.emb1\"") == 1);
  CHECK(run_cli("run --tau-low 0.9 --tau-high 0.8 " + inputs) == 1);
  CHECK(run_cli("run " + inputs) == 0);

  // Nothing listens on port 9 of the loopback interface in the sandbox.
  CHECK(run_cli("caption --provider remote --endpoint http://127.0.0.1:9 --attempts 2 --backoff-ms 1 " + inputs) ==
        2);
  write_text(dir / "caps.jsonl", "{\"group_id\":\"nobody\",\"text\":\"a tv\"}\n");
  CHECK(run_cli("caption --provider file --captions \"" + d + "/caps.jsonl\" " + inputs) == 2);
}
