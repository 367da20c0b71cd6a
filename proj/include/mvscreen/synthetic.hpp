#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mvscreen/ingest.hpp"
#include "mvscreen/types.hpp"

namespace mvscreen::synthetic {

/// Generator for labelled test datasets with known multi-view scenes.
///
/// Every scene is `frames_per_scene` consecutive frames whose embeddings
/// share a scene direction: v = sqrt(c) * scene + sqrt(1 - c) * noise with
/// independent random unit vectors, so in-scene cosines concentrate around
/// `scene_cosine` and everything else concentrates around zero. Filler
/// frames (random directions, NonScreen) separate scenes.
struct SyntheticOptions {
  std::size_t scenes_per_type = 20;   // per screen type
  std::size_t nonscreen_scenes = 0;   // additional planted NonScreen scenes
  std::size_t participants = 3;
  std::size_t frames_per_scene = 3;
  std::size_t fillers_between = 2;
  std::uint32_t dim = 512;
  double scene_cosine = 0.55;
  std::uint64_t seed = 7;
  std::int64_t start_timestamp = 1700000000;
};

struct PlantedScene {
  std::vector<std::string> frame_ids;
  ScreenLabel label = ScreenLabel::NonScreen;
};

struct SyntheticDataset {
  std::vector<ingest::FrameRecord> frames;  // manifest order
  ingest::EmbeddingMatrix embeddings;
  std::vector<PlantedScene> scenes;
};

SyntheticDataset make_synthetic(const SyntheticOptions& options);

}  // namespace mvscreen::synthetic
