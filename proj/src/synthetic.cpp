#include "mvscreen/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "mvscreen/error.hpp"

namespace mvscreen::synthetic {

namespace {

std::vector<double> random_unit(std::mt19937_64& rng, std::uint32_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::string frame_name(const std::string& participant, std::size_t position) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-f%04zu", position);
  return participant + buf;
}

std::string participant_name(std::size_t p) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%02zu", p + 1);
  return buf;
}

const char* reference_caption(ScreenLabel label, std::size_t variant) {
  static const char* tv[] = {"A television is on the wall of the living room.",
                             "A tv screen shows a cartoon in a dim room.",
                             "The family room has a large television on a stand."};
  static const char* phone[] = {"A child is holding a cell phone in their hands.",
                                "A hand holds a smartphone showing a game.",
                                "A tablet rests on the lap of a child."};
  static const char* computer[] = {"A laptop is open on the kitchen table.",
                                   "A computer monitor sits on a desk near a keyboard.",
                                   "A child looks at a laptop on a desk."};
  static const char* none[] = {"A child plays with toys on the floor.",
                               "A kitchen with a table and chairs.",
                               "A view of a backyard with a swing."};
  switch (label) {
    case ScreenLabel::TV: return tv[variant % 3];
    case ScreenLabel::Smartphone: return phone[variant % 3];
    case ScreenLabel::Computer: return computer[variant % 3];
    case ScreenLabel::NonScreen: break;
  }
  return none[variant % 3];
}

}  // namespace

SyntheticDataset make_synthetic(const SyntheticOptions& options) {
  if (options.participants == 0 || options.frames_per_scene == 0 || options.dim == 0) {
    throw Error(Errc::InvalidConfig, "synthetic dataset needs participants, frames and a dimension");
  }
  if (!(options.scene_cosine > 0.0 && options.scene_cosine < 1.0)) {
    throw Error(Errc::InvalidConfig, "scene_cosine must lie in (0, 1)");
  }
  std::mt19937_64 rng(options.seed);

  // Interleave types so every participant sees all of them.
  std::vector<ScreenLabel> scene_labels;
  for (std::size_t s = 0; s < options.scenes_per_type; ++s) {
    for (auto t : kScreenTypes) scene_labels.push_back(t);
  }
  for (std::size_t s = 0; s < options.nonscreen_scenes; ++s) {
    const auto at = scene_labels.empty() ? 0 : (s * 4 + 3) % (scene_labels.size() + 1);
    scene_labels.insert(scene_labels.begin() + static_cast<std::ptrdiff_t>(at), ScreenLabel::NonScreen);
  }

  SyntheticDataset out;
  out.embeddings = ingest::EmbeddingMatrix(options.dim);
  std::vector<std::size_t> position(options.participants, 0);
  std::vector<std::vector<ingest::FrameRecord>> per_participant(options.participants);
  std::vector<std::vector<std::vector<float>>> per_participant_vectors(options.participants);

  auto emit = [&](std::size_t p, std::optional<ScreenLabel> label, const std::vector<double>& v,
                  std::size_t variant) {
    const auto participant = participant_name(p);
    ingest::FrameRecord rec;
    rec.frame_id = frame_name(participant, ++position[p]);
    rec.participant_id = participant;
    rec.timestamp = options.start_timestamp + static_cast<std::int64_t>(10 * position[p]);
    rec.image_path = "img/" + rec.frame_id + ".jpg";
    rec.label = label;
    rec.annotation = reference_caption(label.value_or(ScreenLabel::NonScreen), variant);
    per_participant[p].push_back(rec);
    per_participant_vectors[p].emplace_back(v.begin(), v.end());
    return rec.frame_id;
  };
  auto fillers = [&](std::size_t p) {
    for (std::size_t f = 0; f < options.fillers_between; ++f) {
      emit(p, ScreenLabel::NonScreen, random_unit(rng, options.dim), f);
    }
  };

  const double shared = std::sqrt(options.scene_cosine);
  const double own = std::sqrt(1.0 - options.scene_cosine);
  for (std::size_t s = 0; s < scene_labels.size(); ++s) {
    const std::size_t p = s % options.participants;
    fillers(p);
    const auto scene_dir = random_unit(rng, options.dim);
    PlantedScene scene;
    scene.label = scene_labels[s];
    for (std::size_t f = 0; f < options.frames_per_scene; ++f) {
      auto v = random_unit(rng, options.dim);
      for (std::size_t c = 0; c < v.size(); ++c) v[c] = shared * scene_dir[c] + own * v[c];
      scene.frame_ids.push_back(emit(p, scene.label, v, s + f));
    }
    out.scenes.push_back(std::move(scene));
  }
  for (std::size_t p = 0; p < options.participants; ++p) fillers(p);

  for (std::size_t p = 0; p < options.participants; ++p) {
    for (std::size_t i = 0; i < per_participant[p].size(); ++i) {
      out.embeddings.add_row(per_participant[p][i].frame_id, per_participant_vectors[p][i]);
      out.frames.push_back(std::move(per_participant[p][i]));
    }
  }
  return out;
}

}  // namespace mvscreen::synthetic
