#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mvscreen/types.hpp"

namespace mvscreen::ingest {

inline constexpr char kManifestVersion[] = "manifest v1";
inline constexpr char kEmbeddingMagic[] = "EMB1";

/// One egocentric image as listed in the manifest.
struct FrameRecord {
  std::string frame_id;
  std::string participant_id;
  std::int64_t timestamp = 0;  // epoch seconds
  std::string image_path;
  std::optional<std::string> annotation;
  std::optional<ScreenLabel> label;
  // Keys the manifest carried that this library does not interpret.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const FrameRecord&) const = default;
};

/// Parses JSON Lines. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines.
std::vector<FrameRecord> parse_manifest(std::istream& in, const std::string& source = "<stream>");
std::vector<FrameRecord> parse_manifest(const std::filesystem::path& path);

/// One JSON object per line, known keys first, then preserved extras.
void write_manifest(std::ostream& out, std::span<const FrameRecord> frames);
void write_manifest(const std::filesystem::path& path, std::span<const FrameRecord> frames);

/// Row-major float32 matrix with one frame id per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::uint32_t dim) : dim_(dim) {}

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return ids_.size(); }

  const std::string& id(std::size_t row) const { return ids_.at(row); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::span<const float> row(std::size_t row) const {
    return {values_.data() + row * dim_, dim_};
  }

  /// Appends a row. Throws DimMismatch, NonFiniteValue or ZeroVector.
  void add_row(std::string frame_id, std::span<const float> values);

  bool operator==(const EmbeddingMatrix& other) const;

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> values_;
};

/// Reads the EMB1 interchange format. When expected_dim is set, a header
/// with a different dimension fails with DimMismatch.
EmbeddingMatrix read_embeddings(std::istream& in, std::optional<std::uint32_t> expected_dim = {});
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<std::uint32_t> expected_dim = {});

void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

/// Frames joined with their embedding rows. frames()[i] owns row i of
/// embeddings(); frames are sorted by (participant_id, timestamp, frame_id).
class Dataset {
 public:
  const std::vector<FrameRecord>& frames() const noexcept { return frames_; }
  const EmbeddingMatrix& embeddings() const noexcept { return embeddings_; }
  std::size_t size() const noexcept { return frames_.size(); }

  std::optional<std::size_t> index_of(const std::string& frame_id) const;
  const FrameRecord& frame(const std::string& frame_id) const;

 private:
  friend Dataset validate_dataset(std::vector<FrameRecord> frames, const EmbeddingMatrix& embeddings);

  std::vector<FrameRecord> frames_;
  EmbeddingMatrix embeddings_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Joins manifest and embeddings into a bijective index. Throws
/// EmbeddingMissing or OrphanEmbedding naming the first offending id in
/// sorted order, so the result is independent of input row order.
Dataset validate_dataset(std::vector<FrameRecord> frames, const EmbeddingMatrix& embeddings);

}  // namespace mvscreen::ingest
