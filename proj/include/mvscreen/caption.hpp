#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvscreen/types.hpp"
#include "mvscreen/view_select.hpp"

namespace mvscreen::caption {

enum class ProviderKind { Mock, Remote, File };

std::string_view to_string(ProviderKind kind) noexcept;

struct SceneDescription {
  std::string group_id;
  std::string text;
  ProviderKind provider = ProviderKind::Mock;

  bool operator==(const SceneDescription&) const = default;
};

/// What a provider gets to see for one group: all k image references plus
/// the group's ground-truth label when the manifest has one (only the mock
/// provider looks at it).
struct CaptionRequest {
  select::MultiViewGroup group;
  std::vector<std::string> images;
  std::optional<ScreenLabel> label;
};

/// Implementations must be safe to call concurrently.
class CaptionProvider {
 public:
  virtual ~CaptionProvider() = default;
  virtual ProviderKind kind() const noexcept = 0;
  virtual std::string describe(const CaptionRequest& request) = 0;
};

/// Fixed sentence per label; each screen template contains exactly one
/// lexicon keyword and the non-screen template contains none.
std::string mock_caption(std::optional<ScreenLabel> label);

class MockProvider final : public CaptionProvider {
 public:
  ProviderKind kind() const noexcept override { return ProviderKind::Mock; }
  std::string describe(const CaptionRequest& request) override;
};

/// Serves captions from JSON Lines {group_id, text} loaded at construction.
class FileProvider final : public CaptionProvider {
 public:
  explicit FileProvider(const std::filesystem::path& path);
  explicit FileProvider(std::map<std::string, std::string> captions);

  ProviderKind kind() const noexcept override { return ProviderKind::File; }
  std::string describe(const CaptionRequest& request) override;

 private:
  std::map<std::string, std::string> captions_;
};

struct RemoteOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8080"
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{30000};
  std::optional<std::filesystem::path> cache_path;
};

/// Client for POST /v1/caption. Non-2xx replies, transport errors and
/// unparseable bodies are retried with doubling backoff; a 2xx reply with
/// an empty description fails immediately with EmptyResponse.
class RemoteProvider final : public CaptionProvider {
 public:
  explicit RemoteProvider(RemoteOptions options);

  ProviderKind kind() const noexcept override { return ProviderKind::Remote; }
  std::string describe(const CaptionRequest& request) override;

  /// Writes newly fetched captions back to the cache file, if one is set.
  void flush_cache() const;

 private:
  std::string fetch(const CaptionRequest& request) const;

  RemoteOptions options_;
  std::string host_;
  int port_ = 80;
  mutable std::mutex cache_mutex_;
  std::map<std::string, std::string> cache_;
};

/// One description for one group. Throws EmptyResponse for blank text.
SceneDescription caption_group(const CaptionRequest& request, CaptionProvider& provider);

/// Captions all requests with at most `max_in_flight` concurrent calls.
/// Results are returned in request order whatever the completion order;
/// the first failure (by request order) is rethrown after all workers stop.
std::vector<SceneDescription> caption_groups(std::span<const CaptionRequest> requests,
                                             CaptionProvider& provider,
                                             std::size_t max_in_flight = 4);

/// JSON Lines {group_id, text}; the File-provider and cache format.
void write_captions(std::ostream& out, const std::map<std::string, std::string>& captions);
std::map<std::string, std::string> read_captions(std::istream& in);

/// JSON Lines {group_id, text, provider} for pipeline output.
void write_descriptions(std::ostream& out, std::span<const SceneDescription> descriptions);
void write_descriptions(const std::filesystem::path& path,
                        std::span<const SceneDescription> descriptions);
std::vector<SceneDescription> read_descriptions(std::istream& in);
std::vector<SceneDescription> load_descriptions(const std::filesystem::path& path);

}  // namespace mvscreen::caption
