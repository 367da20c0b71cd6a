#include "mvscreen/caption.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mvscreen/error.hpp"

namespace mvscreen::caption {

namespace {

bool is_blank(const std::string& text) {
  return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::string_view to_string(ProviderKind kind) noexcept {
  switch (kind) {
    case ProviderKind::Mock: return "Mock";
    case ProviderKind::Remote: return "Remote";
    case ProviderKind::File: return "File";
  }
  return "Mock";
}

std::string mock_caption(std::optional<ScreenLabel> label) {
  switch (label.value_or(ScreenLabel::NonScreen)) {
    case ScreenLabel::TV: return "A television is mounted on the wall of a living room.";
    case ScreenLabel::Smartphone: return "A person is holding a smartphone in their hand.";
    case ScreenLabel::Computer: return "A person sits in front of a laptop on a desk.";
    case ScreenLabel::NonScreen: break;
  }
  return "A child plays with wooden blocks on the floor.";
}

std::string MockProvider::describe(const CaptionRequest& request) {
  return mock_caption(request.label);
}

FileProvider::FileProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open captions " + path.string());
  captions_ = read_captions(in);
}

FileProvider::FileProvider(std::map<std::string, std::string> captions)
    : captions_(std::move(captions)) {}

std::string FileProvider::describe(const CaptionRequest& request) {
  auto it = captions_.find(request.group.group_id);
  if (it == captions_.end()) throw Error(Errc::MissingCaption, request.group.group_id);
  return it->second;
}

RemoteProvider::RemoteProvider(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    throw Error(Errc::InvalidConfig, "remote provider needs an endpoint");
  }
  if (options_.attempts < 1) {
    throw Error(Errc::InvalidConfig, "remote provider needs at least one attempt");
  }
  if (options_.cache_path && std::filesystem::exists(*options_.cache_path)) {
    std::ifstream in(*options_.cache_path);
    if (!in) throw Error(Errc::IoError, "cannot open cache " + options_.cache_path->string());
    cache_ = read_captions(in);
  }
}

std::string RemoteProvider::describe(const CaptionRequest& request) {
  if (options_.cache_path) {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(request.group.group_id); it != cache_.end()) return it->second;
  }
  auto text = fetch(request);
  if (options_.cache_path) {
    std::lock_guard lock(cache_mutex_);
    cache_.emplace(request.group.group_id, text);
  }
  return text;
}

std::string RemoteProvider::fetch(const CaptionRequest& request) const {
  nlohmann::ordered_json body;
  body["group_id"] = request.group.group_id;
  body["images"] = request.images;
  const auto payload = body.dump();

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    httplib::Client client(options_.endpoint);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    auto res = client.Post("/v1/caption", payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      auto reply = nlohmann::json::parse(res->body, nullptr, false);
      if (reply.is_object() && reply.contains("description") && reply["description"].is_string()) {
        auto text = reply["description"].get<std::string>();
        if (is_blank(text)) throw Error(Errc::EmptyResponse, request.group.group_id);
        return text;
      }
      last_error = "reply lacks a string \"description\"";
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(Errc::ProviderUnavailable,
              options_.endpoint + " after " + std::to_string(options_.attempts) +
                  " attempt(s) for " + request.group.group_id + ": " + last_error);
}

void RemoteProvider::flush_cache() const {
  if (!options_.cache_path) return;
  std::lock_guard lock(cache_mutex_);
  std::ofstream out(*options_.cache_path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write cache " + options_.cache_path->string());
  write_captions(out, cache_);
}

SceneDescription caption_group(const CaptionRequest& request, CaptionProvider& provider) {
  auto text = provider.describe(request);
  if (is_blank(text)) throw Error(Errc::EmptyResponse, request.group.group_id);
  return {request.group.group_id, std::move(text), provider.kind()};
}

std::vector<SceneDescription> caption_groups(std::span<const CaptionRequest> requests,
                                             CaptionProvider& provider,
                                             std::size_t max_in_flight) {
  const std::size_t n = requests.size();
  std::vector<SceneDescription> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        results[i] = caption_group(requests[i], provider);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(max_in_flight, 1), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

void write_captions(std::ostream& out, const std::map<std::string, std::string>& captions) {
  for (const auto& [group_id, text] : captions) {
    nlohmann::ordered_json obj;
    obj["group_id"] = group_id;
    obj["text"] = text;
    out << obj.dump() << '\n';
  }
}

std::map<std::string, std::string> read_captions(std::istream& in) {
  std::map<std::string, std::string> captions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      captions[obj.at("group_id").get<std::string>()] = obj.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedRecord, "captions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return captions;
}

void write_descriptions(std::ostream& out, std::span<const SceneDescription> descriptions) {
  for (const auto& d : descriptions) {
    nlohmann::ordered_json obj;
    obj["group_id"] = d.group_id;
    obj["text"] = d.text;
    obj["provider"] = std::string(to_string(d.provider));
    out << obj.dump() << '\n';
  }
}

void write_descriptions(const std::filesystem::path& path,
                        std::span<const SceneDescription> descriptions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write descriptions " + path.string());
  write_descriptions(out, descriptions);
}

std::vector<SceneDescription> read_descriptions(std::istream& in) {
  std::vector<SceneDescription> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      SceneDescription d;
      d.group_id = obj.at("group_id").get<std::string>();
      d.text = obj.at("text").get<std::string>();
      const auto provider = obj.value("provider", std::string("File"));
      if (provider == "Mock") {
        d.provider = ProviderKind::Mock;
      } else if (provider == "Remote") {
        d.provider = ProviderKind::Remote;
      } else if (provider == "File") {
        d.provider = ProviderKind::File;
      } else {
        throw Error(Errc::MalformedRecord, "unknown provider \"" + provider + "\"");
      }
      if (is_blank(d.text)) throw Error(Errc::EmptyResponse, d.group_id);
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedRecord,
                  "descriptions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SceneDescription> load_descriptions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open descriptions " + path.string());
  return read_descriptions(in);
}

}  // namespace mvscreen::caption
