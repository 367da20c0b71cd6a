#include "mvscreen/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mvscreen/error.hpp"

namespace mvscreen::ingest {

namespace {

using nlohmann::json;

const std::array<const char*, 6> kKnownKeys = {"frame_id",   "participant_id", "timestamp",
                                               "image_path", "annotation",     "label"};

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

const std::string& require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw Error(Errc::MissingField, where + ": missing \"" + key + "\"");
  }
  if (!it->is_string()) {
    throw Error(Errc::MalformedRecord, where + ": \"" + key + "\" must be a string");
  }
  const auto& value = it->get_ref<const std::string&>();
  if (value.empty()) {
    throw Error(Errc::MissingField, where + ": \"" + key + "\" is empty");
  }
  return value;
}

FrameRecord parse_record(const json& obj, const std::string& where) {
  if (!obj.is_object()) {
    throw Error(Errc::MalformedRecord, where + ": expected a JSON object");
  }
  FrameRecord rec;
  rec.frame_id = require_string(obj, "frame_id", where);
  rec.participant_id = require_string(obj, "participant_id", where);

  auto ts = obj.find("timestamp");
  if (ts == obj.end() || ts->is_null()) {
    throw Error(Errc::MissingField, where + ": missing \"timestamp\"");
  }
  if (ts->is_number_integer() && !ts->is_number_unsigned()) {
    rec.timestamp = ts->get<std::int64_t>();
  } else if (ts->is_number_unsigned() &&
             ts->get<std::uint64_t>() <=
                 static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    rec.timestamp = static_cast<std::int64_t>(ts->get<std::uint64_t>());
  } else {
    throw Error(Errc::MalformedTimestamp, where + ": timestamp must be integer epoch seconds");
  }

  rec.image_path = require_string(obj, "image_path", where);

  if (auto it = obj.find("annotation"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw Error(Errc::MalformedRecord, where + ": \"annotation\" must be a string");
    }
    rec.annotation = it->get<std::string>();
  }
  if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw Error(Errc::MalformedRecord, where + ": \"label\" must be a string");
    }
    auto label = parse_screen_label(it->get_ref<const std::string&>());
    if (!label) {
      throw Error(Errc::MalformedRecord,
                  where + ": unknown label \"" + it->get<std::string>() + "\"");
    }
    rec.label = *label;
  }

  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(kKnownKeys.begin(), kKnownKeys.end(),
                     [&](const char* k) { return key == k; }) == kKnownKeys.end()) {
      rec.extra[key] = value;
    }
  }
  return rec;
}

// EMB1 is little-endian regardless of host order.
template <typename T>
T decode_le(const unsigned char* bytes) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return value;
}

template <typename T>
void encode_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(Errc::TruncatedFile, std::string("unexpected end of file while reading ") + what);
  }
}

void check_row(const std::string& frame_id, std::span<const float> values, std::size_t row) {
  bool all_zero = true;
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw Error(Errc::NonFiniteValue,
                  "row " + std::to_string(row) + " (" + frame_id + ") has a non-finite component");
    }
    if (v != 0.0f) all_zero = false;
  }
  if (all_zero) {
    throw Error(Errc::ZeroVector, frame_id);
  }
}

}  // namespace

std::vector<FrameRecord> parse_manifest(std::istream& in, const std::string& source) {
  std::vector<FrameRecord> frames;
  std::set<std::string> seen;
  std::map<std::string, std::int64_t> last_timestamp;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = at_line(source, line_no);

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::MalformedRecord, where + ": " + e.what());
    }
    auto rec = parse_record(obj, where);

    if (!seen.insert(rec.frame_id).second) {
      throw Error(Errc::DuplicateFrameId, rec.frame_id + " (" + where + ")");
    }
    auto [it, inserted] = last_timestamp.try_emplace(rec.participant_id, rec.timestamp);
    if (!inserted) {
      if (rec.timestamp < it->second) {
        throw Error(Errc::NonMonotonicTimestamps,
                    "participant " + rec.participant_id + " at " + where);
      }
      it->second = rec.timestamp;
    }
    frames.push_back(std::move(rec));
  }
  return frames;
}

std::vector<FrameRecord> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::IoError, "cannot open manifest " + path.string());
  }
  return parse_manifest(in, path.string());
}

void write_manifest(std::ostream& out, std::span<const FrameRecord> frames) {
  for (const auto& rec : frames) {
    nlohmann::ordered_json obj;
    obj["frame_id"] = rec.frame_id;
    obj["participant_id"] = rec.participant_id;
    obj["timestamp"] = rec.timestamp;
    obj["image_path"] = rec.image_path;
    if (rec.annotation) obj["annotation"] = *rec.annotation;
    if (rec.label) obj["label"] = std::string(to_string(*rec.label));
    for (const auto& [key, value] : rec.extra.items()) obj[key] = value;
    out << obj.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, std::span<const FrameRecord> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::IoError, "cannot write manifest " + path.string());
  }
  write_manifest(out, frames);
}

void EmbeddingMatrix::add_row(std::string frame_id, std::span<const float> values) {
  if (values.size() != dim_) {
    throw Error(Errc::DimMismatch, "expected " + std::to_string(dim_) + ", found " +
                                       std::to_string(values.size()) + " for " + frame_id);
  }
  check_row(frame_id, values, ids_.size());
  ids_.push_back(std::move(frame_id));
  values_.insert(values_.end(), values.begin(), values.end());
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  if (dim_ != other.dim_ || ids_ != other.ids_ || values_.size() != other.values_.size()) {
    return false;
  }
  // Bitwise, so that -0.0f and 0.0f are distinguished.
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(values_[i]) != std::bit_cast<std::uint32_t>(other.values_[i])) {
      return false;
    }
  }
  return true;
}

EmbeddingMatrix read_embeddings(std::istream& in, std::optional<std::uint32_t> expected_dim) {
  std::array<unsigned char, 12> header{};
  in.read(reinterpret_cast<char*>(header.data()), 4);
  if (in.gcount() != 4 || std::string(header.begin(), header.begin() + 4) != kEmbeddingMagic) {
    throw Error(Errc::BadMagic, "embedding file does not start with \"EMB1\"");
  }
  read_exact(in, header.data() + 4, 8, "header");
  const auto count = decode_le<std::uint32_t>(header.data() + 4);
  const auto dim = decode_le<std::uint32_t>(header.data() + 8);
  if (expected_dim && dim != *expected_dim) {
    throw Error(Errc::DimMismatch, "expected " + std::to_string(*expected_dim) + ", found " +
                                       std::to_string(dim));
  }
  if (dim == 0) {
    throw Error(Errc::DimMismatch, "expected a positive dimension, found 0");
  }

  EmbeddingMatrix matrix(dim);
  std::set<std::string> seen;
  std::vector<unsigned char> raw(static_cast<std::size_t>(dim) * 4);
  std::vector<float> values(dim);
  for (std::uint32_t row = 0; row < count; ++row) {
    std::array<unsigned char, 2> len_bytes{};
    read_exact(in, len_bytes.data(), 2, "row id length");
    const auto len = decode_le<std::uint16_t>(len_bytes.data());
    std::string frame_id(len, '\0');
    read_exact(in, reinterpret_cast<unsigned char*>(frame_id.data()), len, "row id");
    if (frame_id.empty()) {
      throw Error(Errc::MalformedRecord, "row " + std::to_string(row) + " has an empty frame id");
    }
    if (!seen.insert(frame_id).second) {
      throw Error(Errc::DuplicateFrameId, frame_id);
    }
    read_exact(in, raw.data(), raw.size(), "row values");
    for (std::uint32_t c = 0; c < dim; ++c) {
      values[c] = std::bit_cast<float>(decode_le<std::uint32_t>(raw.data() + 4 * c));
    }
    matrix.add_row(std::move(frame_id), values);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::TrailingData, "bytes after the last declared row");
  }
  return matrix;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<std::uint32_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::IoError, "cannot open embeddings " + path.string());
  }
  try {
    return read_embeddings(in, expected_dim);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix) {
  std::string buf(kEmbeddingMagic);
  encode_le<std::uint32_t>(buf, static_cast<std::uint32_t>(matrix.rows()));
  encode_le<std::uint32_t>(buf, matrix.dim());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto& id = matrix.id(r);
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(Errc::MalformedRecord, "frame id longer than 65535 bytes");
    }
    encode_le<std::uint16_t>(buf, static_cast<std::uint16_t>(id.size()));
    buf += id;
    for (float v : matrix.row(r)) encode_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::IoError, "cannot write embeddings " + path.string());
  }
  write_embeddings(out, matrix);
}

std::optional<std::size_t> Dataset::index_of(const std::string& frame_id) const {
  auto it = index_.find(frame_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const FrameRecord& Dataset::frame(const std::string& frame_id) const {
  auto idx = index_of(frame_id);
  if (!idx) throw Error(Errc::EmbeddingMissing, "unknown frame " + frame_id);
  return frames_[*idx];
}

Dataset validate_dataset(std::vector<FrameRecord> frames, const EmbeddingMatrix& embeddings) {
  std::sort(frames.begin(), frames.end(), [](const FrameRecord& a, const FrameRecord& b) {
    return std::tie(a.participant_id, a.timestamp, a.frame_id) <
           std::tie(b.participant_id, b.timestamp, b.frame_id);
  });

  std::unordered_map<std::string, std::size_t> rows;
  rows.reserve(embeddings.rows());
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    if (!rows.emplace(embeddings.id(r), r).second) {
      throw Error(Errc::DuplicateFrameId, embeddings.id(r) + " (embedding rows)");
    }
  }

  std::set<std::string> missing;
  std::set<std::string> manifest_ids;
  for (const auto& f : frames) {
    if (!manifest_ids.insert(f.frame_id).second) {
      throw Error(Errc::DuplicateFrameId, f.frame_id);
    }
    if (!rows.contains(f.frame_id)) missing.insert(f.frame_id);
  }
  if (!missing.empty()) {
    throw Error(Errc::EmbeddingMissing, *missing.begin() + " (" + std::to_string(missing.size()) +
                                            " frame(s) without an embedding row)");
  }
  if (rows.size() != frames.size()) {
    std::set<std::string> orphans;
    for (const auto& id : embeddings.ids()) {
      if (!manifest_ids.contains(id)) orphans.insert(id);
    }
    throw Error(Errc::OrphanEmbedding, *orphans.begin() + " (" + std::to_string(orphans.size()) +
                                           " row(s) not in the manifest)");
  }

  Dataset ds;
  ds.embeddings_ = EmbeddingMatrix(embeddings.dim());
  ds.index_.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    ds.embeddings_.add_row(frames[i].frame_id, embeddings.row(rows.at(frames[i].frame_id)));
    ds.index_.emplace(frames[i].frame_id, i);
  }
  ds.frames_ = std::move(frames);
  return ds;
}

}  // namespace mvscreen::ingest
