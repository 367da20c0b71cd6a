#include "mvscreen/types.hpp"

#include "mvscreen/error.hpp"

namespace mvscreen {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingField: return "MissingField";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::DuplicateFrameId: return "DuplicateFrameId";
    case Errc::MalformedTimestamp: return "MalformedTimestamp";
    case Errc::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case Errc::BadMagic: return "BadMagic";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::TrailingData: return "TrailingData";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::EmbeddingMissing: return "EmbeddingMissing";
    case Errc::OrphanEmbedding: return "OrphanEmbedding";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::MissingCaption: return "MissingCaption";
    case Errc::EmptyResponse: return "EmptyResponse";
    case Errc::UnknownPhrase: return "UnknownPhrase";
    case Errc::EmptyCandidate: return "EmptyCandidate";
    case Errc::EmptyReference: return "EmptyReference";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::TooFewGroups: return "TooFewGroups";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view to_string(ScreenLabel label) noexcept {
  switch (label) {
    case ScreenLabel::TV: return "TV";
    case ScreenLabel::Smartphone: return "Smartphone";
    case ScreenLabel::Computer: return "Computer";
    case ScreenLabel::NonScreen: return "NonScreen";
  }
  return "NonScreen";
}

std::string_view to_string(Binary binary) noexcept {
  return binary == Binary::Screen ? "Screen" : "NonScreen";
}

std::optional<ScreenLabel> parse_screen_label(std::string_view text) noexcept {
  for (auto label : {ScreenLabel::TV, ScreenLabel::Smartphone, ScreenLabel::Computer,
                     ScreenLabel::NonScreen}) {
    if (text == to_string(label)) return label;
  }
  return std::nullopt;
}

std::optional<Binary> parse_binary(std::string_view text) noexcept {
  if (text == "Screen") return Binary::Screen;
  if (text == "NonScreen") return Binary::NonScreen;
  return std::nullopt;
}

}  // namespace mvscreen
