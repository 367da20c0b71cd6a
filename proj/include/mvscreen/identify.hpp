#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mvscreen/caption.hpp"
#include "mvscreen/types.hpp"

namespace mvscreen::identify {

struct LexiconEntry {
  std::string phrase;               // canonical: lowercase tokens joined by one space
  std::vector<std::string> tokens;
  ScreenLabel type = ScreenLabel::TV;
};

/// Keyword phrase to screen type table. Entries are kept in match priority
/// order: more tokens first, then longer text, then alphabetical.
class KeywordLexicon {
 public:
  /// The built-in table:
  ///   TV         tv, television
  ///   Smartphone smartphone, phone, tablet, cellphone, ipad, cell phone
  ///   Computer   computer, laptop, computer monitor
  static KeywordLexicon defaults();

  /// Built-in table overlaid with a JSON object {phrase: type}.
  static KeywordLexicon from_json(const nlohmann::json& config);
  static KeywordLexicon load(const std::filesystem::path& path);

  /// Adds or replaces a phrase. Throws InvalidConfig for an empty phrase or
  /// a NonScreen type.
  void add(std::string_view phrase, ScreenLabel type);

  std::optional<ScreenLabel> lookup(std::string_view phrase) const;

  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }

  /// Lets a text token "phones" match the lexicon token "phone".
  bool strip_plural_s = true;

 private:
  std::vector<LexiconEntry> entries_;
};

/// Canonical phrases in order of first occurrence. Matching is on whole
/// tokens, case-insensitive, longest phrase first, and each token is
/// consumed by at most one phrase.
std::vector<std::string> extract_keywords(std::string_view text, const KeywordLexicon& lexicon);

struct TypeMapping {
  std::vector<ScreenLabel> types;  // distinct, enum order
  ScreenLabel primary_type = ScreenLabel::NonScreen;
};

/// Throws UnknownPhrase for a phrase the lexicon does not contain.
TypeMapping map_to_screen_type(std::span<const std::string> phrases, const KeywordLexicon& lexicon);

struct ScreenVerdict {
  std::string group_id;
  std::vector<std::string> matched_phrases;
  std::vector<ScreenLabel> types;
  ScreenLabel primary_type = ScreenLabel::NonScreen;
  Binary binary = Binary::NonScreen;

  bool operator==(const ScreenVerdict&) const = default;
};

Binary collapse_binary(const ScreenVerdict& verdict) noexcept;

ScreenVerdict identify(const caption::SceneDescription& description, const KeywordLexicon& lexicon);
std::vector<ScreenVerdict> identify_all(std::span<const caption::SceneDescription> descriptions,
                                        const KeywordLexicon& lexicon);

/// Short sentence naming the verdict's types, primary first, using only
/// canonical type names.
std::string summarize(const ScreenVerdict& verdict);

void write_verdicts(std::ostream& out, std::span<const ScreenVerdict> verdicts);
void write_verdicts(const std::filesystem::path& path, std::span<const ScreenVerdict> verdicts);
std::vector<ScreenVerdict> read_verdicts(std::istream& in);
std::vector<ScreenVerdict> load_verdicts(const std::filesystem::path& path);

}  // namespace mvscreen::identify
