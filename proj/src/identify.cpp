#include "mvscreen/identify.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvscreen/error.hpp"
#include "mvscreen/text.hpp"

namespace mvscreen::identify {

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool priority_before(const LexiconEntry& a, const LexiconEntry& b) {
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() > b.tokens.size();
  if (a.phrase.size() != b.phrase.size()) return a.phrase.size() > b.phrase.size();
  return a.phrase < b.phrase;
}

bool token_matches(const std::string& text_token, const std::string& lexicon_token, bool plural) {
  if (text_token == lexicon_token) return true;
  return plural && text_token.size() == lexicon_token.size() + 1 && text_token.back() == 's' &&
         text_token.compare(0, lexicon_token.size(), lexicon_token) == 0;
}

}  // namespace

KeywordLexicon KeywordLexicon::defaults() {
  KeywordLexicon lex;
  for (auto p : {"tv", "television"}) lex.add(p, ScreenLabel::TV);
  for (auto p : {"smartphone", "phone", "tablet", "cellphone", "ipad", "cell phone"}) {
    lex.add(p, ScreenLabel::Smartphone);
  }
  for (auto p : {"computer", "laptop", "computer monitor"}) lex.add(p, ScreenLabel::Computer);
  return lex;
}

KeywordLexicon KeywordLexicon::from_json(const nlohmann::json& config) {
  if (!config.is_object()) {
    throw Error(Errc::InvalidConfig, "lexicon must be a JSON object {phrase: type}");
  }
  auto lex = defaults();
  for (const auto& [phrase, type] : config.items()) {
    if (!type.is_string()) {
      throw Error(Errc::InvalidConfig, "lexicon type for \"" + phrase + "\" must be a string");
    }
    auto label = parse_screen_label(type.get_ref<const std::string&>());
    if (!label) {
      throw Error(Errc::InvalidConfig, "unknown screen type \"" + type.get<std::string>() + "\"");
    }
    lex.add(phrase, *label);
  }
  return lex;
}

KeywordLexicon KeywordLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open lexicon " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
}

void KeywordLexicon::add(std::string_view phrase, ScreenLabel type) {
  if (type == ScreenLabel::NonScreen) {
    throw Error(Errc::InvalidConfig, "lexicon phrases must map to a screen type");
  }
  auto tokens = text::tokenize(phrase);
  if (tokens.empty()) throw Error(Errc::InvalidConfig, "empty lexicon phrase");
  LexiconEntry entry{join(tokens), std::move(tokens), type};

  auto same = std::find_if(entries_.begin(), entries_.end(),
                           [&](const LexiconEntry& e) { return e.phrase == entry.phrase; });
  if (same != entries_.end()) {
    same->type = type;
    return;
  }
  entries_.insert(std::upper_bound(entries_.begin(), entries_.end(), entry, priority_before),
                  std::move(entry));
}

std::optional<ScreenLabel> KeywordLexicon::lookup(std::string_view phrase) const {
  const auto canonical = join(text::tokenize(phrase));
  for (const auto& e : entries_) {
    if (e.phrase == canonical) return e.type;
  }
  return std::nullopt;
}

std::vector<std::string> extract_keywords(std::string_view input, const KeywordLexicon& lexicon) {
  const auto tokens = text::tokenize(input);
  std::vector<std::string> matched;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    const LexiconEntry* hit = nullptr;
    for (const auto& e : lexicon.entries()) {
      if (pos + e.tokens.size() > tokens.size()) continue;
      bool ok = true;
      for (std::size_t t = 0; t < e.tokens.size() && ok; ++t) {
        ok = token_matches(tokens[pos + t], e.tokens[t], lexicon.strip_plural_s);
      }
      if (ok) {
        hit = &e;
        break;
      }
    }
    if (hit) {
      if (std::find(matched.begin(), matched.end(), hit->phrase) == matched.end()) {
        matched.push_back(hit->phrase);
      }
      pos += hit->tokens.size();
    } else {
      ++pos;
    }
  }
  return matched;
}

TypeMapping map_to_screen_type(std::span<const std::string> phrases, const KeywordLexicon& lexicon) {
  TypeMapping mapping;
  for (const auto& phrase : phrases) {
    auto type = lexicon.lookup(phrase);
    if (!type) throw Error(Errc::UnknownPhrase, phrase);
    if (mapping.types.empty()) mapping.primary_type = *type;
    if (std::find(mapping.types.begin(), mapping.types.end(), *type) == mapping.types.end()) {
      mapping.types.push_back(*type);
    }
  }
  std::sort(mapping.types.begin(), mapping.types.end());
  return mapping;
}

Binary collapse_binary(const ScreenVerdict& verdict) noexcept {
  return verdict.types.empty() ? Binary::NonScreen : Binary::Screen;
}

ScreenVerdict identify(const caption::SceneDescription& description, const KeywordLexicon& lexicon) {
  ScreenVerdict v;
  v.group_id = description.group_id;
  v.matched_phrases = extract_keywords(description.text, lexicon);
  auto mapping = map_to_screen_type(v.matched_phrases, lexicon);
  v.types = std::move(mapping.types);
  v.primary_type = mapping.primary_type;
  v.binary = collapse_binary(v);
  return v;
}

std::vector<ScreenVerdict> identify_all(std::span<const caption::SceneDescription> descriptions,
                                        const KeywordLexicon& lexicon) {
  std::vector<ScreenVerdict> out;
  out.reserve(descriptions.size());
  for (const auto& d : descriptions) out.push_back(identify(d, lexicon));
  return out;
}

std::string summarize(const ScreenVerdict& verdict) {
  if (verdict.types.empty()) return "No screens visible.";
  std::string out = "Screen types: ";
  out += to_string(verdict.primary_type);
  for (auto t : verdict.types) {
    if (t == verdict.primary_type) continue;
    out += ", ";
    out += to_string(t);
  }
  return out + ".";
}

void write_verdicts(std::ostream& out, std::span<const ScreenVerdict> verdicts) {
  for (const auto& v : verdicts) {
    nlohmann::ordered_json obj;
    obj["group_id"] = v.group_id;
    obj["matched_phrases"] = v.matched_phrases;
    auto types = nlohmann::ordered_json::array();
    for (auto t : v.types) types.push_back(std::string(to_string(t)));
    obj["types"] = std::move(types);
    obj["primary_type"] = std::string(to_string(v.primary_type));
    obj["binary"] = std::string(to_string(v.binary));
    out << obj.dump() << '\n';
  }
}

void write_verdicts(const std::filesystem::path& path, std::span<const ScreenVerdict> verdicts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write verdicts " + path.string());
  write_verdicts(out, verdicts);
}

std::vector<ScreenVerdict> read_verdicts(std::istream& in) {
  std::vector<ScreenVerdict> out;
  std::string line;
  std::size_t line_no = 0;
  auto label_of = [&](const std::string& s) {
    auto label = parse_screen_label(s);
    if (!label) {
      throw Error(Errc::MalformedRecord,
                  "verdicts line " + std::to_string(line_no) + ": unknown type \"" + s + "\"");
    }
    return *label;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      ScreenVerdict v;
      v.group_id = obj.at("group_id").get<std::string>();
      v.matched_phrases = obj.at("matched_phrases").get<std::vector<std::string>>();
      for (const auto& t : obj.at("types")) v.types.push_back(label_of(t.get<std::string>()));
      v.primary_type = label_of(obj.at("primary_type").get<std::string>());
      auto binary = parse_binary(obj.at("binary").get<std::string>());
      if (!binary) {
        throw Error(Errc::MalformedRecord, "verdicts line " + std::to_string(line_no) + ": bad binary");
      }
      v.binary = *binary;
      if (v.binary != collapse_binary(v)) {
        throw Error(Errc::MalformedRecord,
                    "verdicts line " + std::to_string(line_no) + ": binary disagrees with types");
      }
      out.push_back(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedRecord, "verdicts line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ScreenVerdict> load_verdicts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open verdicts " + path.string());
  return read_verdicts(in);
}

}  // namespace mvscreen::identify
