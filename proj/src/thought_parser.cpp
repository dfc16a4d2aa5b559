#include "psim/thought_parser.hpp"

#include <array>
#include <optional>
#include <regex>
#include <vector>

#include "psim/error.hpp"
#include "text_util.hpp"

namespace psim {

namespace {

// Intent capture stops at ';', '.', or end of line.
constexpr const char* kIntent = R"(([^;.\n]+?))";
constexpr const char* kSep = R"(\s*[;,]\s*)";
constexpr const char* kLabel = R"((?:thought\s*:\s*)?)";

struct Template {
  ThoughtKind kind;
  std::regex anchored;
  std::regex embedded;
};

std::regex compile(const std::string& body, bool anchored) {
  auto flags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;
  if (anchored) return std::regex("^" + std::string(kLabel) + body + "$", flags);
  return std::regex(body, flags);
}

const std::array<Template, 4>& templates() {
  static const std::array<Template, 4> kTemplates = [] {
    const std::string chit = std::string("the user did not implicitly mention any potential intent") +
                             kSep + "i should continue the chit[- ]?chat";
    const std::string pivot = std::string("the user implicitly mentioned the intent of ") + kIntent +
                              kSep + "i should smoothly pivot the conversation to the topic of " +
                              R"(([^;.\n]+))";
    const std::string cont = std::string("the user did not change the topic of ") + kIntent + kSep +
                             "i should continue the topic";
    const std::string expl =
        std::string("the user has explicitly shown (?:his ?/ ?her|his or her|his|her) intent of ") +
        R"(([^;.\n]+))";
    return std::array<Template, 4>{{
        {ThoughtKind::ExplicitIntent, compile(expl, true), compile(expl, false)},
        {ThoughtKind::Pivot, compile(pivot, true), compile(pivot, false)},
        {ThoughtKind::ContinueTopic, compile(cont, true), compile(cont, false)},
        {ThoughtKind::ChitChat, compile(chit, true), compile(chit, false)},
    }};
  }();
  return kTemplates;
}

// Collapses whitespace and drops trailing punctuation and wrapping quotes.
std::string normalize_sentence(std::string_view s) {
  std::string out = detail::collapse_whitespace(s);
  auto is_trailing = [](char c) {
    return c == '.' || c == '!' || c == '?' || c == ';' || c == ',' || c == ':' || c == '"' ||
           c == '\'' || c == '*' || c == '`' || detail::is_space(c);
  };
  while (!out.empty() && is_trailing(out.back())) out.pop_back();
  std::size_t lead = 0;
  while (lead < out.size() && (out[lead] == '"' || out[lead] == '\'' || out[lead] == '*' ||
                               out[lead] == '`' || out[lead] == '-' || detail::is_space(out[lead]))) {
    ++lead;
  }
  return out.substr(lead);
}

// Splits on newlines and on sentence-final punctuation followed by space.
std::vector<std::string> split_sentences(std::string_view raw) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto s = normalize_sentence(current);
    if (!s.empty()) out.push_back(std::move(s));
    current.clear();
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\n' || c == '\r') {
      flush();
      continue;
    }
    current.push_back(c);
    bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && (i + 1 == raw.size() || detail::is_space(raw[i + 1]))) flush();
  }
  flush();
  return out;
}

std::optional<Thought> build(ThoughtKind kind, const std::smatch& m, const IntentCatalog& catalog) {
  if (kind == ThoughtKind::ChitChat) return Thought{ChitChat{}};
  auto name = detail::trim(std::string_view(m[1].first, m[1].second));
  if (name.empty()) return std::nullopt;
  Intent intent = catalog.canonicalize(name).intent;
  switch (kind) {
    case ThoughtKind::Pivot: return Thought{Pivot{std::move(intent)}};
    case ThoughtKind::ContinueTopic: return Thought{ContinueTopic{std::move(intent)}};
    case ThoughtKind::ExplicitIntent: return Thought{ExplicitIntent{std::move(intent)}};
    default: return std::nullopt;
  }
}

std::optional<Thought> match_sentence(const std::string& sentence, const IntentCatalog& catalog,
                                      bool anchored) {
  std::smatch m;
  for (const auto& t : templates()) {
    bool hit = anchored ? std::regex_match(sentence, m, t.anchored)
                        : std::regex_search(sentence, m, t.embedded);
    if (hit) {
      if (auto thought = build(t.kind, m, catalog)) return thought;
    }
  }
  return std::nullopt;
}

}  // namespace

IntentMatch canonicalize_intent(std::string_view raw, const IntentCatalog& catalog) {
  return catalog.canonicalize(raw);
}

Thought parse_thought(std::string_view raw, const IntentCatalog& catalog) {
  auto sentences = split_sentences(raw);
  if (sentences.empty()) return Unrecognized{std::string(raw)};
  if (auto t = match_sentence(sentences.back(), catalog, true)) return *t;
  for (auto it = sentences.rbegin(); it != sentences.rend(); ++it) {
    if (auto t = match_sentence(*it, catalog, false)) return *t;
  }
  return Unrecognized{std::string(raw)};
}

std::string format_thought(const Thought& thought) {
  struct Formatter {
    std::string operator()(const ChitChat&) const {
      return "The user did not implicitly mention any potential intent; I should continue the "
             "chit-chat.";
    }
    std::string operator()(const Pivot& p) const {
      return "The user implicitly mentioned the intent of " + p.intent.name +
             "; I should smoothly pivot the conversation to the topic of " + p.intent.name + ".";
    }
    std::string operator()(const ContinueTopic& c) const {
      return "The user did not change the topic of " + c.intent.name +
             "; I should continue the topic.";
    }
    std::string operator()(const ExplicitIntent& e) const {
      return "The user has explicitly shown his/her intent of " + e.intent.name + ".";
    }
    std::string operator()(const Unrecognized&) const {
      throw Error(ErrorCode::kInvalidArgument, "cannot format an unrecognized thought");
    }
  };
  return std::visit(Formatter{}, thought);
}

}  // namespace psim
