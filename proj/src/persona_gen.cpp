#include "psim/persona_gen.hpp"

#include <map>
#include <mutex>
#include <regex>
#include <set>

#include "parallel.hpp"
#include "prompts.hpp"
#include "psim/error.hpp"
#include "psim/logging.hpp"
#include "text_util.hpp"

namespace psim {

namespace {

template <class E, std::size_t N>
E pick(Rng& rng, const std::array<E, N>& values) {
  return values[uniform_below(rng, N)];
}

int pick_year(Rng& rng, AgeGroup g) {
  auto r = age_range(g);
  return r.lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(r.hi - r.lo + 1)));
}

std::string pick_title(Rng& rng, Sector s) {
  const auto& titles = sector_info(s).titles;
  return std::string(titles[uniform_below(rng, titles.size())]);
}

std::string zero_pad(std::size_t n, std::size_t width) {
  auto s = std::to_string(n);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

// Drops lines that open or close a ``` fence.
std::string strip_fences(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    auto trimmed = detail::trim(line);
    if (trimmed.rfind("```", 0) == 0) {
      // Keep anything after a one-line fence such as ```{"a":1}```.
      auto rest = trimmed.substr(3);
      while (!rest.empty() && std::isalpha(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
      if (rest.size() >= 3 && rest.substr(rest.size() - 3) == "```") rest.remove_suffix(3);
      out.append(rest);
    } else {
      out.append(line);
    }
    out.push_back('\n');
    pos = end + 1;
  }
  return out;
}

// Index one past the brace closing the object that opens at `open`, or npos.
std::size_t matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

}  // namespace

void SamplingPlan::validate() const {
  if (personas_per_condition < 1) {
    throw Error(ErrorCode::kConfig, "personas_per_condition must be >= 1");
  }
  if (values.empty()) throw Error(ErrorCode::kConfig, "sampling plan has no values");
  for (const auto& v : values) {
    if (!condition_rank(fixed_attribute, v)) {
      throw Error(ErrorCode::kConfig, "'" + v + "' is not a valid " +
                                          std::string(to_token(fixed_attribute)) + " value");
    }
  }
}

void to_json(Json& j, const SamplingPlan& v) {
  j = Json{{"fixed_attribute", to_token(v.fixed_attribute)},
           {"values", v.values},
           {"personas_per_condition", v.personas_per_condition}};
}

void from_json(const Json& j, SamplingPlan& v) {
  v.fixed_attribute =
      parse_token<FixedAttribute>(j.at("fixed_attribute").get<std::string>(), "fixed attribute");
  if (auto it = j.find("values"); it != j.end()) {
    v.values = it->get<std::vector<std::string>>();
    for (auto& value : v.values) value = detail::to_lower(value);
  } else {
    v.values = attribute_domain(v.fixed_attribute);
  }
  v.personas_per_condition = j.value("personas_per_condition", 20);
  v.validate();
}

PersonaSpec sample_spec(FixedAttribute fixed, std::string_view fixed_value, Rng& rng) {
  PersonaSpec spec;
  spec.fixed_attribute = fixed;

  if (fixed == FixedAttribute::Gender) spec.gender = parse_token<Gender>(fixed_value, "gender");
  else spec.gender = pick(rng, kGenders);

  if (fixed == FixedAttribute::Age) spec.age_group = parse_token<AgeGroup>(fixed_value, "age group");
  else spec.age_group = pick(rng, kAgeGroups);
  spec.age_years = pick_year(rng, spec.age_group);

  if (fixed == FixedAttribute::Occupation) spec.sector = parse_token<Sector>(fixed_value, "sector");
  else spec.sector = pick(rng, kSectors);
  spec.occupation_title = pick_title(rng, spec.sector);

  spec.trait = pick(rng, kTraits);
  return spec;
}

std::vector<PersonaSpec> plan_specs(const SamplingPlan& plan) {
  plan.validate();
  Rng rng(plan.seed);
  std::vector<PersonaSpec> specs;
  specs.reserve(plan.values.size() * static_cast<std::size_t>(plan.personas_per_condition));
  for (const auto& value : plan.values) {
    for (int k = 0; k < plan.personas_per_condition; ++k) {
      specs.push_back(sample_spec(plan.fixed_attribute, value, rng));
    }
  }
  return specs;
}

std::string render_persona_prompt(const PersonaSpec& spec) {
  std::map<std::string, std::string> values{
      {"gender", std::string(to_token(spec.gender))},
      {"age", std::to_string(spec.age_years) + " years old (" +
                  std::string(to_token(spec.age_group)) + ")"},
      {"occupation", spec.occupation_title},
      {"personality", std::string(trait_full_name(spec.trait)) + " (" +
                          std::string(1, static_cast<char>(std::toupper(to_token(spec.trait)[0]))) +
                          ")"},
  };
  return detail::substitute(prompts::kPersonaGeneration, values);
}

Json extract_json_object(std::string_view text) {
  if (detail::trim(text).empty()) throw Error(ErrorCode::kNoJsonFound, "empty text");
  const std::string cleaned = strip_fences(text);
  const std::string_view s(cleaned);
  bool saw_brace = false;
  for (std::size_t open = s.find('{'); open != std::string_view::npos;
       open = s.find('{', open + 1)) {
    saw_brace = true;
    auto close = matching_brace(s, open);
    if (close == std::string_view::npos) continue;
    Json j = Json::parse(s.substr(open, close - open), nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  if (!saw_brace) throw Error(ErrorCode::kNoJsonFound, "no JSON object in model output");
  throw Error(ErrorCode::kMalformedJson, "model output contains no well-formed JSON object");
}

std::optional<std::string> extract_persona_name(std::string_view persona_text) {
  static const std::regex kName(R"(You(?:'|’)re\s+([A-Z][A-Za-z'.\-]*(?:\s+[A-Z][A-Za-z'.\-]*)*))");
  std::cmatch m;
  if (!std::regex_search(persona_text.data(), persona_text.data() + persona_text.size(), m, kName)) {
    return std::nullopt;
  }
  return m[1].str();
}

Persona generate_persona(const PersonaSpec& spec, ChatBackend& backend,
                         const PersonaGenOptions& options, std::string id, std::uint64_t seed) {
  if (options.retries < 0) throw Error(ErrorCode::kInvalidArgument, "retries must be >= 0");
  spec.validate();
  const std::vector<ChatMessage> messages{{Role::User, render_persona_prompt(spec)}};
  std::string last_problem;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    ChatParams params = options.params;
    params.seed = derive_seed(seed, {static_cast<std::uint64_t>(attempt)});
    std::string reply = backend.chat(messages, params);
    try {
      Json obj = extract_json_object(reply);
      auto it = obj.find("persona");
      if (it == obj.end() || !it->is_string() || detail::trim(it->get<std::string>()).empty()) {
        last_problem = "JSON object has no non-empty \"persona\" string";
      } else {
        Persona p;
        p.id = std::move(id);
        p.spec = spec;
        p.text = std::string(detail::trim(it->get<std::string>()));
        p.name = extract_persona_name(p.text);
        return p;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoJsonFound && e.code() != ErrorCode::kMalformedJson) throw;
      last_problem = e.what();
    }
    logger()->debug("persona {} attempt {} rejected: {}", id, attempt + 1, last_problem);
  }
  throw Error(ErrorCode::kPersonaGenerationFailed,
              "persona " + id + " failed after " + std::to_string(options.retries + 1) +
                  " attempts: " + last_problem);
}

std::vector<Persona> generate_personas(const SamplingPlan& plan, ChatBackend& backend,
                                       const PersonaGenOptions& options) {
  const auto specs = plan_specs(plan);
  const auto per = static_cast<std::size_t>(plan.personas_per_condition);
  const std::size_t width = std::max<std::size_t>(2, std::to_string(per).size());

  std::vector<std::string> ids(specs.size());
  std::vector<std::uint64_t> seeds(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ids[i] = std::string(to_token(plan.fixed_attribute)) + "-" + plan.values[i / per] + "-" +
             zero_pad(i % per + 1, width);
    seeds[i] = derive_seed(plan.seed, {0x7065u, i});
  }

  std::vector<std::optional<Persona>> results(specs.size());
  std::optional<Error> first_error;
  std::mutex error_mu;
  std::atomic<bool> stop{false};
  detail::parallel_for(
      specs.size(), options.parallel,
      [&](std::size_t i) {
        try {
          results[i] = generate_persona(specs[i], backend, options, ids[i], seeds[i]);
        } catch (const Error& e) {
          std::lock_guard lock(error_mu);
          if (!first_error) first_error = e;
          stop = true;
        }
      },
      &stop);
  if (first_error) throw *first_error;

  // Sequential pass so duplicate handling does not depend on thread timing.
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, std::string> names;
  std::vector<Persona> out;
  out.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Persona p = std::move(*results[i]);
    auto key = [](const Persona& x) { return std::make_pair(Json(x.spec).dump(), x.text); };
    for (int round = 1; seen.count(key(p)); ++round) {
      if (round > options.retries) {
        throw Error(ErrorCode::kPersonaGenerationFailed,
                    "persona " + p.id + " duplicates an earlier persona after " +
                        std::to_string(options.retries) + " re-queries");
      }
      p = generate_persona(specs[i], backend, options, ids[i],
                           derive_seed(seeds[i], {0xd0bu + static_cast<std::uint64_t>(round)}));
    }
    seen.insert(key(p));
    if (p.name) {
      auto [it, inserted] = names.emplace(*p.name, p.id);
      if (!inserted) logger()->warn("persona {} reuses the name '{}' from {}", p.id, *p.name, it->second);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace psim
