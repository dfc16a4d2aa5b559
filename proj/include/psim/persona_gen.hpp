#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psim/backends.hpp"
#include "psim/domain.hpp"
#include "psim/rng.hpp"

namespace psim {

// Partial random sampling: one attribute is held at each listed value while
// the other three are drawn uniformly.
struct SamplingPlan {
  FixedAttribute fixed_attribute = FixedAttribute::Gender;
  std::vector<std::string> values;
  int personas_per_condition = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(Json& j, const SamplingPlan& v);
void from_json(const Json& j, SamplingPlan& v);

/// Draws one spec with `fixed` pinned to `fixed_value`. Age is a uniform group
/// then a uniform year in that group; occupation a uniform sector then a
/// uniform title; trait uniform over the eight poles.
PersonaSpec sample_spec(FixedAttribute fixed, std::string_view fixed_value, Rng& rng);

/// The full spec sequence for a plan, condition by condition. Deterministic
/// in (plan, seed).
std::vector<PersonaSpec> plan_specs(const SamplingPlan& plan);

/// The persona-generation prompt with gender, age, occupation and personality
/// filled in.
std::string render_persona_prompt(const PersonaSpec& spec);

/// First well-formed top-level JSON object in `text`, after dropping code
/// fences. Throws Error(kNoJsonFound) when there is no '{' at all and
/// Error(kMalformedJson) when no candidate parses.
Json extract_json_object(std::string_view text);

/// "Emily Thompson" from "You're Emily Thompson, a 28-year-old ...".
std::optional<std::string> extract_persona_name(std::string_view persona_text);

struct PersonaGenOptions {
  ChatParams params{.model = "", .temperature = 1.0, .max_tokens = 512, .stop = {}, .seed = std::nullopt};
  int retries = 3;
  int parallel = 4;
};

/// Queries the backend until it yields a JSON object with a non-empty
/// "persona" string, re-asking up to `retries` extra times. Backend errors
/// propagate; exhausting the retries throws Error(kPersonaGenerationFailed).
Persona generate_persona(const PersonaSpec& spec, ChatBackend& backend,
                         const PersonaGenOptions& options, std::string id, std::uint64_t seed);

/// Generates personas_per_condition personas for every plan value. Backend
/// calls run concurrently; a sequential pass then re-queries any duplicate
/// (spec, text) pair within the retry budget.
std::vector<Persona> generate_personas(const SamplingPlan& plan, ChatBackend& backend,
                                       const PersonaGenOptions& options);

}  // namespace psim
