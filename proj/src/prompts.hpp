#pragma once

#include <string_view>

// Prompt templates. Placeholders are written as {name}.
namespace psim::prompts {

// {gender} {age} {occupation} {personality}
extern const std::string_view kPersonaGeneration;
// Appended after the persona text in the user model's system message.
extern const std::string_view kUserSimulator;
// {history} {thought}
extern const std::string_view kResponderPlain;
// {history} {intents} {rationale} {thought}
extern const std::string_view kResponderStrategy;
// {intents}
extern const std::string_view kPlannerThought;
extern const std::string_view kPlannerMonolithic;

}  // namespace psim::prompts
