#pragma once

#include <string>
#include <string_view>

#include "psim/domain.hpp"

namespace psim {

/// Maps raw planner output onto one of the four strategy templates.
///
/// The terminal sentence is tried first as a whole-sentence match; if it does
/// not match, every sentence is searched for an embedded template, latest
/// first. Matching ignores case, extra whitespace and trailing punctuation.
/// Never throws: text that matches nothing comes back as Unrecognized.
Thought parse_thought(std::string_view raw, const IntentCatalog& catalog);

/// Renders the canonical template for a thought. Throws Error(kInvalidArgument)
/// for Unrecognized.
std::string format_thought(const Thought& thought);

/// Alias-resolved, trimmed intent name. Names outside the catalog pass
/// through with in_catalog = false. Throws on blank input.
IntentMatch canonicalize_intent(std::string_view raw, const IntentCatalog& catalog);

}  // namespace psim
