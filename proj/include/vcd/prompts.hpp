#pragma once

#include <map>
#include <string>
#include <string_view>

#include "vcd/state.hpp"

namespace vcd {

struct Prompt {
  std::string system_text;
  std::string user_text;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

// Prompt templates, verbatim. Placeholders: {explored regions},
// {causal pairs}, {entity pairs}.
extern const std::string_view kRegionSelectionTemplate;
extern const std::string_view kEntityRecognitionTemplate;
extern const std::string_view kCausalityOrientationTemplate;
extern const std::string_view kEndToEndTemplate;

/// Substitutes every known placeholder present in `tmpl`. Throws
/// TemplateFieldMissing when one of them has no value.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& fields);

/// Prompt for `action` in `state`. Causality orientation requires the
/// candidates of a preceding entity-recognition step.
Prompt render_prompt(Action action, const ReasoningState& state);

Prompt end_to_end_prompt();

}  // namespace vcd
