#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "feedback/hints.hpp"
#include "prover/result.hpp"
#include "syntax/diagnostic.hpp"
#include "tutorial/tutorial.hpp"

namespace pb::feedback {

struct FeedbackItem {
  syntax::Severity severity = syntax::Severity::error;
  syntax::Layer kind = syntax::Layer::prover;
  std::string code;  // machine code for syntax layers, empty for prover output
  // Origin: a block-local span, or tutorial level when `tutorial_level`.
  bool tutorial_level = false;
  std::string block_id;
  syntax::SourceSpan span;
  bool multi_segment = false;
  std::string text;  // verbatim source text (prover output or diagnostic)
  std::vector<std::string> hints;
  std::string notice;  // set for tutorial-level prover items

  friend bool operator==(const FeedbackItem&, const FeedbackItem&) = default;
};

// Notice shown when feedback points into hidden tutorial content.
std::string hidden_origin_notice(std::string_view locale);

syntax::Severity to_severity(prover::MessageSeverity severity) noexcept;

// One item per prover message, in message order. Hints come from the first
// matching catalog rule; the command filter sees the command whose outline
// contains the message start.
std::vector<FeedbackItem> enrich(const prover::ProverResult& result,
                                 const tutorial::AssembledTheory& assembled,
                                 const HintCatalog& catalog,
                                 std::string_view locale = "en");

// Block-scoped diagnostics (outline, restriction) as feedback items; the
// hint catalog is consulted with the diagnostic message.
FeedbackItem from_diagnostic(const syntax::Diagnostic& diagnostic,
                             const HintCatalog& catalog,
                             std::string_view locale = "en");

}  // namespace pb::feedback
