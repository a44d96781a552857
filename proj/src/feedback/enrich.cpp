#include "feedback/enrich.hpp"

#include "syntax/lexer.hpp"
#include "syntax/outline.hpp"

namespace pb::feedback {
namespace {

std::string command_at(const std::vector<syntax::CommandOutline>& commands,
                       std::size_t offset) {
  std::string name;
  for (const syntax::CommandOutline& c : commands) {
    if (c.span.start > offset) break;
    name = c.name;
  }
  return name;
}

}  // namespace

std::string hidden_origin_notice(std::string_view locale) {
  if (locale == "de") {
    return "Eine interne Definition ist fehlgeschlagen. Bitte wende dich an "
           "die Lehrkraft.";
  }
  return "An internal definition failed. Please contact the teacher.";
}

syntax::Severity to_severity(prover::MessageSeverity severity) noexcept {
  switch (severity) {
    case prover::MessageSeverity::error: return syntax::Severity::error;
    case prover::MessageSeverity::warning: return syntax::Severity::warning;
    case prover::MessageSeverity::information: return syntax::Severity::info;
  }
  return syntax::Severity::error;
}

std::vector<FeedbackItem> enrich(const prover::ProverResult& result,
                                 const tutorial::AssembledTheory& assembled,
                                 const HintCatalog& catalog,
                                 std::string_view locale) {
  std::vector<FeedbackItem> items;
  if (result.messages.empty()) return items;
  auto tokens = syntax::tokenize(assembled.text);
  auto commands = syntax::outline(tokens).commands;
  for (const prover::ProverMessage& m : result.messages) {
    FeedbackItem item;
    item.severity = to_severity(m.severity);
    item.kind = syntax::Layer::prover;
    item.text = m.text;
    tutorial::MappedSpan mapped = tutorial::map_span(assembled, m.span);
    if (mapped.hidden) {
      item.tutorial_level = true;
      item.notice = hidden_origin_notice(locale);
    } else {
      item.block_id = mapped.block_id;
      item.span = mapped.local;
      item.multi_segment = mapped.multi_segment;
    }
    if (const HintRule* rule = catalog.select(m, command_at(commands, m.span.start))) {
      item.hints = rule->hints_for(locale);
    }
    items.push_back(std::move(item));
  }
  return items;
}

FeedbackItem from_diagnostic(const syntax::Diagnostic& diagnostic,
                             const HintCatalog& catalog,
                             std::string_view locale) {
  FeedbackItem item;
  item.severity = diagnostic.severity;
  item.kind = diagnostic.layer;
  item.code = diagnostic.code;
  item.block_id = diagnostic.block_id;
  item.tutorial_level = diagnostic.block_id.empty();
  item.span = diagnostic.span;
  item.text = diagnostic.message;
  prover::ProverMessage probe{diagnostic.severity == syntax::Severity::error
                                  ? prover::MessageSeverity::error
                                  : prover::MessageSeverity::warning,
                              diagnostic.span, diagnostic.code + ": " + diagnostic.message};
  if (const HintRule* rule = catalog.select(probe, {})) {
    item.hints = rule->hints_for(locale);
  }
  return item;
}

}  // namespace pb::feedback
