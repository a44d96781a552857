#pragma once

#include <string>
#include <string_view>

#include "syntax/span.hpp"

namespace pb::syntax {

enum class Severity { error, warning, info };
enum class Layer { outer_syntax, restriction, prover };

std::string_view to_string(Severity severity) noexcept;
std::string_view to_string(Layer layer) noexcept;
Severity severity_from_string(std::string_view name);

struct Diagnostic {
  Severity severity = Severity::error;
  SourceSpan span;
  std::string code;
  std::string message;
  Layer layer = Layer::outer_syntax;
  // Set when the analyzed document is one block of a tutorial.
  std::string block_id;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

}  // namespace pb::syntax
