#include <algorithm>
#include <array>
#include <cstdio>

#include "prover/mock.hpp"
#include "syntax/lexer.hpp"
#include "syntax/outline.hpp"
#include "syntax/restrictions.hpp"

namespace pb::prover {
namespace {

constexpr std::array<std::string_view, 11> kGoalCommands = {
    "consider", "corollary", "have", "hence", "lemma", "obtain",
    "proposition", "schematic_goal", "show", "theorem", "thus"};
constexpr std::array<std::string_view, 6> kTerminalCommands = {
    ".", "..", "by", "done", "oops", "sorry"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& set, std::string_view s) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

struct Open {
  bool is_proof;
  SourceSpan span;
};

std::string state_text(std::size_t open) {
  if (open == 0) return "No subgoals!";
  return "proof (prove)\ngoal (" + std::to_string(open) +
         (open == 1 ? " subgoal)" : " subgoals)");
}

}  // namespace

const std::vector<std::string_view>& automated_methods() {
  static const std::vector<std::string_view> methods{
      "arith", "auto",  "blast",      "fast",  "fastforce", "force",
      "linarith", "meson", "metis", "presburger", "simp", "sledgehammer",
      "smt"};
  return methods;
}

std::string theory_hash(std::string_view theory) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : theory) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

ProverResult structural_check(std::string_view theory) {
  ProverResult result;
  auto error = [&](SourceSpan span, std::string text) {
    result.messages.push_back({MessageSeverity::error, span, std::move(text)});
  };

  auto tokens = syntax::tokenize(theory);
  auto outlined = syntax::outline(tokens);
  for (const auto& d : outlined.diagnostics) {
    error(d.span, "Outer syntax error: " + d.message);
  }

  const auto& cmds = outlined.commands;
  if (cmds.empty() || cmds.front().name != "theory") {
    error(cmds.empty() ? SourceSpan{0, 0} : cmds.front().command.span,
          "Bad theory header: expected 'theory <name> imports ... begin'");
  }

  std::vector<Open> stack;
  bool ended = false;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    const syntax::CommandOutline& c = cmds[i];
    const SourceSpan& at = c.command.span;
    bool in_proof_before = !stack.empty();
    if (ended) {
      error(at, "Command after 'end' of theory");
      continue;
    }
    if (c.name == "theory" && i != 0) {
      error(at, "'theory' must be the first command");
    } else if (one_of(kGoalCommands, c.name)) {
      stack.push_back({false, at});
    } else if (c.name == "proof") {
      if (!stack.empty() && !stack.back().is_proof) {
        stack.back() = {true, at};
      } else {
        error(at, "'proof' without a pending goal");
      }
    } else if (c.name == "qed") {
      if (!stack.empty() && stack.back().is_proof) {
        stack.pop_back();
      } else {
        error(at, "'qed' without a matching 'proof'");
      }
    } else if (one_of(kTerminalCommands, c.name)) {
      if (!stack.empty() && !stack.back().is_proof) {
        stack.pop_back();
      } else {
        error(at, "'" + c.name + "' without a pending goal");
      }
      if (c.name == "sorry" || c.name == "oops") {
        result.messages.push_back(
            {MessageSeverity::warning, at, "Proof skipped with '" + c.name + "'"});
      }
    } else if (c.name == "apply") {
      if (stack.empty() || stack.back().is_proof) {
        error(at, "'apply' without a pending goal");
      }
    } else if (c.name == "end") {
      for (const Open& open : stack) {
        error(open.span, open.is_proof ? "Unfinished proof: missing 'qed'"
                                       : "Unfinished goal: missing proof");
      }
      stack.clear();
      ended = true;
    }

    for (const auto& occ : syntax::name_occurrences(c)) {
      if (occ.role != syntax::NameRole::method) continue;
      const auto& autos = automated_methods();
      if (std::find(autos.begin(), autos.end(), occ.token.text) != autos.end()) {
        error(occ.token.span,
              "Failed to apply initial proof method: automated method '" +
                  occ.token.text + "' is disabled on this server");
      }
    }

    if (in_proof_before || !stack.empty()) {
      result.states.push_back(
          {c.span.end, state_text(stack.size()), static_cast<int>(stack.size())});
    }
  }
  if (!ended) {
    for (const Open& open : stack) {
      error(open.span, open.is_proof ? "Unfinished proof: missing 'qed'"
                                     : "Unfinished goal: missing proof");
    }
    error(SourceSpan{theory.size(), theory.size()},
          "Unexpected end of theory: missing 'end'");
  }

  std::stable_sort(result.messages.begin(), result.messages.end(),
                   [](const ProverMessage& a, const ProverMessage& b) {
                     return a.span.start < b.span.start;
                   });
  result.status = result.error_count() == 0 ? ResultStatus::finished_ok
                                            : ResultStatus::finished_failed;
  return result;
}

}  // namespace pb::prover
