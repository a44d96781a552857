#!/usr/bin/env python3
"""Independent outer-syntax lexer used to freeze the golden token streams.

It is written from the token-class table in docs/design-notes.md with
regular expressions, sharing no code with the C++ lexer. Only the keyword
lists are copied, since they are data. Usage:

    python3 tests/tools/reference_lexer.py tests/data/golden

writes <name>.tokens next to every <name>.thy. Each line holds kind, byte
start, byte end and the JSON-encoded token text, separated by tabs.
"""

import json
import pathlib
import re
import sys

COMMANDS = set("""
. .. abbreviation also apply apply_end assume axiomatization back by case
chapter class consider consts context corollary datatype declare defer define
definition done end finally find_theorems fix from fun function have hence
inductive instance instantiation interpret lemma lemmas let locale moreover
next note notepad notation obtain oops paragraph prefer presume primrec
print_state proof proposition qed record schematic_goal section show sorry
subgoal subsection subsubsection supply term termination text then theorem
theory thm thus txt type_synonym typedecl ultimately unfolding using value
with
""".split())

MINOR = set("""
and assumes begin binder defines fixes for if imports in includes infix
infixl infixr is keywords monos morphisms notes obtains open otherwise
overloaded rewrites shows structure when where
""".split())

GREEK_NAMES = ("alpha beta gamma delta epsilon zeta eta theta iota kappa mu nu "
               "xi pi rho sigma tau upsilon phi chi psi omega Gamma").split()
GREEK = "[Α-ΡΣ-Ωα-κμ-ω]"  # the Greek letters without λ and U+03A2
LETTER_ESC = r"\\<(?:[A-Za-z]{1,2}|" + "|".join(GREEK_NAMES) + ")>"
LETTER = f"(?:[A-Za-z]|{GREEK}|{LETTER_ESC})"
QUASI = f"(?:{LETTER}|[0-9_'])"
IDENT = f"{LETTER}{QUASI}*"
SYM = r"[!#$%&*+\-/<=>?@^_|~]"

RULES = [
    ("whitespace", re.compile(r"[ \t\n\r\f\v]+")),
    ("variable", re.compile(rf"\?{IDENT}(?:\.[0-9]+)?|\?'{IDENT}")),
    ("type_variable", re.compile(rf"'{IDENT}")),
    ("name", re.compile(rf"{IDENT}(?:\.{IDENT})*")),
    ("natural_number", re.compile(r"[0-9]+(?:\.[0-9]+)?")),
    ("symbol_identifier", re.compile(r"\\<\^?[A-Za-z0-9_']+>")),
    ("symbol_identifier", re.compile(f"{SYM}+")),
    ("command", re.compile(r"\.\.?")),
    ("punctuation", re.compile(r"[()\[\]{},:;`'\\]")),
]


def nested(text, i, opens, closes):
    """End index of a nested region starting at i, or None if unterminated."""
    depth = 0
    while i < len(text):
        o = next((s for s in opens if text.startswith(s, i)), None)
        if o:
            depth += 1
            i += len(o)
            continue
        c = next((s for s in closes if text.startswith(s, i)), None)
        if c:
            depth -= 1
            i += len(c)
            if depth == 0:
                return i
            continue
        i += 1
    return None


def lex(text):
    out = []
    i = 0
    while i < len(text):
        kind = None
        end = None
        if text.startswith("(*", i):
            end = nested(text, i, ["(*"], ["*)"])
            kind = "comment" if end else "unknown"
        elif text[i] == '"':
            m = re.compile(r'"(?:\\["\\]|[^"\\]|\\(?!["\\]))*"').match(text, i)
            end = m.end() if m else None
            kind = "quoted_string" if m else "unknown"
        elif text[i] == "‹" or text.startswith("\\<open>", i):
            end = nested(text, i, ["‹", "\\<open>"], ["›", "\\<close>"])
            kind = "cartouche" if end else "unknown"
        if kind is not None:
            end = end or len(text)
        else:
            for name, rx in RULES:
                m = rx.match(text, i)
                if m:
                    kind, end = name, m.end()
                    if name == "name":
                        word = m.group(0)
                        if "." in word:
                            kind = "long_identifier"
                        elif word in COMMANDS:
                            kind = "command"
                        elif word in MINOR:
                            kind = "keyword"
                        else:
                            kind = "identifier"
                    break
            if kind is None:
                if ord(text[i]) >= 0x80 and text[i] != "›":
                    kind, end = "symbol_identifier", i + 1
                else:
                    kind, end = "unknown", i + 1
        out.append((kind, i, end))
        i = end
    return out


def byte_offsets(text):
    offsets = [0]
    for ch in text:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    return offsets


def main():
    folder = pathlib.Path(sys.argv[1])
    for thy in sorted(folder.glob("*.thy")):
        text = thy.read_text(encoding="utf-8")
        b = byte_offsets(text)
        lines = [f"{k.replace('_', '-')}\t{b[s]}\t{b[e]}\t{json.dumps(text[s:e], ensure_ascii=False)}"
                 for k, s, e in lex(text)]
        thy.with_suffix(".tokens").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"{thy.name}: {len(lines)} tokens")


if __name__ == "__main__":
    main()
