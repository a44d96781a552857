#!/usr/bin/env python3
"""Regenerate tutorials/fixtures.json from the bundled solution states.

Fixture entries are keyed by theory hash, so they must be rebuilt whenever a
tutorial, a solution state or the rule alias preamble changes:

    python3 tools/make_fixtures.py build/tools/pbctl
"""

import json
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
TUTORIAL = ROOT / "tutorials" / "conjunction.toml"
SOLUTIONS = ROOT / "tutorials" / "solutions"


def assemble(pbctl, state, *extra):
    out = subprocess.run([pbctl, "tutorial", "assemble", str(TUTORIAL), "--state", str(state), *extra],
                         check=True, capture_output=True)
    return out.stdout


def span_of(text, needle, after=0):
    """Byte span of the first occurrence of needle at or after byte offset after."""
    at = text.find(needle.encode(), after)
    if at < 0:
        sys.exit(f"fixture anchor not found: {needle!r}")
    return at, at + len(needle.encode())


def correct_entry(pbctl):
    state = SOLUTIONS / "conjunction.correct.json"
    text = assemble(pbctl, state)
    comm = span_of(text, "lemma conj_comm")[0]
    after_impi = span_of(text, "proof (rule impI)", comm)[1]
    after_ande = span_of(text, "proof (rule andE)", comm)[1]
    right = span_of(text, "lemma conj_right")[0]
    after_minus = span_of(text, "proof -", right)[1]
    return {
        "hash": assemble(pbctl, state, "--hash").decode().strip(),
        "status": "ok",
        "messages": [],
        "states": [
            {"pos": after_minus, "subgoals": 1,
             "text": "proof (state)\ngoal (1 subgoal):\n 1. A ∧ B ⟹ B"},
            {"pos": after_impi, "subgoals": 1,
             "text": "proof (state)\ngoal (1 subgoal):\n 1. A ∧ B ⟹ B ∧ A"},
            {"pos": after_ande, "subgoals": 1,
             "text": "proof (state)\nthis:\n  A ∧ B\ngoal (1 subgoal):\n 1. A ⟹ B ⟹ B ∧ A"},
        ],
    }


def broken_entry(pbctl):
    state = SOLUTIONS / "conjunction.broken.json"
    text = assemble(pbctl, state)
    lemma = span_of(text, "lemma conj_self")[0]
    start, _ = span_of(text, "by (rule impI)", lemma)
    return {
        "hash": assemble(pbctl, state, "--hash").decode().strip(),
        "status": "failed",
        "messages": [
            {"kind": "error", "start": start, "end": start + 2,
             "text": "Failed to apply initial proof method:\ngoal (1 subgoal):\n 1. A ⟹ A ∧ A"},
        ],
        "states": [],
    }


def main():
    if len(sys.argv) != 2:
        sys.exit("usage: make_fixtures.py PATH_TO_PBCTL")
    pbctl = sys.argv[1]
    doc = {"fallback": "structural", "fixtures": [correct_entry(pbctl), broken_entry(pbctl)]}
    out = ROOT / "tutorials" / "fixtures.json"
    out.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
