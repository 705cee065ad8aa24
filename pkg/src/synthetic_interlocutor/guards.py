"""Rule checks for interlocutor responses.

Four rules, each backed by an editable phrase lexicon
(``guards/lexicon.json``), catch the documented failure registers:

* R1_genre — job-interview framing ("your application", "the hiring").
* R2_continuation — the response's final sentence says farewell even
  though the interviewer did not.
* R3_no_prior_meeting — the very first exchange refers to an earlier
  conversation.
* R4_no_ascription — the response attributes a statement to the
  interviewer ("as you've mentioned ...") that no interviewer turn
  actually contains.

Checks are pure functions of (response, history, lexicon): same inputs,
same verdicts. Patterns are case-insensitive literals; a ``*`` inside a
pattern matches a short word run so contraction variants can share one
entry. Curly apostrophes are folded to straight ones before matching.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import InvalidConfig
from .sessions import ChatTurn, GuardVerdict

RULES = ("R1_genre", "R2_continuation", "R3_no_prior_meeting", "R4_no_ascription")
RULE_BY_SHORT = {rule.split("_")[0]: rule for rule in RULES}  # R1 -> R1_genre, ...

# Regeneration instructions appended to the system text, one per rule.
CORRECTIVE_SUFFIXES = {
    "R1_genre": (
        "Remember: this is an ethnographic research interview, not a job "
        "interview. Do not speak as a job applicant or an employer."
    ),
    "R2_continuation": (
        "Continue the conversation; do not conclude it or say farewell."
    ),
    "R3_no_prior_meeting": (
        "This is your first conversation with the interviewer. Do not refer "
        "to any earlier meeting or conversation."
    ),
    "R4_no_ascription": (
        "Do not attribute statements, experiences, or opinions to the "
        "interviewer unless the interviewer actually expressed them in this "
        "conversation."
    ),
}

_SENTENCE_BREAK_RE = re.compile(r"[.!?]+\s+")
_CLAUSE_END_RE = re.compile(r"[.!?;\n]")
_CONTENT_WORD_RE = re.compile(r"\w{5,}")


def _fold(text: str) -> str:
    return text.replace("’", "'").replace("‘", "'").lower()


def _compile(pattern: str) -> re.Pattern:
    # `*` bridges contraction variants ("you've" / "you have" / "youve"),
    # so it may cover a short run of word chars, apostrophes, or spaces.
    parts = [re.escape(p) for p in _fold(pattern).split("*")]
    return re.compile(r"[\w' ]{0,8}".join(parts))


@dataclass
class GuardLexicon:
    patterns: dict[str, list[str]]
    _compiled: dict[str, list[re.Pattern]] = field(default_factory=dict)

    def __post_init__(self):
        for short, rule in RULE_BY_SHORT.items():
            pats = self.patterns.get(short) or self.patterns.get(rule) or []
            if not pats:
                raise InvalidConfig(f"lexicon has no patterns for {rule}")
            self._compiled[rule] = [_compile(p) for p in pats]

    def find(self, rule: str, text: str) -> re.Match | None:
        """First match of any of the rule's patterns in folded text."""
        best: re.Match | None = None
        folded = _fold(text)
        for pat in self._compiled[rule]:
            m = pat.search(folded)
            if m and (best is None or m.start() < best.start()):
                best = m
        return best

    def matches(self, rule: str, text: str) -> bool:
        return self.find(rule, text) is not None


def load_default_lexicon() -> GuardLexicon:
    raw = (
        resources.files("synthetic_interlocutor")
        .joinpath("resources/guards/lexicon.json")
        .read_text(encoding="utf-8")
    )
    return GuardLexicon(patterns=json.loads(raw))


def load_lexicon_file(path: str | Path) -> GuardLexicon:
    return GuardLexicon(
        patterns=json.loads(Path(path).read_text(encoding="utf-8"))
    )


def _final_sentence_start(text: str) -> int:
    s = text.rstrip()
    last = 0
    for m in _SENTENCE_BREAK_RE.finditer(s):
        last = m.end()
    return last


def _clause_after(text: str, start: int) -> str:
    m = _CLAUSE_END_RE.search(text, start)
    return text[start : m.start() if m else len(text)]


def _content_words(text: str) -> set[str]:
    return set(_CONTENT_WORD_RE.findall(_fold(text)))


def _verdict(
    rule: str, match: re.Match | None, response: str, offset: int = 0
) -> GuardVerdict:
    if match is None:
        return GuardVerdict(rule=rule, triggered=False)
    # Folding is 1:1 on characters, so folded-match spans index the original.
    start, end = match.start() + offset, match.end() + offset
    return GuardVerdict(
        rule=rule,
        triggered=True,
        evidence_text=response[start:end],
        evidence_span=(start, end),
    )


def check_guards(
    response: str,
    turns: list[ChatTurn],
    lexicon: GuardLexicon,
    enabled: set[str] | None = None,
) -> list[GuardVerdict]:
    """Evaluate all enabled rules against a candidate response.

    `turns` is the conversation up to and including the interviewer question
    the response answers.
    """
    enabled = set(RULES) if enabled is None else enabled
    interviewer_turns = [t for t in turns if t.role == "interviewer"]
    verdicts: list[GuardVerdict] = []

    if "R1_genre" in enabled:
        verdicts.append(
            _verdict("R1_genre", lexicon.find("R1_genre", response), response)
        )

    if "R2_continuation" in enabled:
        final_start = _final_sentence_start(response)
        m = lexicon.find("R2_continuation", response[final_start:])
        if m is not None and interviewer_turns:
            if lexicon.matches("R2_continuation", interviewer_turns[-1].text):
                m = None  # the interviewer said farewell first
        verdicts.append(_verdict("R2_continuation", m, response, offset=final_start))

    if "R3_no_prior_meeting" in enabled:
        m = None
        if len(interviewer_turns) == 1:
            m = lexicon.find("R3_no_prior_meeting", response)
        verdicts.append(_verdict("R3_no_prior_meeting", m, response))

    if "R4_no_ascription" in enabled:
        m = lexicon.find("R4_no_ascription", response)
        if m is not None:
            clause_words = _content_words(_clause_after(response, m.end()))
            for turn in interviewer_turns:
                if clause_words & _content_words(turn.text):
                    m = None  # the interviewer really said something like that
                    break
        verdicts.append(_verdict("R4_no_ascription", m, response))

    return verdicts
