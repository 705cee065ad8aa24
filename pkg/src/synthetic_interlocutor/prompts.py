"""Prompt templates and per-turn rendering.

The default template ships as a versioned resource (``prompts/si_v1.txt``)
holding the raw instruction block with ``{question}`` and ``{context}``
slots. Slots are located once at load time and filled positionally, so
slot-like text inside a question or context is inserted verbatim and never
re-expanded.

Raw mode reproduces the block byte-for-byte (plus a trailing ``[/INST]``)
for servers exposing plain completion endpoints. Chat mode emits a
system+user message pair instead, because chat endpoints apply their own
conversation template and double-wrapping corrupts the prompt.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import EmptyQuestion, MissingSlot

DEFAULT_TEMPLATE_ID = "si_v1"

_SYS_OPEN = "<<SYS>> "
_SYS_CLOSE = " <</SYS>>"
_Q_SLOT = "{question}"
_C_SLOT = "{context}"

RENDER_MODES = ("raw_inst", "chat_messages")


@dataclass
class PromptBundle:
    question: str
    context: str
    rendered_raw: str | None = None
    rendered_messages: list[tuple[str, str]] | None = None


@dataclass
class PromptTemplate:
    template_id: str
    raw_template: str
    system_text: str
    render_mode: str = "chat_messages"
    # (prefix, mid, suffix) around the two slots, question slot first or not
    _segments: tuple[str, str, str] = ("", "", "")
    _question_first: bool = True

    @classmethod
    def from_raw(
        cls,
        raw_template: str,
        render_mode: str = "chat_messages",
        template_id: str = DEFAULT_TEMPLATE_ID,
    ) -> "PromptTemplate":
        if render_mode not in RENDER_MODES:
            raise MissingSlot(f"unknown render mode {render_mode!r}")
        q_idx = raw_template.find(_Q_SLOT)
        c_idx = raw_template.find(_C_SLOT)
        if q_idx < 0:
            raise MissingSlot("template lacks a {question} slot")
        if c_idx < 0:
            raise MissingSlot("template lacks a {context} slot")
        sys_start = raw_template.find(_SYS_OPEN)
        sys_end = raw_template.find(_SYS_CLOSE)
        if sys_start < 0 or sys_end < 0 or sys_end <= sys_start:
            raise MissingSlot("template lacks <<SYS>> ... <</SYS>> markers")
        system_text = raw_template[sys_start + len(_SYS_OPEN) : sys_end]

        question_first = q_idx < c_idx
        first_idx, first_slot = (
            (q_idx, _Q_SLOT) if question_first else (c_idx, _C_SLOT)
        )
        second_idx, second_slot = (
            (c_idx, _C_SLOT) if question_first else (q_idx, _Q_SLOT)
        )
        segments = (
            raw_template[:first_idx],
            raw_template[first_idx + len(first_slot) : second_idx],
            raw_template[second_idx + len(second_slot) :],
        )
        return cls(
            template_id=template_id,
            raw_template=raw_template,
            system_text=system_text,
            render_mode=render_mode,
            _segments=segments,
            _question_first=question_first,
        )

    def with_system_suffix(self, suffix: str) -> "PromptTemplate":
        """Variant with extra system instructions; the original is unchanged."""
        if not suffix:
            return self
        patched = self.raw_template.replace(
            _SYS_CLOSE, " " + suffix + _SYS_CLOSE, 1
        )
        return PromptTemplate.from_raw(
            patched, render_mode=self.render_mode, template_id=self.template_id
        )


def load_default_template(render_mode: str = "chat_messages") -> PromptTemplate:
    raw = (
        resources.files("synthetic_interlocutor")
        .joinpath("resources/prompts/si_v1.txt")
        .read_text(encoding="utf-8")
    )
    return PromptTemplate.from_raw(
        _strip_one_newline(raw), render_mode=render_mode, template_id=DEFAULT_TEMPLATE_ID
    )


def load_template_file(
    path: str | Path, render_mode: str = "chat_messages"
) -> PromptTemplate:
    path = Path(path)
    return PromptTemplate.from_raw(
        _strip_one_newline(path.read_text(encoding="utf-8")),
        render_mode=render_mode,
        template_id=path.stem,
    )


def _strip_one_newline(text: str) -> str:
    # Editors append a final newline; the template ends at "Answer:".
    return text[:-1] if text.endswith("\n") else text


def render(template: PromptTemplate, question: str, context: str) -> PromptBundle:
    """Fill the slots verbatim; no escaping, no trimming."""
    if not question:
        raise EmptyQuestion("question must be non-empty")
    if template.render_mode == "raw_inst":
        pre, mid, post = template._segments
        first, second = (
            (question, context) if template._question_first else (context, question)
        )
        raw = f"{pre}{first}{mid}{second}{post}[/INST]"
        return PromptBundle(question=question, context=context, rendered_raw=raw)
    messages = [
        ("system", template.system_text),
        ("user", f"Question: {question}\nContext: {context}\nAnswer:"),
    ]
    return PromptBundle(
        question=question, context=context, rendered_messages=messages
    )
