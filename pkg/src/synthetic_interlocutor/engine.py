"""One conversational turn, end to end.

``run_turn`` appends the interviewer question, retrieves context, renders
the prompt, generates a response, and checks the guard rules. A triggered
rule regenerates with that rule's corrective instruction appended to the
system text (the stored template itself is never mutated), up to
``max_regens`` times; a rule still firing on the last attempt is flagged
instead of hidden.

The recorded turn carries one verdict per rule: ``regenerated`` verdicts
keep the evidence from the discarded draft that caused the retry, while
``flagged`` ones point into the final text. Nothing is persisted until the
turn succeeds, so a failed provider call leaves the transcript untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .corpus import Corpus
from .errors import EmptyQuestion, SessionClosed
from .guards import CORRECTIVE_SUFFIXES, RULES, GuardLexicon, check_guards
from .llm import GenerationResult
from .prompts import PromptTemplate, render
from .retrieval import retrieve
from .sessions import ChatTurn, GuardVerdict, Session, SessionStore
from .vectorstore import Index

OnEvent = Callable[[str, dict], None]


@dataclass
class GuardPolicy:
    enabled: bool = True
    rules: set[str] = field(default_factory=lambda: set(RULES))
    max_regens: int = 2


class DialogueEngine:
    """Binds one corpus and its providers into a turn runner."""

    def __init__(
        self,
        corpus: Corpus,
        index: Index,
        embedder,
        llm,
        template: PromptTemplate,
        lexicon: GuardLexicon,
        store: SessionStore,
        guard_policy: GuardPolicy | None = None,
    ):
        self.corpus = corpus
        self.index = index
        self.embedder = embedder
        self.llm = llm
        self.template = template
        self.lexicon = lexicon
        self.store = store
        self.guard_policy = guard_policy or GuardPolicy()

    def run_turn(
        self, session: Session, question: str, on_event: OnEvent | None = None
    ) -> ChatTurn:
        if session.status != "active":
            raise SessionClosed(f"session {session.id} is closed")
        if not question or not question.strip():
            raise EmptyQuestion("message text must be non-empty")

        def emit(kind: str, payload: dict) -> None:
            if on_event:
                on_event(kind, payload)

        interviewer_turn = ChatTurn(role="interviewer", text=question)
        draft_turns = [*session.turns, interviewer_turn]

        rc = retrieve(
            question,
            session.history_texts(),
            self.index,
            self.embedder,
            session.retrieval_config,
            self.corpus.chunk_text,
        )
        emit("retrieval", {"hits": [h.to_json() for h in rc.hits]})

        policy = self.guard_policy
        regens = 0
        regenerated: dict[str, GuardVerdict] = {}
        result: GenerationResult
        final_verdicts_by_rule: dict[str, GuardVerdict] = {}

        while True:
            suffix = " ".join(
                CORRECTIVE_SUFFIXES[rule] for rule in RULES if rule in regenerated
            )
            template = self.template.with_system_suffix(suffix)
            bundle = render(template, question, rc.context_text)
            attempt = regens

            result = self.llm.generate(
                bundle,
                session.generation_params,
                on_token=lambda inc: emit("token", {"text": inc, "attempt": attempt}),
            )

            if not policy.enabled:
                break
            verdicts = check_guards(result.text, draft_turns, self.lexicon, policy.rules)
            final_verdicts_by_rule = {v.rule: v for v in verdicts}
            triggered = [v for v in verdicts if v.triggered]
            if not triggered or regens >= policy.max_regens:
                break
            for v in triggered:
                regenerated[v.rule] = v
            regens += 1

        verdicts_out: list[GuardVerdict] = []
        if policy.enabled:
            for rule in RULES:
                if rule not in policy.rules:
                    continue
                final = final_verdicts_by_rule.get(rule, GuardVerdict(rule, False))
                if final.triggered:
                    final.action_taken = "flagged"
                    verdicts_out.append(final)
                elif rule in regenerated:
                    earlier = regenerated[rule]
                    earlier.action_taken = "regenerated"
                    verdicts_out.append(earlier)
                else:
                    verdicts_out.append(final)

        interlocutor_turn = ChatTurn(
            role="interlocutor",
            text=result.text,
            hits=rc.hits,
            guard_verdicts=verdicts_out,
            regen_count=regens,
            partial=result.finish_reason == "error",
        )
        self.store.append_turns(session, [interviewer_turn, interlocutor_turn])
        emit("guards", {"verdicts": [v.to_json() for v in verdicts_out]})
        emit("done", {"turn": interlocutor_turn.to_json()})
        return interlocutor_turn
