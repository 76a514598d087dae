"""Session context: classification, prompt assembly, and output parsing.

A snapshot of the live session (question, suggested steps, hint usage,
last accuracy, chat) is classified into one of five situations, turned
into a prompt from a numbered template, and the model's reply is parsed
back into exactly three tagged message recommendations. Every function
here is pure and byte-deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

ROLES = ("student", "caregiver")
ACCURACIES = ("correct", "error", "none")

PAYLOAD_KEYS = ("chat message", "next step", "used hint", "accuracy", "question")


class ContextError(ValueError):
    pass


class ParseError(ContextError):
    """Model output did not contain three recommendations."""


class PayloadError(ContextError):
    """A serialized context payload is malformed."""


class TemplateError(ContextError):
    """A template file is missing or does not fit its slot."""


@dataclass(frozen=True)
class ChatMsg:
    role: str
    text: str
    timestamp: int  # milliseconds since the epoch

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")


@dataclass(frozen=True)
class ContextSnapshot:
    question: str
    next_steps: tuple[str, ...]
    used_hint: bool
    accuracy: str
    chat_history: tuple[ChatMsg, ...]

    def __post_init__(self) -> None:
        if len(self.next_steps) > 3:
            raise ValueError("a snapshot carries at most three next steps")
        if self.accuracy not in ACCURACIES:
            raise ValueError(f"accuracy must be one of {ACCURACIES}")


class ContextClass(Enum):
    HINT_ERROR = "hint_error"
    NOHINT_ERROR = "nohint_error"
    CORRECT_ATTEMPT = "correct_attempt"
    CHAT_QUESTION = "chat_question"
    NEUTRAL = "neutral"


def classify(snapshot: ContextSnapshot) -> ContextClass:
    if snapshot.accuracy == "error":
        return ContextClass.HINT_ERROR if snapshot.used_hint else ContextClass.NOHINT_ERROR
    if snapshot.accuracy == "correct":
        return ContextClass.CORRECT_ATTEMPT
    if snapshot.chat_history and snapshot.chat_history[-1].role == "student":
        return ContextClass.CHAT_QUESTION
    return ContextClass.NEUTRAL


# --- payload -------------------------------------------------------------------


def payload_dict(snapshot: ContextSnapshot) -> dict:
    """The five context variables, in their fixed key order."""
    chat = "\n".join(f"{m.role.capitalize()}: {m.text}" for m in snapshot.chat_history)
    return {
        "chat message": chat,
        "next step": list(snapshot.next_steps),
        "used hint": "True" if snapshot.used_hint else "False",
        "accuracy": snapshot.accuracy,
        "question": snapshot.question,
    }


def to_payload(snapshot: ContextSnapshot) -> str:
    return json.dumps(payload_dict(snapshot), ensure_ascii=False)


def from_payload(text: str) -> ContextSnapshot:
    """Rebuild a snapshot from its payload JSON (timestamps are synthetic)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PayloadError(f"payload is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or set(data) != set(PAYLOAD_KEYS):
        raise PayloadError(f"payload keys must be exactly {list(PAYLOAD_KEYS)}")
    if data["used hint"] not in ("True", "False"):
        raise PayloadError('"used hint" must be "True" or "False"')
    if data["accuracy"] not in ACCURACIES:
        raise PayloadError(f'"accuracy" must be one of {ACCURACIES}')
    steps = data["next step"]
    if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
        raise PayloadError('"next step" must be a list of strings')
    history: list[ChatMsg] = []
    chat = data["chat message"]
    if not isinstance(chat, str):
        raise PayloadError('"chat message" must be a string')
    for index, line in enumerate(filter(None, chat.split("\n"))):
        role, sep, body = line.partition(": ")
        if not sep or role.lower() not in ROLES:
            raise PayloadError(f"chat line must look like 'Student: ...', got {line!r}")
        history.append(ChatMsg(role.lower(), body, index))
    return ContextSnapshot(
        question=data["question"],
        next_steps=tuple(steps),
        used_hint=data["used hint"] == "True",
        accuracy=data["accuracy"],
        chat_history=tuple(history),
    )


# --- directives ------------------------------------------------------------------

HINT_USED_SENTENCE = (
    "Your child did use a hint, so ask them what they understood from the hint."
)
HINT_NOT_USED_SENTENCE = (
    "Your child did not use a hint, so suggest that they request a hint and "
    "walk you through it."
)
ERROR_SENTENCE = (
    "Your child made an error, so you should focus on responding to the error "
    "as described earlier."
)
CORRECT_SENTENCE = (
    "Your child's last attempt was correct, so give praise that acknowledges "
    "the effort they put in."
)
QUESTION_SENTENCE = (
    "Your child asked a question in the chat, so ask them to self-explain "
    "their thinking as part of your answer."
)


def directives(snapshot: ContextSnapshot, cls: ContextClass | None = None) -> str:
    """The situation-specific paragraph woven into category-3 prompts."""
    if cls is None:
        cls = classify(snapshot)
    sentences: list[str] = []
    if cls is ContextClass.HINT_ERROR:
        sentences.append(HINT_USED_SENTENCE)
        sentences.append(ERROR_SENTENCE)
    elif cls is ContextClass.NOHINT_ERROR:
        sentences.append(HINT_NOT_USED_SENTENCE)
        sentences.append(ERROR_SENTENCE)
    elif cls is ContextClass.CORRECT_ATTEMPT:
        sentences.append(CORRECT_SENTENCE)
    if cls is ContextClass.CHAT_QUESTION or (
        cls is not ContextClass.CHAT_QUESTION
        and snapshot.chat_history
        and snapshot.chat_history[-1].role == "student"
        and "?" in snapshot.chat_history[-1].text
    ):
        sentences.append(QUESTION_SENTENCE)
    if snapshot.next_steps:
        sentences.append(
            "Here are suggested next steps: " + "; ".join(snapshot.next_steps) + "."
        )
    sentences.append(
        f"This is the equation your child is working on: {snapshot.question}. "
        "They need to solve for x."
    )
    return " ".join(sentences)


# --- templates -------------------------------------------------------------------


class PromptCategory(Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    FEW_SHOT_WITH_CONTEXT = "few_shot_with_context"


_CATEGORY_BY_ID = {
    1: PromptCategory.ZERO_SHOT,
    2: PromptCategory.ZERO_SHOT,
    3: PromptCategory.ZERO_SHOT,
    4: PromptCategory.FEW_SHOT,
    5: PromptCategory.FEW_SHOT,
    6: PromptCategory.FEW_SHOT_WITH_CONTEXT,
    7: PromptCategory.FEW_SHOT_WITH_CONTEXT,
}

_SECTION_MARK = re.compile(r"^#\[(\w+)\]$")


@dataclass(frozen=True)
class PromptTemplate:
    id: int
    category: PromptCategory
    version: int
    sections: tuple[tuple[str, str], ...]

    def section(self, name: str) -> str:
        for key, text in self.sections:
            if key == name:
                return text
        raise KeyError(name)

    def has_section(self, name: str) -> bool:
        return any(key == name for key, _ in self.sections)


def category_for(template_id: int) -> PromptCategory:
    try:
        return _CATEGORY_BY_ID[template_id]
    except KeyError:
        raise TemplateError(f"template id must be 1..7, got {template_id}") from None


def _split_sections(raw: str) -> list[tuple[str, str]]:
    sections: list[tuple[str, str]] = []
    name: str | None = None
    lines: list[str] = []
    for line in raw.splitlines():
        mark = _SECTION_MARK.match(line)
        if mark:
            if name is not None:
                sections.append((name, "\n".join(lines).strip()))
            name = mark.group(1)
            lines = []
        elif name is not None:
            lines.append(line)
        elif line.strip():
            raise TemplateError(f"text before the first section marker: {line!r}")
    if name is not None:
        sections.append((name, "\n".join(lines).strip()))
    return sections


def load_template(template_id: int, directory: Path | str | None = None) -> PromptTemplate:
    """Load prompt_<id>.txt from a directory (default: the packaged set)."""
    category = category_for(template_id)
    filename = f"prompt_{template_id}.txt"
    if directory is None:
        ref = resources.files("ccst").joinpath("templates", filename)
        if not ref.is_file():
            raise TemplateError(f"packaged template {filename} is missing")
        raw = ref.read_text(encoding="utf-8")
    else:
        path = Path(directory) / filename
        if not path.is_file():
            raise TemplateError(f"template file not found: {path}")
        raw = path.read_text(encoding="utf-8")

    sections = _split_sections(raw)
    names = [name for name, _ in sections]
    meta = dict(
        pair.split("=", 1) for pair in dict(sections).get("meta", "").splitlines() if "=" in pair
    )
    if meta.get("id") != str(template_id):
        raise TemplateError(f"{filename} declares id={meta.get('id')!r}")
    version = int(meta.get("version", "1"))

    required = ["persona", "task", "context", "format"]
    if category is not PromptCategory.ZERO_SHOT:
        required.insert(2, "strategy_examples")
    for name in required:
        if name not in names:
            raise TemplateError(f"{filename} is missing the {name} section")
    body = tuple((name, text) for name, text in sections if name != "meta")
    return PromptTemplate(template_id, category, version, body)


def _chat_block(snapshot: ContextSnapshot) -> str:
    if not snapshot.chat_history:
        return "(no messages yet)"
    return "\n".join(f"{m.role.capitalize()}: {m.text}" for m in snapshot.chat_history)


def assemble(template: PromptTemplate, snapshot: ContextSnapshot) -> str:
    """Render a template against a snapshot. Deterministic, byte for byte."""
    parts: list[str] = []
    for name, text in template.sections:
        text = text.replace("<<chat_history>>", _chat_block(snapshot))
        if "<<dynamic_context>>" in text:
            text = text.replace("<<dynamic_context>>", directives(snapshot))
        parts.append(text)
    return "\n\n".join(parts)


# --- recommendations ---------------------------------------------------------------


@dataclass(frozen=True)
class Recommendation:
    tag: str
    body: str


def serialize_recommendation(rec: Recommendation) -> str:
    return f"[{rec.tag}] {rec.body}"


_ITEM_PREFIX = re.compile(r"^\s*(?:\d+\s*[.)]\s*|[-*]\s*)*\[")


def parse_recommendations(text: str) -> list[Recommendation]:
    """Pull exactly three [tag] message lines out of model output.

    Tolerates numbering, bullets, surrounding prose, and a colon after the
    closing bracket. Raises ParseError when fewer than three turn up.
    """
    items: list[Recommendation] = []
    current: list[str] | None = None  # [tag, body-so-far]
    for line in text.splitlines():
        if _ITEM_PREFIX.match(line):
            start = line.index("[")
            end = line.find("]", start)
            if end == -1:
                continue
            tag = line[start + 1 : end].strip()
            body = line[end + 1 :].lstrip()
            if body.startswith(":"):
                body = body[1:].lstrip()
            if current is not None:
                items.append(Recommendation(current[0], current[1].strip()))
            current = [tag, body]
        elif current is not None and line.strip():
            current[1] = f"{current[1]} {line.strip()}"
    if current is not None:
        items.append(Recommendation(current[0], current[1].strip()))
    if len(items) < 3:
        raise ParseError(f"expected three recommendations, found {len(items)}")
    return items[:3]


_FALLBACKS: dict[ContextClass, tuple[tuple[str, str], ...]] = {
    ContextClass.HINT_ERROR: (
        ("Walk through the hint", "Can you tell me what you understood from the hint?"),
        ("Ask to self-explain", "Can you walk me through your thinking in this step?"),
        ("Encourage effort", "This one is tricky, and you're sticking with it. Which part feels hardest?"),
    ),
    ContextClass.NOHINT_ERROR: (
        ("Request a hint", "How about you request a hint and walk me through it?"),
        ("Ask to self-explain", "Can you explain what you tried in this step?"),
        ("Respond to the error", "Something small went wrong in that step. Want to look at it together?"),
    ),
    ContextClass.CORRECT_ATTEMPT: (
        ("Praise your child's effort", "Great job on getting this far! I appreciate how hard you worked on this problem."),
        ("Ask to self-explain", "Nice step! Can you tell me why it works?"),
        ("Keep the momentum", "You're on a roll. What's your plan for the next step?"),
    ),
    ContextClass.CHAT_QUESTION: (
        ("Answer with a question", "Good question. What do you think we should try first?"),
        ("Ask to self-explain", "Can you walk me through your thinking so far?"),
        ("Assess prior knowledge", "What do you already know about solving equations like this one?"),
    ),
    ContextClass.NEUTRAL: (
        ("Assess prior knowledge", "Can you tell me what the problem is asking you to do?"),
        ("Check in", "How is it going so far? Anything feel confusing?"),
        ("Ask to self-explain", "Can you explain your plan for solving this one?"),
    ),
}


def fallback(cls: ContextClass) -> list[Recommendation]:
    """Three canned recommendations for when generation fails or stalls."""
    return [Recommendation(tag, body) for tag, body in _FALLBACKS[cls]]


# --- prompt lint -------------------------------------------------------------------

DEFAULT_WORD_BUDGET = 800


@dataclass(frozen=True)
class CLEARReport:
    concise: bool
    logical: bool
    explicit: bool
    adaptive: bool
    reflective: bool
    word_count: int
    template_id: int | None = None
    template_version: int | None = None


def _section_anchor(text: str) -> str | None:
    for line in text.splitlines():
        line = line.strip()
        if line and "<<" not in line:
            return line[:24]
    return None


def lint_prompt(
    prompt: str,
    snapshot: ContextSnapshot,
    template: PromptTemplate | None = None,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> CLEARReport:
    """Five checks: concise, logical, explicit, adaptive, reflective."""
    word_count = len(prompt.split())
    concise = 0 < word_count <= word_budget
    if template is not None:
        position = -1
        logical = True
        for _, text in template.sections:
            anchor = _section_anchor(text)
            if anchor is None:
                continue
            found = prompt.find(anchor)
            if found <= position:
                logical = False
                break
            position = found
    else:
        logical = prompt.startswith("You are") and "exactly three" in prompt
    explicit = "exactly three" in prompt
    adaptive = bool(snapshot.question) and snapshot.question in prompt
    reflective = template is not None
    return CLEARReport(
        concise=concise,
        logical=logical,
        explicit=explicit,
        adaptive=adaptive,
        reflective=reflective,
        word_count=word_count,
        template_id=template.id if template else None,
        template_version=template.version if template else None,
    )
