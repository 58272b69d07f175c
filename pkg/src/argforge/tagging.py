"""Pluggable part-of-speech tagging over the six-class tagset.

The reference tagger is a full-form lexicon lookup with suffix heuristics;
an external morphological analyzer can be plugged in over a line-delimited
child-process protocol.
"""

from __future__ import annotations

import re
import subprocess
from dataclasses import dataclass
from pathlib import Path

NOUN = "NOUN"
PRON = "PRON"
VERB = "VERB"
ADJ = "ADJ"
ADV = "ADV"
OTHER = "OTHER"

CONTENT_CLASSES = (ADJ, ADV, NOUN, PRON, VERB)  # alphabetical; fixes n-gram feature order
ALL_CLASSES = CONTENT_CLASSES + (OTHER,)

TENSES = ("past", "present", "future")
PERSONS = (1, 2, 3)
MOODS = ("indicative", "imperative")


class TaggerError(RuntimeError):
    """Tagger misconfiguration or plugin failure."""


@dataclass(frozen=True)
class PosTag:
    """One tag per token; verb attributes only when morphologically determinable."""

    pos: str
    tense: str | None = None
    person: int | None = None
    mood: str | None = None

    def __post_init__(self) -> None:
        if self.pos not in ALL_CLASSES:
            raise TaggerError(f"unknown tag class {self.pos!r}")
        if self.pos != VERB and (self.tense or self.person or self.mood):
            raise TaggerError("verb attributes are only valid on VERB tags")
        if self.tense is not None and self.tense not in TENSES:
            raise TaggerError(f"bad tense {self.tense!r}")
        if self.person is not None and self.person not in PERSONS:
            raise TaggerError(f"bad person {self.person!r}")
        if self.mood is not None and self.mood not in MOODS:
            raise TaggerError(f"bad mood {self.mood!r}")


def format_tag(tag: PosTag) -> str:
    """Render a tag for the plugin protocol, e.g. ``VERB{tense=past,person=3}``."""
    attrs = []
    if tag.tense:
        attrs.append(f"tense={tag.tense}")
    if tag.person:
        attrs.append(f"person={tag.person}")
    if tag.mood:
        attrs.append(f"mood={tag.mood}")
    if attrs:
        return f"{tag.pos}{{{','.join(attrs)}}}"
    return tag.pos


_TAG_RE = re.compile(r"^([A-Z]+)(?:\{([^}]*)\})?$")


def parse_tag(raw: str) -> PosTag:
    match = _TAG_RE.match(raw)
    if not match:
        raise TaggerError(f"cannot parse tag {raw!r}")
    pos, attr_text = match.group(1), match.group(2)
    attrs: dict[str, object] = {}
    if attr_text:
        for part in attr_text.split(","):
            key, _, value = part.partition("=")
            if key == "person":
                attrs[key] = int(value)
            elif key in ("tense", "mood"):
                attrs[key] = value
            else:
                raise TaggerError(f"unknown tag attribute {key!r} in {raw!r}")
    return PosTag(pos=pos, **attrs)


# Suffix heuristics for unknown word forms (checked longest-first). Deliberately
# conservative: a wrong content-class tag pollutes the n-gram features, while
# OTHER merely drops the token from them.
_SUFFIX_RULES: tuple[tuple[str, PosTag], ...] = (
    ("ться", PosTag(VERB)),
    ("ются", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("атся", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ятся", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ится", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ость", PosTag(NOUN)),
    ("ости", PosTag(NOUN)),
    ("ация", PosTag(NOUN)),
    ("ации", PosTag(NOUN)),
    ("ение", PosTag(NOUN)),
    ("ения", PosTag(NOUN)),
    ("ство", PosTag(NOUN)),
    ("ства", PosTag(NOUN)),
    ("тель", PosTag(NOUN)),
    ("ально", PosTag(ADV)),
    ("ически", PosTag(ADV)),
    ("ешь", PosTag(VERB, tense="present", person=2, mood="indicative")),
    ("ишь", PosTag(VERB, tense="present", person=2, mood="indicative")),
    ("ть", PosTag(VERB)),
    ("ли", PosTag(VERB, tense="past")),
    ("ла", PosTag(VERB, tense="past")),
    ("ло", PosTag(VERB, tense="past")),
    ("ет", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ит", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ют", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ут", PosTag(VERB, tense="present", person=3, mood="indicative")),
    ("ый", PosTag(ADJ)),
    ("ой", PosTag(ADJ)),
    ("ая", PosTag(ADJ)),
    ("яя", PosTag(ADJ)),
    ("ое", PosTag(ADJ)),
    ("ее", PosTag(ADJ)),
    ("ые", PosTag(ADJ)),
    ("ие", PosTag(ADJ)),
    ("ий", PosTag(ADJ)),
)


def load_pos_lexicon(path: str | Path) -> dict[str, PosTag]:
    """Read a full-form POS lexicon: TSV ``form<TAB>tag[<TAB>attrs]``, '#' comments."""
    lexicon: dict[str, PosTag] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise TaggerError(f"{path}: line {lineno}: expected form<TAB>tag")
        form, pos = parts[0].lower(), parts[1]
        raw = pos
        if len(parts) > 2 and parts[2]:
            raw = f"{pos}{{{parts[2]}}}"
        lexicon[form] = parse_tag(raw)
    return lexicon


class LexiconTagger:
    """Reference tagger: full-form lookup, then suffix heuristics, else OTHER."""

    def __init__(self, lexicon: dict[str, PosTag] | None = None):
        self.lexicon = dict(lexicon or {})

    def tag(self, tokens: list[str] | tuple[str, ...]) -> list[PosTag]:
        tags = []
        for token in tokens:
            lowered = token.lower()
            known = self.lexicon.get(lowered)
            if known is not None:
                tags.append(known)
                continue
            if not token or not token[0].isalpha():
                tags.append(PosTag(OTHER))
                continue
            for suffix, tag in _SUFFIX_RULES:
                if len(lowered) > len(suffix) + 1 and lowered.endswith(suffix):
                    tags.append(tag)
                    break
            else:
                tags.append(PosTag(OTHER))
        return tags


class SubprocessTagger:
    """External tagger plugin: tokens joined by spaces in, one tag sequence out.

    The child process receives one line per sentence and must answer with a
    line of space-separated tags of the same arity, each in ``format_tag``
    notation.
    """

    def __init__(self, argv: list[str], timeout: float = 30.0):
        self.argv = list(argv)
        self.timeout = timeout

    def tag(self, tokens: list[str] | tuple[str, ...]) -> list[PosTag]:
        return self.tag_many([list(tokens)])[0]

    def tag_many(self, sentences: list[list[str]]) -> list[list[PosTag]]:
        payload = "\n".join(" ".join(tokens) for tokens in sentences)
        try:
            proc = subprocess.run(
                self.argv,
                input=payload,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as err:
            raise TaggerError(f"tagger plugin {self.argv[0]!r} failed: {err}") from err
        if proc.returncode != 0:
            raise TaggerError(
                f"tagger plugin exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        lines = proc.stdout.splitlines()
        if len(lines) != len(sentences):
            raise TaggerError(
                f"tagger plugin answered {len(lines)} lines for {len(sentences)} sentences"
            )
        result = []
        for tokens, line in zip(sentences, lines):
            tags = [parse_tag(raw) for raw in line.split()]
            if len(tags) != len(tokens):
                raise TaggerError(
                    f"tagger plugin answered {len(tags)} tags for {len(tokens)} tokens"
                )
            result.append(tags)
        return result
