"""Backoff n-gram language model with absolute discounting, plus generation
and perplexity.

This is the desk-scale generative backend. Every context distribution is a
proper probability distribution: observed n-grams are discounted by d and the
freed mass interpolates the next-lower order, bottoming out at a unigram
interpolated with the uniform distribution over the vocabulary (UNK
included), so no event ever has zero probability.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import tokenize
from .sampling import SamplerConfig, sample_token

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LM_FORMAT_VERSION = 1

# Validation perplexity reported for the fine-tuned neural generator in the
# original experiment; echoed in reports as a reference point, never a target.
REFERENCE_VALIDATION_PERPLEXITY = 9.66

# Tokens that attach to the preceding word when rendering generated text.
_ATTACHED_PUNCT = frozenset(",.!?;:%)»")


class LanguageModelError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratedCandidate:
    """One sampled continuation; ``text`` excludes the prompt."""

    prompt_id: str
    model_id: str
    text: str
    tokens: tuple[str, ...]
    seed_used: int


class NgramModel:
    """Counts per order plus discount weight; immutable once built."""

    def __init__(
        self,
        order: int,
        discount: float,
        counts: dict[int, dict[tuple[str, ...], dict[str, int]]],
        vocab: tuple[str, ...],
    ):
        if order < 1:
            raise LanguageModelError("order must be >= 1")
        if not 0 < discount < 1:
            raise LanguageModelError("discount must be in (0, 1)")
        self.order = order
        self.discount = discount
        self.counts = counts
        self.vocab = vocab  # sorted, includes EOS and UNK, never BOS
        self._vocab_index = {token: i for i, token in enumerate(vocab)}
        self._totals: dict[int, dict[tuple[str, ...], int]] = {
            k: {ctx: sum(successors.values()) for ctx, successors in table.items()}
            for k, table in counts.items()
        }
        self._unigram = self._build_unigram()

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def model_id(self) -> str:
        digest = hashlib.sha256(serialize(self)).hexdigest()[:8]
        return f"ngram{self.order}-{digest}"

    def _build_unigram(self) -> np.ndarray:
        size = len(self.vocab)
        uniform = np.full(size, 1.0 / size, dtype=np.float64)
        table = self.counts.get(1, {})
        successors = table.get((), {})
        total = self._totals.get(1, {}).get((), 0)
        if total == 0:
            return uniform
        dist = np.zeros(size, dtype=np.float64)
        for token, count in successors.items():
            dist[self._vocab_index[token]] = max(count - self.discount, 0.0) / total
        backoff_mass = self.discount * len(successors) / total
        return dist + backoff_mass * uniform

    def _map_token(self, token: str) -> str:
        if token == BOS:
            return BOS
        return token if token in self._vocab_index else UNK

    def next_token_dist(self, context: list[str] | tuple[str, ...]) -> np.ndarray:
        """Full next-token distribution over ``vocab`` given a context.

        Uses the longest available context suffix (at most order-1 tokens);
        unseen contexts at any order fall through to the next-lower order.
        """
        mapped = [self._map_token(token) for token in context]
        dist = self._unigram.copy()
        for k in range(2, self.order + 1):
            if len(mapped) < k - 1:
                break
            suffix = tuple(mapped[len(mapped) - (k - 1):])
            total = self._totals.get(k, {}).get(suffix, 0)
            if not total:
                continue
            successors = self.counts[k][suffix]
            level = np.zeros(len(self.vocab), dtype=np.float64)
            for token, count in successors.items():
                level[self._vocab_index[token]] = (count - self.discount) / total
            backoff_mass = self.discount * len(successors) / total
            dist = level + backoff_mass * dist
        return dist

    def token_prob(self, token: str, context: list[str] | tuple[str, ...]) -> float:
        """P(token | context) via the same backoff chain, scalar form."""
        target = self._map_token(token)
        if target == BOS:
            raise LanguageModelError("BOS is context-only and never predicted")
        mapped = [self._map_token(t) for t in context]
        prob = float(self._unigram[self._vocab_index[target]])
        for k in range(2, self.order + 1):
            if len(mapped) < k - 1:
                break
            suffix = tuple(mapped[len(mapped) - (k - 1):])
            total = self._totals.get(k, {}).get(suffix, 0)
            if not total:
                continue
            successors = self.counts[k][suffix]
            count = successors.get(target, 0)
            direct = (count - self.discount) / total if count else 0.0
            backoff_mass = self.discount * len(successors) / total
            prob = direct + backoff_mass * prob
        return prob

    @classmethod
    def uniform(cls, vocab: list[str] | tuple[str, ...]) -> "NgramModel":
        """Order-1 model with no counts: every distribution is uniform.

        Serves as the baseline reference; its perplexity on in-vocabulary
        text is exactly the vocabulary size.
        """
        full = tuple(sorted(set(vocab) | {EOS, UNK}))
        return cls(order=1, discount=0.75, counts={1: {}}, vocab=full)


def train_lm(lines: list[list[str]], order: int = 3, discount: float = 0.75) -> NgramModel:
    """Count n-grams with (order-1) BOS padding and one EOS per line."""
    if not lines or all(not line for line in lines):
        raise LanguageModelError("training corpus must be non-empty")
    counts: dict[int, dict[tuple[str, ...], dict[str, int]]] = {k: {} for k in range(1, order + 1)}
    vocab = {EOS, UNK}
    padding = [BOS] * (order - 1)
    for line in lines:
        if not line:
            continue
        vocab.update(line)
        sequence = padding + list(line) + [EOS]
        for position in range(order - 1, len(sequence)):
            token = sequence[position]
            for k in range(1, order + 1):
                context = tuple(sequence[position - (k - 1):position])
                table = counts[k].setdefault(context, {})
                table[token] = table.get(token, 0) + 1
    return NgramModel(order=order, discount=discount, counts=counts, vocab=tuple(sorted(vocab)))


def detokenize(tokens: list[str] | tuple[str, ...]) -> str:
    """Space-join with punctuation attachment; nothing fancier by design."""
    pieces: list[str] = []
    for token in tokens:
        if pieces and token in _ATTACHED_PUNCT:
            pieces[-1] += token
        else:
            pieces.append(token)
    return " ".join(pieces)


def generate(
    model: NgramModel,
    prompt: str,
    config: SamplerConfig,
    prompt_id: str = "p01",
    model_id: str | None = None,
) -> list[GeneratedCandidate]:
    """Sample ``config.num_samples`` continuations of the prompt.

    Candidate i uses its own generator seeded with ``config.seed + i``, so a
    batch is reproducible and individual candidates can be regenerated.
    """
    prompt_tokens = tokenize(prompt)
    if model_id is None:
        model_id = model.model_id()
    candidates = []
    for index in range(config.num_samples):
        seed_used = config.seed + index
        rng = np.random.default_rng(seed_used)
        context = list(prompt_tokens)
        emitted: list[str] = []
        for _ in range(config.max_tokens):
            dist = model.next_token_dist(context)
            token = model.vocab[sample_token(dist, config, rng)]
            if token == EOS:
                break
            emitted.append(token)
            context.append(token)
        candidates.append(
            GeneratedCandidate(
                prompt_id=prompt_id,
                model_id=model_id,
                text=detokenize(emitted),
                tokens=tuple(emitted),
                seed_used=seed_used,
            )
        )
    return candidates


def perplexity(model: NgramModel, lines: list[list[str]]) -> float:
    """exp of the average negative log-probability per token, EOS included.

    Out-of-vocabulary tokens are scored as UNK; smoothing guarantees no
    zero-probability event.
    """
    if not lines or all(not line for line in lines):
        raise LanguageModelError("held-out set must be non-empty")
    total_log = 0.0
    total_tokens = 0
    padding = [BOS] * (model.order - 1)
    for line in lines:
        if not line:
            continue
        sequence = padding + list(line) + [EOS]
        for position in range(model.order - 1, len(sequence)):
            prob = model.token_prob(sequence[position], sequence[:position])
            if prob <= 0.0:
                raise LanguageModelError(
                    f"zero probability for {sequence[position]!r}; smoothing is broken"
                )
            total_log += float(np.log(prob))
            total_tokens += 1
    return float(np.exp(-total_log / total_tokens))


def serialize(model: NgramModel) -> bytes:
    tables = {}
    for k, table in model.counts.items():
        tables[str(k)] = {
            "\x1f".join(context): dict(sorted(successors.items()))
            for context, successors in sorted(table.items())
        }
    payload = {
        "format_version": LM_FORMAT_VERSION,
        "order": model.order,
        "discount": model.discount,
        "vocab": list(model.vocab),
        "counts": tables,
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")


def deserialize(blob: bytes) -> NgramModel:
    try:
        payload = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise LanguageModelError(f"unreadable model payload: {err}") from err
    if payload.get("format_version") != LM_FORMAT_VERSION:
        raise LanguageModelError(f"unsupported LM format version {payload.get('format_version')!r}")
    counts: dict[int, dict[tuple[str, ...], dict[str, int]]] = {}
    for k_text, table in payload["counts"].items():
        k = int(k_text)
        counts[k] = {}
        for context_text, successors in table.items():
            context = tuple(context_text.split("\x1f")) if context_text else ()
            counts[k][context] = {token: int(c) for token, c in successors.items()}
    return NgramModel(
        order=int(payload["order"]),
        discount=float(payload["discount"]),
        counts=counts,
        vocab=tuple(payload["vocab"]),
    )


def save_model(path: str | Path, model: NgramModel) -> None:
    Path(path).write_bytes(serialize(model))


def load_model(path: str | Path) -> NgramModel:
    return deserialize(Path(path).read_bytes())
