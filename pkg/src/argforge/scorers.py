"""Scorer and generator plugin contracts.

A scorer maps a sentence to a probability of being a premise. The built-in
boosted-tree model fulfills the contract in-process; external models (e.g. a
fine-tuned transformer served elsewhere) are reached over a line-delimited
child-process pipe or HTTP, never linked in.
"""

from __future__ import annotations

import subprocess
from typing import Protocol, Sequence

import requests

from .features import FeatureSchema, MarkerLexicon, featurize
from .gbdt import TreeEnsemble
from .ingest import Sentence
from .ngram import GeneratedCandidate, NgramModel, generate
from .sampling import SamplerConfig


class ScorerError(RuntimeError):
    """Plugin transport failure, timeout, or malformed reply."""


class SentenceScorer(Protocol):
    def score(self, sentence: Sentence) -> float: ...

    def score_many(self, sentences: Sequence[Sentence]) -> list[float]: ...


def _check_probability(value: float, origin: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ScorerError(f"{origin}: score {value} outside [0, 1]")
    return value


class GbdtScorer:
    """In-process scorer backed by a trained tree ensemble."""

    def __init__(self, model: TreeEnsemble, schema: FeatureSchema, lexicon: MarkerLexicon, tagger):
        self.model = model
        self.schema = schema
        self.lexicon = lexicon
        self.tagger = tagger

    def score(self, sentence: Sentence) -> float:
        return self.score_many([sentence])[0]

    def score_many(self, sentences: Sequence[Sentence]) -> list[float]:
        from .features import vectors_to_matrix

        vectors = [featurize(s, self.schema, self.lexicon, self.tagger) for s in sentences]
        matrix = vectors_to_matrix(vectors, self.schema)
        return [float(p) for p in self.model.predict_proba(matrix)]


class SubprocessScorer:
    """Line-delimited plugin: one sentence text per line in, one probability out."""

    def __init__(self, argv: list[str], timeout: float = 60.0):
        self.argv = list(argv)
        self.timeout = timeout

    def score(self, sentence: Sentence) -> float:
        return self.score_many([sentence])[0]

    def score_many(self, sentences: Sequence[Sentence]) -> list[float]:
        payload = "\n".join(s.text.replace("\n", " ") for s in sentences)
        try:
            proc = subprocess.run(
                self.argv,
                input=payload,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as err:
            raise ScorerError(f"scorer plugin {self.argv[0]!r} failed: {err}") from err
        if proc.returncode != 0:
            raise ScorerError(
                f"scorer plugin exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        lines = proc.stdout.splitlines()
        if len(lines) != len(sentences):
            raise ScorerError(
                f"scorer plugin answered {len(lines)} lines for {len(sentences)} sentences"
            )
        scores = []
        for lineno, line in enumerate(lines, start=1):
            try:
                value = float(line.strip())
            except ValueError as err:
                raise ScorerError(f"scorer plugin line {lineno}: non-numeric reply {line!r}") from err
            scores.append(_check_probability(value, f"scorer plugin line {lineno}"))
        return scores


class HttpScorer:
    """HTTP plugin: POST sentence texts as lines to /score, probabilities come back as lines."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url.rstrip("/") + "/score"
        self.timeout = timeout

    def score(self, sentence: Sentence) -> float:
        return self.score_many([sentence])[0]

    def score_many(self, sentences: Sequence[Sentence]) -> list[float]:
        payload = "\n".join(s.text.replace("\n", " ") for s in sentences)
        try:
            response = requests.post(
                self.url,
                data=payload.encode("utf-8"),
                headers={"Content-Type": "text/plain; charset=utf-8"},
                timeout=self.timeout,
            )
        except requests.RequestException as err:
            raise ScorerError(f"scorer endpoint {self.url} failed: {err}") from err
        if response.status_code != 200:
            raise ScorerError(f"scorer endpoint {self.url} answered {response.status_code}")
        lines = response.text.splitlines()
        if len(lines) != len(sentences):
            raise ScorerError(
                f"scorer endpoint answered {len(lines)} lines for {len(sentences)} sentences"
            )
        scores = []
        for lineno, line in enumerate(lines, start=1):
            try:
                value = float(line.strip())
            except ValueError as err:
                raise ScorerError(f"scorer endpoint line {lineno}: non-numeric reply {line!r}") from err
            scores.append(_check_probability(value, f"scorer endpoint line {lineno}"))
        return scores


class NgramGenerator:
    """Built-in generator backend; request/response shape matches the HTTP plugin."""

    def __init__(self, model: NgramModel, model_id: str | None = None):
        self.model = model
        self.model_id = model_id or model.model_id()

    def generate(self, prompt: str, config: SamplerConfig, prompt_id: str) -> list[GeneratedCandidate]:
        return generate(self.model, prompt, config, prompt_id=prompt_id, model_id=self.model_id)


class HttpGenerator:
    """External generator plugin over HTTP POST /generate.

    Request: {prompt, top_k, top_p, num_samples, max_tokens, seed}.
    Response: {candidates: [{text, seed_used}, ...]}.
    """

    def __init__(self, url: str, model_id: str, timeout: float = 120.0):
        self.url = url.rstrip("/") + "/generate"
        self.model_id = model_id
        self.timeout = timeout

    def generate(self, prompt: str, config: SamplerConfig, prompt_id: str) -> list[GeneratedCandidate]:
        request = {
            "prompt": prompt,
            "top_k": config.top_k,
            "top_p": config.top_p,
            "num_samples": config.num_samples,
            "max_tokens": config.max_tokens,
            "seed": config.seed,
        }
        try:
            response = requests.post(self.url, json=request, timeout=self.timeout)
        except requests.RequestException as err:
            raise ScorerError(f"generator endpoint {self.url} failed: {err}") from err
        if response.status_code != 200:
            raise ScorerError(f"generator endpoint {self.url} answered {response.status_code}")
        try:
            body = response.json()
            raw = body["candidates"]
        except (ValueError, KeyError) as err:
            raise ScorerError(f"generator endpoint returned malformed body: {err}") from err
        if len(raw) != config.num_samples:
            raise ScorerError(
                f"generator endpoint returned {len(raw)} candidates, expected {config.num_samples}"
            )
        candidates = []
        for index, item in enumerate(raw):
            text = item["text"] if isinstance(item, dict) else str(item)
            seed_used = item.get("seed_used", config.seed + index) if isinstance(item, dict) else config.seed + index
            candidates.append(
                GeneratedCandidate(
                    prompt_id=prompt_id,
                    model_id=self.model_id,
                    text=text,
                    tokens=tuple(text.split()),
                    seed_used=seed_used,
                )
            )
        return candidates
