"""Declarative pipeline configuration (TOML).

Paths are resolved relative to the config file. Defaults mirror the
experimental protocol: 0.10 length tails, 5-fold outer / 4-fold inner CV,
a {50,150,500} x {2,8,20,30} tree grid, 3,500 selected sentences, the
"потому что" connective, and Top-K=50 / Top-p=0.92 / 20 samples decoding.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .gbdt import TrainConfig
from .sampling import SamplerConfig

ENV_CONFIG = "ARGFORGE_CONFIG"

DEFAULT_GRID = tuple(
    TrainConfig(n_trees=n, max_depth=d)
    for n in (50, 150, 500)
    for d in (2, 8, 20, 30)
)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class MissingInputError(FileNotFoundError):
    """A referenced input file does not exist (CLI exit code 2)."""


@dataclass(frozen=True)
class IngestSection:
    documents: Path
    labeled: Path
    label_rules: dict[str, str]
    abbreviations: Path | None = None
    lower_frac: float = 0.10
    upper_frac: float = 0.10


@dataclass(frozen=True)
class FeaturesSection:
    markers: Path
    pos_lexicon: Path | None = None
    binary: bool = False


@dataclass(frozen=True)
class CvSection:
    k: int = 5
    inner_k: int = 4
    grid: tuple[TrainConfig, ...] = DEFAULT_GRID
    enabled: bool = True


@dataclass(frozen=True)
class SelectSection:
    count: int | None = 3500
    fraction: float | None = None
    connective: str = "потому что"


@dataclass(frozen=True)
class LmBackend:
    id: str
    source: str  # "selected" | "corpus"
    order: int = 3
    discount: float = 0.75

    def __post_init__(self) -> None:
        if self.source not in ("selected", "corpus"):
            raise ConfigError(f"lm backend {self.id!r}: source must be selected|corpus")


@dataclass(frozen=True)
class LmSection:
    backends: tuple[LmBackend, ...] = (
        LmBackend(id="tuned", source="selected"),
        LmBackend(id="baseline", source="corpus"),
    )
    holdout_frac: float = 0.125


@dataclass(frozen=True)
class GenerateSection:
    prompts: Path
    top_k: int = 50
    top_p: float = 0.92
    num_samples: int = 20
    max_tokens: int = 40

    def sampler(self, seed: int) -> SamplerConfig:
        return SamplerConfig(
            top_k=self.top_k,
            top_p=self.top_p,
            seed=seed,
            max_tokens=self.max_tokens,
            num_samples=self.num_samples,
        )


@dataclass(frozen=True)
class SimulateSection:
    annotators: tuple[str, ...] = ("a1", "a2", "a3", "a4")
    premise_rates: dict[str, float] = field(default_factory=dict)
    default_premise_rate: float = 0.5
    flip_prob: float = 0.15


@dataclass(frozen=True)
class AnnotationSection:
    labels: Path
    quorum: int = 3
    n_annotators: int = 4
    simulate: SimulateSection | None = None


@dataclass(frozen=True)
class PipelineConfig:
    base_dir: Path
    out_dir: Path
    seed: int
    ingest: IngestSection
    features: FeaturesSection
    train: TrainConfig
    cv: CvSection
    select: SelectSection
    lm: LmSection
    generate: GenerateSection
    annotation: AnnotationSection

    def artifact(self, name: str) -> Path:
        return self.out_dir / name


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path).resolve()


def _train_config(raw: dict, default_seed: int) -> TrainConfig:
    return TrainConfig(
        n_trees=int(raw.get("n_trees", 50)),
        max_depth=int(raw.get("max_depth", 2)),
        learning_rate=float(raw.get("learning_rate", 0.1)),
        min_samples_leaf=int(raw.get("min_samples_leaf", 1)),
        l2_leaf_reg=float(raw.get("l2_leaf_reg", 1.0)),
        seed=int(raw.get("seed", default_seed)),
    )


def load_config(
    path: str | Path | None,
    seed_override: int | None = None,
    out_override: str | None = None,
) -> PipelineConfig:
    """Parse and validate a pipeline config file.

    Falls back to the ARGFORGE_CONFIG environment variable when no path is
    given. Referenced input files must exist.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG)
        if not path:
            raise ConfigError(f"no config path given and {ENV_CONFIG} is not set")
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err

    base = path.parent.resolve()
    seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
    out_dir = Path(out_override) if out_override else _resolve(base, raw.get("out_dir", "out"))

    ingest_raw = raw.get("ingest", {})
    if "documents" not in ingest_raw or "labeled" not in ingest_raw:
        raise ConfigError("[ingest] must define documents and labeled paths")
    rules = {str(k): str(v) for k, v in ingest_raw.get("label_rules", {}).items()}
    if not rules:
        raise ConfigError("[ingest.label_rules] must map every source label")
    ingest = IngestSection(
        documents=_resolve(base, ingest_raw["documents"]),
        labeled=_resolve(base, ingest_raw["labeled"]),
        label_rules=rules,
        abbreviations=_resolve(base, ingest_raw["abbreviations"]) if "abbreviations" in ingest_raw else None,
        lower_frac=float(ingest_raw.get("lower_frac", 0.10)),
        upper_frac=float(ingest_raw.get("upper_frac", 0.10)),
    )

    features_raw = raw.get("features", {})
    if "markers" not in features_raw:
        raise ConfigError("[features] must define the markers lexicon path")
    features = FeaturesSection(
        markers=_resolve(base, features_raw["markers"]),
        pos_lexicon=_resolve(base, features_raw["pos_lexicon"]) if "pos_lexicon" in features_raw else None,
        binary=bool(features_raw.get("binary", False)),
    )

    train = _train_config(raw.get("train", {}), seed)

    cv_raw = raw.get("cv", {})
    grid_raw = cv_raw.get("grid")
    if grid_raw is None:
        grid = DEFAULT_GRID
    else:
        trees = [int(v) for v in grid_raw.get("n_trees", [50])]
        depths = [int(v) for v in grid_raw.get("max_depth", [2])]
        grid = tuple(TrainConfig(n_trees=n, max_depth=d) for n in trees for d in depths)
    cv = CvSection(
        k=int(cv_raw.get("k", 5)),
        inner_k=int(cv_raw.get("inner_k", 4)),
        grid=grid,
        enabled=bool(cv_raw.get("enabled", True)),
    )

    select_raw = raw.get("select", {})
    select = SelectSection(
        count=int(select_raw["count"]) if "count" in select_raw else None,
        fraction=float(select_raw["fraction"]) if "fraction" in select_raw else None,
        connective=str(select_raw.get("connective", "потому что")),
    )
    if select.count is None and select.fraction is None:
        select = SelectSection(count=3500, fraction=None, connective=select.connective)
    if select.count is not None and select.fraction is not None:
        raise ConfigError("[select] must define count or fraction, not both")

    lm_raw = raw.get("lm", {})
    backends_raw = lm_raw.get("backends")
    if backends_raw:
        backends = tuple(
            LmBackend(
                id=str(b["id"]),
                source=str(b.get("source", "selected")),
                order=int(b.get("order", lm_raw.get("order", 3))),
                discount=float(b.get("discount", lm_raw.get("discount", 0.75))),
            )
            for b in backends_raw
        )
    else:
        order = int(lm_raw.get("order", 3))
        discount = float(lm_raw.get("discount", 0.75))
        backends = (
            LmBackend(id="tuned", source="selected", order=order, discount=discount),
            LmBackend(id="baseline", source="corpus", order=order, discount=discount),
        )
    if len({b.id for b in backends}) != len(backends):
        raise ConfigError("[lm.backends] ids must be unique")
    lm = LmSection(backends=backends, holdout_frac=float(lm_raw.get("holdout_frac", 0.125)))

    generate_raw = raw.get("generate", {})
    if "prompts" not in generate_raw:
        raise ConfigError("[generate] must define the prompts file path")
    generate = GenerateSection(
        prompts=_resolve(base, generate_raw["prompts"]),
        top_k=int(generate_raw.get("top_k", 50)),
        top_p=float(generate_raw.get("top_p", 0.92)),
        num_samples=int(generate_raw.get("num_samples", 20)),
        max_tokens=int(generate_raw.get("max_tokens", 40)),
    )

    annotation_raw = raw.get("annotation", {})
    simulate = None
    if "simulate" in annotation_raw:
        simulate_raw = annotation_raw["simulate"]
        simulate = SimulateSection(
            annotators=tuple(simulate_raw.get("annotators", ("a1", "a2", "a3", "a4"))),
            premise_rates={str(k): float(v) for k, v in simulate_raw.get("premise_rates", {}).items()},
            default_premise_rate=float(simulate_raw.get("default_premise_rate", 0.5)),
            flip_prob=float(simulate_raw.get("flip_prob", 0.15)),
        )
    labels_default = out_dir / "labels.tsv"
    annotation = AnnotationSection(
        labels=_resolve(base, annotation_raw["labels"]) if "labels" in annotation_raw else labels_default,
        quorum=int(annotation_raw.get("quorum", 3)),
        n_annotators=int(annotation_raw.get("n_annotators", 4)),
        simulate=simulate,
    )

    config = PipelineConfig(
        base_dir=base,
        out_dir=out_dir,
        seed=seed,
        ingest=ingest,
        features=features,
        train=train,
        cv=cv,
        select=select,
        lm=lm,
        generate=generate,
        annotation=annotation,
    )
    _validate_inputs(config)
    return config


def _validate_inputs(config: PipelineConfig) -> None:
    required = [
        config.ingest.documents,
        config.ingest.labeled,
        config.features.markers,
        config.generate.prompts,
    ]
    if config.ingest.abbreviations is not None:
        required.append(config.ingest.abbreviations)
    if config.features.pos_lexicon is not None:
        required.append(config.features.pos_lexicon)
    missing = [str(p) for p in required if not p.exists()]
    if missing:
        raise MissingInputError(", ".join(missing))
