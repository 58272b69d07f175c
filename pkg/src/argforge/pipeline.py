"""Stage implementations behind the CLI: each stage reads declared inputs,
writes artifacts atomically, and emits a run manifest of content hashes."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import agreement as agreement_mod
from . import ingest as ingest_mod
from .config import MissingInputError, PipelineConfig
from .features import (
    FeatureSchema,
    MarkerLexicon,
    format_sparse_row,
    featurize,
    parse_sparse_row,
    vectors_to_matrix,
)
from .evaluation import cross_validate
from .gbdt import deserialize as gbdt_deserialize
from .gbdt import serialize as gbdt_serialize
from .gbdt import train_gbdt
from .manifest import atomic_write_bytes, atomic_write_json, atomic_write_text, derive_seed, write_manifest
from .ngram import (
    REFERENCE_VALIDATION_PERPLEXITY,
    GeneratedCandidate,
    generate as lm_generate,
    perplexity,
    serialize as lm_serialize,
    deserialize as lm_deserialize,
    train_lm,
)
from .selection import (
    ScoredSentence,
    load_prompts,
    make_prompt,
    make_training_line,
    rank_and_select,
)
from .tagging import LexiconTagger, load_pos_lexicon

CORPUS = "corpus.jsonl"
LABELED = "labeled.jsonl"
SCHEMA = "schema.json"
FEATURES_LABELED = "features_labeled.txt"
FEATURES_CORPUS = "features_corpus.txt"
CV_REPORT = "cv_report.json"
MODEL = "model.json"
SCORES = "scores.jsonl"
SELECTED = "selected.jsonl"
PREMISES_TRAIN = "premises_train.txt"
LM_REPORT = "lm_report.json"
CANDIDATES = "candidates.jsonl"
TASKS = "tasks.jsonl"
TASK_KEY = "task_key.jsonl"
VOTES = "votes.jsonl"
AGREEMENT = "agreement.json"
REPORT = "report.json"

SIMULATED_TIMESTAMP = "1970-01-01T00:00:00Z"


def lm_artifact(backend_id: str) -> str:
    return f"lm_{backend_id}.json"


class PipelineRunner:
    """Executes pipeline stages against one config."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.config.out_dir.mkdir(parents=True, exist_ok=True)

    # ---- shared resources -------------------------------------------------

    def _require(self, *paths: Path) -> None:
        missing = [str(p) for p in paths if not Path(p).exists()]
        if missing:
            raise MissingInputError(", ".join(missing))

    def _lexicon(self) -> MarkerLexicon:
        return MarkerLexicon.from_tsv(self.config.features.markers)

    def _tagger(self) -> LexiconTagger:
        pos_path = self.config.features.pos_lexicon
        return LexiconTagger(load_pos_lexicon(pos_path) if pos_path else None)

    def _seed(self, stage: str) -> int:
        return derive_seed(self.config.seed, stage)

    def _labeled_matrix(self):
        schema_info = json.loads(self.config.artifact(SCHEMA).read_text(encoding="utf-8"))
        schema = FeatureSchema(
            names=tuple(schema_info["names"]), lexical_size=schema_info["lexical_size"]
        )
        ids, vectors = [], []
        for line in self.config.artifact(FEATURES_LABELED).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            sentence_id, vector = parse_sparse_row(line, schema.schema_id)
            ids.append(sentence_id)
            vectors.append(vector)
        labels_by_id = {
            s.id: 1 if s.gold_label == ingest_mod.PREMISE else 0
            for s in ingest_mod.read_corpus(self.config.artifact(LABELED))
        }
        matrix = vectors_to_matrix(vectors, schema)
        labels = np.array([labels_by_id[i] for i in ids], dtype=np.int64)
        return schema, ids, matrix, labels

    # ---- stages -----------------------------------------------------------

    def ingest(self):
        cfg = self.config
        self._require(cfg.ingest.documents, cfg.ingest.labeled)
        abbreviations = (
            ingest_mod.load_abbreviations(cfg.ingest.abbreviations)
            if cfg.ingest.abbreviations
            else frozenset()
        )
        documents = ingest_mod.read_documents(cfg.ingest.documents)
        sentences = []
        for document in documents:
            sentences.extend(ingest_mod.segment(document, abbreviations))
        sentences = ingest_mod.length_filter(
            sentences, cfg.ingest.lower_frac, cfg.ingest.upper_frac
        )
        sentences = ingest_mod.dedup(sentences)
        corpus_text = "".join(
            json.dumps(ingest_mod.sentence_to_record(s), ensure_ascii=False, sort_keys=True) + "\n"
            for s in sentences
        )
        atomic_write_text(cfg.artifact(CORPUS), corpus_text)

        rules = [
            ingest_mod.LabelMapRule(source, target)
            for source, target in sorted(cfg.ingest.label_rules.items())
        ]
        labeled, counts = ingest_mod.load_labeled_corpus(cfg.ingest.labeled, rules)
        labeled_text = "".join(
            json.dumps(ingest_mod.sentence_to_record(s), ensure_ascii=False, sort_keys=True) + "\n"
            for s in labeled
        )
        atomic_write_text(cfg.artifact(LABELED), labeled_text)
        print(
            f"ingest: {len(sentences)} corpus sentences; labeled: "
            f"{counts['premise']} premise / {counts['non_premise']} non-premise "
            f"/ {counts['excluded']} excluded"
        )
        inputs = {"documents": cfg.ingest.documents, "labeled": cfg.ingest.labeled}
        if cfg.ingest.abbreviations:
            inputs["abbreviations"] = cfg.ingest.abbreviations
        return write_manifest(
            cfg.out_dir,
            "ingest",
            self._seed("ingest"),
            inputs,
            {CORPUS: cfg.artifact(CORPUS), LABELED: cfg.artifact(LABELED)},
        )

    def featurize(self):
        cfg = self.config
        self._require(cfg.artifact(CORPUS), cfg.artifact(LABELED), cfg.features.markers)
        lexicon = self._lexicon()
        tagger = self._tagger()
        schema = FeatureSchema.for_lexicon(lexicon)
        atomic_write_json(
            cfg.artifact(SCHEMA),
            {
                "schema_id": schema.schema_id,
                "dimension": schema.dimension,
                "lexical_size": schema.lexical_size,
                "names": list(schema.names),
            },
        )
        for source, target in ((LABELED, FEATURES_LABELED), (CORPUS, FEATURES_CORPUS)):
            sentences = ingest_mod.read_corpus(cfg.artifact(source))
            lines = []
            for sentence in sentences:
                vector = featurize(sentence, schema, lexicon, tagger, binary=cfg.features.binary)
                lines.append(format_sparse_row(sentence.id, vector))
            atomic_write_text(cfg.artifact(target), "\n".join(lines) + "\n" if lines else "")
        inputs = {
            CORPUS: cfg.artifact(CORPUS),
            LABELED: cfg.artifact(LABELED),
            "markers": cfg.features.markers,
        }
        if cfg.features.pos_lexicon:
            inputs["pos_lexicon"] = cfg.features.pos_lexicon
        return write_manifest(
            cfg.out_dir,
            "featurize",
            self._seed("featurize"),
            inputs,
            {
                SCHEMA: cfg.artifact(SCHEMA),
                FEATURES_LABELED: cfg.artifact(FEATURES_LABELED),
                FEATURES_CORPUS: cfg.artifact(FEATURES_CORPUS),
            },
        )

    def cv_report(self):
        cfg = self.config
        self._require(cfg.artifact(SCHEMA), cfg.artifact(FEATURES_LABELED), cfg.artifact(LABELED))
        _, ids, matrix, labels = self._labeled_matrix()
        report = cross_validate(
            matrix,
            labels,
            ids=ids,
            k=cfg.cv.k,
            grid=list(cfg.cv.grid),
            inner_k=cfg.cv.inner_k,
            seed=self._seed("cv-report"),
        )
        atomic_write_json(cfg.artifact(CV_REPORT), report.to_dict())
        summary = report.summary()
        print(
            "cv-report: macro F1 "
            f"{summary['macro_f1']['mean']:.4f} ± {summary['macro_f1']['std']:.4f}"
        )
        return write_manifest(
            cfg.out_dir,
            "cv-report",
            self._seed("cv-report"),
            {FEATURES_LABELED: cfg.artifact(FEATURES_LABELED), LABELED: cfg.artifact(LABELED)},
            {CV_REPORT: cfg.artifact(CV_REPORT)},
        )

    def train(self):
        cfg = self.config
        self._require(cfg.artifact(SCHEMA), cfg.artifact(FEATURES_LABELED), cfg.artifact(LABELED))
        schema, _, matrix, labels = self._labeled_matrix()
        model = train_gbdt(matrix, labels, cfg.train, schema_id=schema.schema_id)
        atomic_write_bytes(cfg.artifact(MODEL), gbdt_serialize(model))
        return write_manifest(
            cfg.out_dir,
            "train",
            self._seed("train"),
            {FEATURES_LABELED: cfg.artifact(FEATURES_LABELED), LABELED: cfg.artifact(LABELED)},
            {MODEL: cfg.artifact(MODEL)},
        )

    def classify(self):
        cfg = self.config
        self._require(cfg.artifact(MODEL), cfg.artifact(SCHEMA), cfg.artifact(FEATURES_CORPUS), cfg.artifact(CORPUS))
        model = gbdt_deserialize(cfg.artifact(MODEL).read_bytes())
        schema_info = json.loads(cfg.artifact(SCHEMA).read_text(encoding="utf-8"))
        schema = FeatureSchema(
            names=tuple(schema_info["names"]), lexical_size=schema_info["lexical_size"]
        )
        sentences = {s.id: s for s in ingest_mod.read_corpus(cfg.artifact(CORPUS))}
        lines = []
        ids, vectors = [], []
        for line in cfg.artifact(FEATURES_CORPUS).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            sentence_id, vector = parse_sparse_row(line, schema.schema_id)
            ids.append(sentence_id)
            vectors.append(vector)
        scores = model.predict_proba(vectors_to_matrix(vectors, schema))
        for sentence_id, score in zip(ids, scores):
            record = {"id": sentence_id, "text": sentences[sentence_id].text, "score": float(score)}
            lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
        atomic_write_text(cfg.artifact(SCORES), "\n".join(lines) + "\n" if lines else "")
        return write_manifest(
            cfg.out_dir,
            "classify",
            self._seed("classify"),
            {
                MODEL: cfg.artifact(MODEL),
                FEATURES_CORPUS: cfg.artifact(FEATURES_CORPUS),
                CORPUS: cfg.artifact(CORPUS),
            },
            {SCORES: cfg.artifact(SCORES)},
        )

    def select(self):
        cfg = self.config
        self._require(cfg.artifact(SCORES))
        scored = []
        for line in cfg.artifact(SCORES).read_text(encoding="utf-8").splitlines():
            if line.strip():
                record = json.loads(line)
                scored.append(ScoredSentence(record["id"], record["text"], record["score"]))
        selected = rank_and_select(scored, fraction=cfg.select.fraction, count=cfg.select.count)
        selected_text = "".join(
            json.dumps(
                {"id": s.sentence_id, "text": s.text, "score": s.score, "rank": s.rank},
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n"
            for s in selected
        )
        atomic_write_text(cfg.artifact(SELECTED), selected_text)
        training_lines = [
            make_training_line(s.text, cfg.select.connective) for s in selected
        ]
        atomic_write_text(cfg.artifact(PREMISES_TRAIN), "\n".join(training_lines) + "\n")
        print(f"select: kept {len(selected)} of {len(scored)} sentences")
        return write_manifest(
            cfg.out_dir,
            "select",
            self._seed("select"),
            {SCORES: cfg.artifact(SCORES)},
            {SELECTED: cfg.artifact(SELECTED), PREMISES_TRAIN: cfg.artifact(PREMISES_TRAIN)},
        )

    def train_lm(self):
        cfg = self.config
        self._require(cfg.artifact(PREMISES_TRAIN), cfg.artifact(CORPUS))
        premise_lines = [
            ingest_mod.tokenize(line)
            for line in cfg.artifact(PREMISES_TRAIN).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        corpus_lines = [
            list(s.tokens) for s in ingest_mod.read_corpus(cfg.artifact(CORPUS))
        ]
        outputs = {}
        report = {"backends": {}, "reference_validation_perplexity": REFERENCE_VALIDATION_PERPLEXITY}
        for backend in cfg.lm.backends:
            lines = premise_lines if backend.source == "selected" else corpus_lines
            rng = np.random.default_rng(self._seed(f"train-lm:{backend.id}"))
            order = rng.permutation(len(lines))
            n_holdout = int(len(lines) * cfg.lm.holdout_frac)
            holdout = [lines[i] for i in order[:n_holdout]]
            training = [lines[i] for i in order[n_holdout:]]
            if not training:
                training = lines
                holdout = []
            model = train_lm(training, order=backend.order, discount=backend.discount)
            artifact = cfg.artifact(lm_artifact(backend.id))
            atomic_write_bytes(artifact, lm_serialize(model))
            outputs[lm_artifact(backend.id)] = artifact
            entry = {
                "order": backend.order,
                "discount": backend.discount,
                "source": backend.source,
                "n_training_lines": len(training),
                "n_holdout_lines": len(holdout),
                "vocabulary_size": model.vocab_size,
                "training_perplexity": perplexity(model, training),
            }
            if holdout:
                entry["holdout_perplexity"] = perplexity(model, holdout)
            report["backends"][backend.id] = entry
        atomic_write_json(cfg.artifact(LM_REPORT), report)
        outputs[LM_REPORT] = cfg.artifact(LM_REPORT)
        return write_manifest(
            cfg.out_dir,
            "train-lm",
            self._seed("train-lm"),
            {PREMISES_TRAIN: cfg.artifact(PREMISES_TRAIN), CORPUS: cfg.artifact(CORPUS)},
            outputs,
        )

    def generate(self):
        cfg = self.config
        model_paths = {b.id: cfg.artifact(lm_artifact(b.id)) for b in cfg.lm.backends}
        self._require(cfg.generate.prompts, *model_paths.values())
        prompts = load_prompts(cfg.generate.prompts, cfg.select.connective)
        lines = []
        for backend in cfg.lm.backends:
            model = lm_deserialize(model_paths[backend.id].read_bytes())
            for spec in prompts:
                seed = derive_seed(self._seed("generate"), f"{backend.id}:{spec.claim_id}")
                sampler = cfg.generate.sampler(seed)
                candidates = lm_generate(
                    model,
                    make_prompt(spec),
                    sampler,
                    prompt_id=spec.claim_id,
                    model_id=backend.id,
                )
                for candidate in candidates:
                    record = {
                        "prompt_id": candidate.prompt_id,
                        "model_id": candidate.model_id,
                        "text": candidate.text,
                        "seed_used": candidate.seed_used,
                    }
                    lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
        atomic_write_text(cfg.artifact(CANDIDATES), "\n".join(lines) + "\n")
        print(f"generate: {len(lines)} candidates from {len(cfg.lm.backends)} backends")
        inputs = {"prompts": cfg.generate.prompts}
        inputs.update({name: path for name, path in (
            (lm_artifact(b.id), model_paths[b.id]) for b in cfg.lm.backends
        )})
        return write_manifest(
            cfg.out_dir,
            "generate",
            self._seed("generate"),
            inputs,
            {CANDIDATES: cfg.artifact(CANDIDATES)},
        )

    def build_tasks(self):
        cfg = self.config
        self._require(cfg.artifact(CANDIDATES), cfg.generate.prompts)
        candidates = []
        for line in cfg.artifact(CANDIDATES).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            candidates.append(
                GeneratedCandidate(
                    prompt_id=record["prompt_id"],
                    model_id=record["model_id"],
                    text=record["text"],
                    tokens=tuple(record["text"].split()),
                    seed_used=record["seed_used"],
                )
            )
        prompts = load_prompts(cfg.generate.prompts, cfg.select.connective)
        claims = {p.claim_id: p.claim_text for p in prompts}
        tasks = agreement_mod.build_blind_tasks(candidates, claims, self._seed("build-tasks"))
        ordered = sorted(tasks, key=lambda t: t.display_order)
        tasks_text = "".join(
            json.dumps(t.to_annotator_dict(), ensure_ascii=False, sort_keys=True) + "\n"
            for t in ordered
        )
        key_text = "".join(
            json.dumps(
                {"task_id": t.task_id, "model_id": t.hidden_provenance},
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n"
            for t in ordered
        )
        atomic_write_text(cfg.artifact(TASKS), tasks_text)
        atomic_write_text(cfg.artifact(TASK_KEY), key_text)
        return write_manifest(
            cfg.out_dir,
            "build-tasks",
            self._seed("build-tasks"),
            {CANDIDATES: cfg.artifact(CANDIDATES), "prompts": cfg.generate.prompts},
            {TASKS: cfg.artifact(TASKS), TASK_KEY: cfg.artifact(TASK_KEY)},
        )

    def simulate_labels(self):
        """Deterministic stand-in for the human annotators (fixture tooling)."""
        cfg = self.config
        simulate = cfg.annotation.simulate
        if simulate is None:
            raise MissingInputError("[annotation.simulate] is not configured")
        self._require(cfg.artifact(TASKS), cfg.artifact(TASK_KEY))
        tasks = agreement_mod.read_tasks(cfg.artifact(TASKS))
        key = agreement_mod.read_key(cfg.artifact(TASK_KEY))
        rng = np.random.default_rng(self._seed("simulate-labels"))
        rows = []
        for task in tasks:
            model = key[task["task_id"]]
            rate = simulate.premise_rates.get(model, simulate.default_premise_rate)
            latent = ingest_mod.PREMISE if rng.random() < rate else ingest_mod.NON_PREMISE
            for annotator in simulate.annotators:
                label = latent
                if rng.random() < simulate.flip_prob:
                    label = (
                        ingest_mod.NON_PREMISE
                        if latent == ingest_mod.PREMISE
                        else ingest_mod.PREMISE
                    )
                rows.append(f"{task['task_id']}\t{annotator}\t{label}\t{SIMULATED_TIMESTAMP}")
        cfg.annotation.labels.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(cfg.annotation.labels, "\n".join(rows) + "\n")
        return write_manifest(
            cfg.out_dir,
            "simulate-labels",
            self._seed("simulate-labels"),
            {TASKS: cfg.artifact(TASKS), TASK_KEY: cfg.artifact(TASK_KEY)},
            {"labels": cfg.annotation.labels},
        )

    def vote(self):
        cfg = self.config
        self._require(cfg.annotation.labels)
        labels = agreement_mod.read_labels(cfg.annotation.labels)
        grouped = agreement_mod.group_labels(labels)
        lines = []
        for task_id in sorted(grouped):
            result = agreement_mod.majority_vote(
                grouped[task_id],
                n_annotators=cfg.annotation.n_annotators,
                quorum=cfg.annotation.quorum,
            )
            record = {
                "task_id": result.task_id,
                "final_label": result.final_label,
                "vote_counts": result.vote_counts,
                "quorum": result.quorum,
            }
            lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
        atomic_write_text(cfg.artifact(VOTES), "\n".join(lines) + "\n")
        return write_manifest(
            cfg.out_dir,
            "vote",
            self._seed("vote"),
            {"labels": cfg.annotation.labels},
            {VOTES: cfg.artifact(VOTES)},
        )

    def agree(self):
        cfg = self.config
        self._require(cfg.annotation.labels)
        labels = agreement_mod.read_labels(cfg.annotation.labels)
        result = agreement_mod.krippendorff_alpha(agreement_mod.labels_to_matrix(labels))
        payload = result.to_dict()
        payload["reference_alpha"] = agreement_mod.REFERENCE_ALPHA
        payload["reference_band"] = agreement_mod.landis_koch_band(agreement_mod.REFERENCE_ALPHA)
        atomic_write_json(cfg.artifact(AGREEMENT), payload)
        print(f"agree: alpha={result.alpha:.4f} ({result.interpretation})")
        return write_manifest(
            cfg.out_dir,
            "agree",
            self._seed("agree"),
            {"labels": cfg.annotation.labels},
            {AGREEMENT: cfg.artifact(AGREEMENT)},
        )

    def report(self):
        cfg = self.config
        self._require(cfg.artifact(VOTES), cfg.artifact(TASK_KEY), cfg.artifact(AGREEMENT))
        votes = []
        for line in cfg.artifact(VOTES).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            votes.append(
                agreement_mod.VoteResult(
                    task_id=record["task_id"],
                    final_label=record["final_label"],
                    vote_counts=record["vote_counts"],
                    quorum=record["quorum"],
                )
            )
        key = agreement_mod.read_key(cfg.artifact(TASK_KEY))
        stored = json.loads(cfg.artifact(AGREEMENT).read_text(encoding="utf-8"))
        agreement_result = agreement_mod.AgreementResult(
            alpha=stored["alpha"],
            d_observed=stored["D_o"],
            d_expected=stored["D_e"],
            n_units_used=stored["n_units_used"],
            interpretation=stored["band"],
        )
        payload = agreement_mod.render_report(votes, key, agreement_result)
        atomic_write_json(cfg.artifact(REPORT), payload)
        return write_manifest(
            cfg.out_dir,
            "report",
            self._seed("report"),
            {
                VOTES: cfg.artifact(VOTES),
                TASK_KEY: cfg.artifact(TASK_KEY),
                AGREEMENT: cfg.artifact(AGREEMENT),
            },
            {REPORT: cfg.artifact(REPORT)},
        )

    # ---- orchestration ----------------------------------------------------

    def stage_plan(self) -> list[str]:
        """Stages run-all executes, decided by config alone."""
        plan = ["ingest", "featurize"]
        if self.config.cv.enabled and self.config.cv.grid:
            plan.append("cv-report")
        plan.extend(["train", "classify", "select", "train-lm", "generate", "build-tasks"])
        if self.config.annotation.simulate is not None:
            plan.extend(["simulate-labels", "vote", "agree", "report"])
        return plan

    def run_stage(self, name: str):
        try:
            method = STAGES[name]
        except KeyError:
            raise ValueError(f"unknown stage {name!r}; expected one of {sorted(STAGES)}") from None
        return method(self)

    def run_all(self) -> list[Path]:
        return [self.run_stage(name) for name in self.stage_plan()]


STAGES = {
    "ingest": PipelineRunner.ingest,
    "featurize": PipelineRunner.featurize,
    "cv-report": PipelineRunner.cv_report,
    "train": PipelineRunner.train,
    "classify": PipelineRunner.classify,
    "select": PipelineRunner.select,
    "train-lm": PipelineRunner.train_lm,
    "generate": PipelineRunner.generate,
    "build-tasks": PipelineRunner.build_tasks,
    "simulate-labels": PipelineRunner.simulate_labels,
    "vote": PipelineRunner.vote,
    "agree": PipelineRunner.agree,
    "report": PipelineRunner.report,
}
