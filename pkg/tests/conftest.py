import pytest

import argforge
from argforge.config import load_config
from argforge.pipeline import PipelineRunner
from argforge.synthetic import build_documents, build_labeled_records, write_documents_jsonl, write_labeled_jsonl

CONFIG_TEMPLATE = """\
seed = 42
out_dir = "out"

[ingest]
documents = "docs.jsonl"
labeled = "labeled.jsonl"
abbreviations = "{abbreviations}"
lower_frac = 0.10
upper_frac = 0.10

[ingest.label_rules]
argument = "premise"
background = "non_premise"
heading = "exclude"

[features]
markers = "{markers}"
pos_lexicon = "{pos_lexicon}"

[train]
n_trees = 12
max_depth = 3

[cv]
k = 3
inner_k = 2

[cv.grid]
n_trees = [4, 10]
max_depth = [2]

[select]
count = 40

[lm]
order = 3
holdout_frac = 0.125

[generate]
prompts = "{prompts}"
top_k = 50
top_p = 0.92
num_samples = 20
max_tokens = 30

[annotation]
quorum = 3
n_annotators = 4

[annotation.simulate]
annotators = ["a1", "a2", "a3", "a4"]
flip_prob = 0.12
default_premise_rate = 0.5

[annotation.simulate.premise_rates]
tuned = 0.72
baseline = 0.45
"""


def write_fixture_tree(root, n_labeled=240, n_docs=50, seed=7):
    """Synthetic corpus files plus a config.toml wired to the shipped lexicons."""
    write_labeled_jsonl(root / "labeled.jsonl", build_labeled_records(n_labeled, seed=seed))
    write_documents_jsonl(root / "docs.jsonl", build_documents(n_docs, seed=seed + 1))
    config_text = CONFIG_TEMPLATE.format(
        abbreviations=argforge.data_path("abbreviations_ru.txt"),
        markers=argforge.data_path("markers_ru.tsv"),
        pos_lexicon=argforge.data_path("pos_lexicon_ru.tsv"),
        prompts=argforge.data_path("prompts_economic.tsv"),
    )
    config_path = root / "config.toml"
    config_path.write_text(config_text, encoding="utf-8")
    return config_path


@pytest.fixture(scope="session")
def fixture_workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("workspace")
    config_path = write_fixture_tree(root)
    return {"root": root, "config_path": config_path}


@pytest.fixture(scope="session")
def pipeline_run(fixture_workspace):
    """One full run-all over the fixture config, shared across tests."""
    config = load_config(fixture_workspace["config_path"])
    runner = PipelineRunner(config)
    manifests = runner.run_all()
    return {"config": config, "manifests": manifests, **fixture_workspace}
