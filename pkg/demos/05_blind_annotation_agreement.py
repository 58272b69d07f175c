#!/usr/bin/env python3
"""Blind annotation protocol: shuffled claim-sentence tasks with hidden
provenance, quorum voting, Krippendorff's alpha, and the per-model report.

Run: python3 demos/05_blind_annotation_agreement.py
"""

import json

import numpy as np

from argforge.agreement import (
    AnnotatorLabel,
    build_blind_tasks,
    group_labels,
    krippendorff_alpha,
    labels_to_matrix,
    majority_vote,
    render_report,
)
from argforge.ngram import GeneratedCandidate

claims = {"p01": "Деньги нужно вкладывать в акции", "p02": "Сбережения следует хранить в рублях"}
candidates = []
for model_id, quality in (("tuned", 0.8), ("baseline", 0.45)):
    for i in range(10):
        candidates.append(
            GeneratedCandidate(
                prompt_id="p01" if i % 2 else "p02",
                model_id=model_id,
                text=f"доходность выше инфляции, вариант {len(candidates)}",
                tokens=("x",),
                seed_used=i,
            )
        )

print("=== blind task construction ===")
tasks = build_blind_tasks(candidates, claims, seed=5)
facing = tasks[0].to_annotator_dict()
print(f"  {len(tasks)} tasks; annotator-facing keys: {sorted(facing)} (no model id)")
print(f"  first task: {json.dumps(facing, ensure_ascii=False)[:100]}...")

print("\n=== four simulated annotators, quorum 3 of 4 ===")
rng = np.random.default_rng(9)
quality = {"tuned": 0.8, "baseline": 0.45}
labels = []
for task in tasks:
    latent = "premise" if rng.random() < quality[task.hidden_provenance] else "non_premise"
    for annotator in ("a1", "a2", "a3", "a4"):
        observed = latent
        if rng.random() < 0.15:  # annotator noise
            observed = "non_premise" if latent == "premise" else "premise"
        labels.append(AnnotatorLabel(task.task_id, annotator, observed))

votes = [majority_vote(group) for group in group_labels(labels).values()]
assigned = sum(1 for v in votes if v.final_label != "unassigned")
print(f"  {len(votes)} tasks voted, {assigned} assigned, {len(votes) - assigned} without quorum")

print("\n=== chance-corrected agreement ===")
agreement = krippendorff_alpha(labels_to_matrix(labels))
print(f"  alpha = {agreement.alpha:.4f}  (D_o={agreement.d_observed:.4f},"
      f" D_e={agreement.d_expected:.4f})  band: {agreement.interpretation}")
print("  published reference: alpha = 0.4772, also 'moderate' on the same scale")

print("\n=== per-model premise report ===")
key = {task.task_id: task.hidden_provenance for task in tasks}
report = render_report(votes, key, agreement)
for model_id, row in report["models"].items():
    print(f"  {model_id:9} premise {row['premise']:3} / {row['premise_pct']:5.1f}%   "
          f"non-premise {row['non_premise']:3} / {row['non_premise_pct']:5.1f}%   "
          f"unassigned {row['unassigned']}")
overall = report["overall"]
print(f"  overall   premise {overall['premise']:3} / {overall['premise_pct']:5.1f}%   "
      f"assigned {overall['assigned']} ({overall['assigned_pct']}% of voted)")
