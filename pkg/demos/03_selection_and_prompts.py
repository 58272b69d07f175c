#!/usr/bin/env python3
"""Confidence-based self-labeling: rank a scored corpus, keep the top slice,
and render connective-prefixed training lines and connective-suffixed prompts.

Run: python3 demos/03_selection_and_prompts.py
"""

import argforge
from argforge.selection import (
    PromptSpec,
    ScoredSentence,
    load_prompts,
    make_prompt,
    make_training_line,
    rank_and_select,
)

print("=== ranking and selection ===")
scored = [
    ScoredSentence("s1", "поэтому ставки выросли", 0.97),
    ScoredSentence("s2", "банки открылись утром", 0.22),
    ScoredSentence("s3", "так как спрос упал, цены снизились", 0.95),
    ScoredSentence("s4", "сегодня вторник", 0.05),
    ScoredSentence("s5", "однако доходы выросли", 0.91),
    ScoredSentence("s6", "кроме того, налоги снизились", 0.89),
]
top = rank_and_select(scored, count=3)
for item in top:
    print(f"  rank {item.rank}: {item.score:.2f}  {item.text}")

# the published run selected an absolute 3,500 of 68,859 (~5.08%): the count,
# not the rounded fraction, is authoritative when both could apply
print(f"\n  round(0.05 * 68859) = {round(0.05 * 68859)} != 3500")

print("\n=== generator training lines (connective prefix) ===")
for item in top:
    print(f"  {make_training_line(item.text)!r}")

print("\n=== generation prompts (connective suffix) ===")
spec = PromptSpec(claim_text="Сбережения следует хранить в рублях")
print(f"  {make_prompt(spec)!r}")

print("\n=== the 20 shipped prompting claims ===")
for prompt in load_prompts(argforge.data_path("prompts_economic.tsv")):
    print(f"  {prompt.claim_id}  {prompt.claim_text}  ({prompt.gloss})")
