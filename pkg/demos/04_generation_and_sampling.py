#!/usr/bin/env python3
"""The n-gram generation backend: training, Top-K/Top-p nucleus sampling,
candidate generation, and perplexity.

Run: python3 demos/04_generation_and_sampling.py
"""

import numpy as np

from argforge.ingest import tokenize
from argforge.ngram import NgramModel, generate, perplexity, train_lm
from argforge.sampling import SamplerConfig, nucleus_candidates
from argforge.selection import make_training_line

training_sentences = [
    "ставки выросли на пять процентов",
    "ставки снизились из-за инфляции",
    "банки предлагают новые вклады",
    "доходы клиентов выросли",
    "цены на облигации упали",
    "вклады стали выгоднее депозитов",
    "спрос на кредиты вырос",
    "инфляция замедлилась в этом году",
]
lines = [tokenize(make_training_line(s)) for s in training_sentences]
model = train_lm(lines, order=3, discount=0.75)
print(f"=== trained order-3 model: vocabulary {model.vocab_size} tokens ===")

print("\n=== next-token distribution after the connective ===")
dist = model.next_token_dist(["потому", "что"])
best = np.argsort(-dist)[:5]
for index in best:
    print(f"  P({model.vocab[index]!r}) = {dist[index]:.4f}")
print(f"  sum over vocabulary = {dist.sum():.12f}")

print("\n=== Top-K / Top-p truncation on a toy distribution ===")
toy = np.array([0.5, 0.3, 0.15, 0.05])
for top_k, top_p in ((3, 0.8), (1, 0.99), (4, 1.0)):
    kept = nucleus_candidates(toy, top_k, top_p)
    print(f"  K={top_k} p={top_p}: candidate ids {list(kept)}")

print("\n=== sampled candidates (Top-K=50, Top-p=0.92, 20 per prompt) ===")
config = SamplerConfig(top_k=50, top_p=0.92, seed=7, max_tokens=12, num_samples=20)
candidates = generate(model, "Деньги нужно вкладывать в акции потому что", config,
                      prompt_id="p05", model_id="demo")
for candidate in candidates[:6]:
    print(f"  (seed {candidate.seed_used}) {candidate.text}")
print(f"  ... {len(candidates)} candidates total; a rerun reproduces them bit-for-bit")

print("\n=== perplexity ===")
print(f"  training data : {perplexity(model, lines):8.3f}")
held_out = [tokenize("потому что вклады выросли")]
print(f"  held-out line : {perplexity(model, held_out):8.3f}")
uniform = NgramModel.uniform(model.vocab)
print(f"  uniform model : {perplexity(uniform, lines):8.3f}  (= vocabulary size {uniform.vocab_size})")
