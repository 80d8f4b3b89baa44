"""Linear-chain CRF mechanics: scoring, normalization, decoding, learning.

Shows that the log-space forward recursion matches brute-force enumeration,
that Viterbi finds the enumeration argmax, and that gradient training on the
negative log-likelihood pushes the decoded path onto the gold labels.
"""

import numpy as np

from absalab.crf import CrfParams, brute_force_oracle, log_partition, nll, path_score, viterbi
from absalab.optim import AdamConfig, ParamStore, adam_step, forward_backward

rng = np.random.default_rng(7)

store = ParamStore()
params = CrfParams.create(store, "crf", input_dim=4, rng=rng, dtype=np.float64)
params.transitions.data[...] = rng.normal(size=(3, 3))
params.start.data[...] = rng.normal(size=3)
params.end.data[...] = rng.normal(size=3)

emissions = rng.normal(size=(5, 3))

log_z = log_partition(emissions, params).item()
oracle_log_z, oracle_best = brute_force_oracle(emissions, params)
print("forward recursion log Z:", round(log_z, 10))
print("enumeration log Z:      ", round(oracle_log_z, 10))
print("viterbi path:", viterbi(emissions, params), "enumeration argmax:", oracle_best)

gold = ["O", "B", "I", "O", "B"]
print("gold path score:", round(path_score(emissions, gold, params).item(), 4))
print("gold nll before training:", round(nll(emissions, gold, params).item(), 4))

# Train the CRF parameters (and the emissions, as a stand-in for an encoder)
# to make the gold path the decoded one.
features = store.param("features", rng.normal(size=(5, 4)))


def loss_fn():
    scores = features @ params.emission_weight + params.emission_bias
    return nll(scores, gold, params)


cfg = AdamConfig(lr=0.05)
for step in range(150):
    value = forward_backward(store, loss_fn)
    adam_step(store, cfg)

final_scores = features.data @ params.emission_weight.data + params.emission_bias.data
print("nll after training:", round(loss_fn().item(), 5))
print("decoded after training:", viterbi(final_scores, params), "gold:", gold)
