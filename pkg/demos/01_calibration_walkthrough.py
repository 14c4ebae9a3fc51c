"""
Calibrating a routing model on a synthetic world
================================================

Builds a world with known ground truth, samples a binary response matrix
from it, fits the two-parameter logistic model, and checks how well the
fitted abilities line up with the hidden true ones.
"""

import numpy as np

from routeiq import (
    TrainingConfig,
    ability_ordering,
    bce_loss,
    generate_world,
    item_params,
    sample_matrix,
    train,
)

# A small world: 8 configurations (one model family over the budget
# ladder), 320 queries, 8-dimensional embeddings.
world = generate_world(n_configs=8, n_queries=320, dim=8, seed=42)
matrix = sample_matrix(world)
print(f"world: {len(world.configs)} configs x {len(world.queries)} queries, "
      f"{len(matrix.cells)} observed cells")

# Fit. Minibatch Adam; identical seeds give bit-identical parameters.
result = train(matrix, world.embeddings, TrainingConfig(epochs=200, seed=0))
print(f"final training loss: {result.final_loss:.4f} "
      f"(epoch 1 was {result.epoch_losses[0]:.4f})")

# Compare fitted abilities against the world's hidden truth. Ranks are
# what routing consumes, so rank correlation is the interesting number.
ids = [c.id for c in world.configs]
true = np.array([world.true_theta[c] for c in ids])
fitted = np.array([result.params.theta[c] for c in ids])
print("\nconfig          true theta   fitted theta")
for c in ids:
    print(f"{c:<14}  {world.true_theta[c]:>+9.3f}   {result.params.theta[c]:>+9.3f}")
rank_true = np.argsort(np.argsort(true))
rank_fit = np.argsort(np.argsort(fitted))
rho = np.corrcoef(rank_true, rank_fit)[0, 1]
print(f"\nability ranking (best first): {ability_ordering(result.params)}")
print(f"rank correlation with the truth: {rho:.3f}")

# Item parameters are linear in the query embedding, so any embedded
# query gets a difficulty and discrimination, seen during training or not.
probe = world.embeddings[world.queries[0]]
a, b = item_params(result.params, probe)
print(f"\nfirst query: discrimination a={a:.3f}, difficulty b={b:.3f}")

# Held-in loss of the fit versus the generating model. The fit cannot
# beat the truth by much without overfitting; close is what we want.
fit_bce = bce_loss(result.params, matrix, world.embeddings)
true_bce = bce_loss(world.true_params(), matrix, world.embeddings)
print(f"BCE on the observed matrix: fitted {fit_bce:.4f} vs true model {true_bce:.4f}")
