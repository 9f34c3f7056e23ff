# End-to-end decomposition on synthetic three-block data whose latent scores
# are fully joint, pairwise partially joint, and individual. The pipeline
# extracts per-block signal subspaces, identifies the sharing pattern at a
# fixed angle threshold, and reconstructs each block from block-sparse
# loadings.

import numpy as np

from psidecomp import (
    estimate_loadings,
    extract_signal,
    generate,
    identify,
    metric_accuracy,
    metric_rse,
    model_preset,
    reconstruct,
    structure_to_json,
)

model = model_preset(5, snr=15.0, n=120, block_size=100)
truth = generate(model, seed=7)
print("true structure:")
print(structure_to_json(model.structure))

signals = [extract_signal(X, r, check_centering=False)
           for X, r in zip(truth.blocks, model.block_ranks())]
result = identify(signals, model.ordering, np.deg2rad(20.0))
print("\nestimated structure at a 20 degree gate:")
print(structure_to_json(result.structure))
print("structure recovered exactly:", bool(metric_accuracy(result.structure,
                                                           model.structure)))

loads = estimate_loadings(signals, result)
print(f"mean relative reconstruction error: "
      f"{metric_rse(truth, loads, result):.4f}")
for k in range(1, 4):
    Z = truth.signals[k - 1]
    err = np.linalg.norm(Z - reconstruct(loads, result, k)) / np.linalg.norm(Z)
    print(f"  block {k}: relative error {err:.4f}")
