"""Affordance-conditioned intention and full-body motion prediction.

Subpackages:
  autodiff   reverse-mode AD engine, Adam, checkpoints
  scene      planes, objects, skeletons, plane feature grids, SDF
  densities  MDN / diagonal Gaussian / von Mises-Fisher posteriors
  affordance placeability and graspability models, baselines, training
  trajopt    recurrent predictor, goal-constrained L-BFGS optimization
  harness    synthetic episode generator, dataset extraction, benchmark, CLI
"""

__version__ = "0.1.0"
