"""Norm tracking across Galerkin levels, and which regimes the theory covers."""
import numpy as np

from hyperns.dynamics import HypothesisError, SolverConfig, regime_flags, regularity_suite
from hyperns.spectral import TorusConfig

torus = TorusConfig(2 * np.pi, 8)

for alpha in (1.1, 1.25, 1.5):
    print(f"alpha={alpha}: s=1 flags {regime_flags(alpha, 0.76, 1)}")

cfg = SolverConfig(torus=torus, gamma=1.2, dt=0.01, T=0.5)
print(regularity_suite(cfg, 2, seeds=range(2), levels=(4, 8)).summary())

try:
    regularity_suite(SolverConfig(torus=torus, gamma=0.76), 2, seeds=[0])
except HypothesisError as err:
    print("refused:", err)
