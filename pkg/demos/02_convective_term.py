"""The projected convective term and the identities behind the energy estimates."""
import numpy as np

from hyperns.nonlinear import bilinear_B, bilinear_B_direct, estimate_inequality_constant, pairing
from hyperns.spectral import TorusConfig, random_field, sobolev_norm

torus = TorusConfig(2 * np.pi, 4)
rng = np.random.default_rng(1)
u, v, w = (random_field(torus, rng, beta=0.5) for _ in range(3))

# pseudo-spectral product vs. explicit convolution over mode pairs
fast, slow = bilinear_B(u, v), bilinear_B_direct(u, v)
print("FFT vs convolution:", np.abs(fast.coeffs - slow.coeffs).max())

# <B(u,u),u> = 0 and <B(u,v),w> = -<B(u,w),v>
print("<B(u,u),u> =", pairing(bilinear_B(u, u), u))
print("<B(u,v),w> + <B(u,w),v> =", pairing(bilinear_B(u, v), w) + pairing(bilinear_B(u, w), v))

# empirical constants in the trilinear estimates (evidence, not proof)
for tag in ("Bcon4", "BconA", "B1_m1"):
    rep = estimate_inequality_constant(tag, 1.25, trials=200, seed=0, torus=torus)
    print(f"{tag}: max ratio {rep.max_ratio:.4f} (witness trial {rep.witness_trial})")
print("|B(u,v)|_1 =", sobolev_norm(fast, 1))
