"""Spectral fields on the torus: projection, norms, transforms."""
import numpy as np

from hyperns.spectral import (
    SpectralField, TorusConfig, apply_fractional_stokes, from_physical,
    leray_project, random_field, sobolev_norm, to_physical,
)

torus = TorusConfig(period_L=2 * np.pi, trunc_n=6)   # grid defaults to 3 n = 18
print(torus, "modes:", torus.lattice.size)

# a single real Fourier pair, u = 2 cos(x) e_y
u = SpectralField.from_modes(torus, {(1, 0, 0): np.array([0.0, 1.0, 0.0])})
g = to_physical(u)
print("u_y along x:", np.round(g[1][:, 0, 0][:5], 6))

# the Leray projector removes the part parallel to k
w = leray_project((torus, {(1, 1, 0): np.array([1.0, 0.0, 0.0])}))
print("P e_x at k=(1,1,0):", w.coeffs[w.lattice.index_of((1, 1, 0))].real)

# Sobolev norms grow with s because lambda >= 1 on this box
v = random_field(torus, np.random.default_rng(0), beta=1.0)
for s in (0, 1, 1.25, 2):
    print(f"|v|_{s} = {sobolev_norm(v, s):.4f}")

# A^alpha multiplies each mode by lambda^alpha
print("|A^1.25 v|_0 == |v|_2.5:",
      np.isclose(sobolev_norm(apply_fractional_stokes(v, 1.25), 0), sobolev_norm(v, 2.5)))

back = from_physical(to_physical(v), torus)
print("round-trip error:", np.abs(back.coeffs - v.coeffs).max())
