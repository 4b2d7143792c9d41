"""Removing the expansion of a geodetic congruence by a conformal factor.

Under g -> exp(2 Upsilon) g with the same generator the expansion shifts by
n k(Upsilon).  Along one ray of the Schwarzschild congruence, integrating
Upsilon' = -rho / n makes the rescaled congruence non-expanding there; for
k = d_r this reproduces Upsilon = -ln(r / r0).  The second half checks the
shift law for random factors on Kerr.
"""

import numpy as np

from optgeom import conformal, metrics


def main():
    e = metrics.entry("schwarzschild_tangherlini")
    p = e.sample_points[0]
    q = conformal.nonexpanding_along_curve(e.model, e.congruence("kappa"), p, length=0.3, step=1e-3)
    print(f"Schwarzschild ray from r0 = {p[1]:.4f}")
    for i in range(0, len(q.s), 60):
        r = q.x[i, 1]
        print(f"  s = {q.s[i]:.3f}  r = {r:.5f}  Upsilon = {q.upsilon[i]:+.10f}  -ln(r/r0) = {-np.log(r / p[1]):+.10f}")

    rng = np.random.default_rng(0)
    e = metrics.entry("kerr4")
    spec = e.congruence("kappa")
    p = e.sample_points[0]
    worst = max(conformal.expansion_shift_check(e.model, spec, p, conformal.polynomial_factor(rng, 4, 0.1, p))
                for _ in range(20))
    print(f"\nKerr, 20 random factors: max |rho_hat - (rho + n k(Upsilon))| = {worst:.2e}")


if __name__ == "__main__":
    main()
