"""The one-parameter family of adapted connections on Kerr.

For the twisting, non-shearing Kerr congruence every member of the family
preserves the line of kappa and the conformal screen metric, so the three
defects vanish for every t.  The torsion does not: its totally skew part
disappears at one value of t and its part symmetric in the last two slots at
another.  The scan below shows where.
"""

import numpy as np

from optgeom import adapted, metrics
from optgeom.optical import analyze


def main():
    e = metrics.entry("kerr4")
    spec = e.congruence("kappa")
    p = e.sample_points[0]
    an = analyze(e.model, spec, p)
    print(f"kerr4 kappa at {np.round(p, 3)}: rho = {an.inv.rho:.4f}, |tau| = {np.linalg.norm(an.inv.tau):.4f}")
    print(f"{'t':>6} {'max defect':>12} {'|T_[abc]|':>12} {'|T_a(bc)|':>12}")
    for t in np.linspace(-3, 2, 11):
        c = adapted.connection_family(an.inv, an.frame, t, an.nk, an.report)
        alt, sym = adapted.torsion_parts(c.torsion)
        print(f"{t:6.2f} {c.max_defect():12.2e} {np.max(np.abs(alt)):12.2e} {np.max(np.abs(sym)):12.2e}")

    af = adapted.adapt_frame_max_twist(an.inv, an.frame, an.report)
    print(f"\nmax-twist adapted frame: null rotation z = {np.round(af.z, 6) + 0.0}, residuals {af.residuals}")
    tn = adapted.normalize_twist(e.model, spec, p, require_nonexpanding=False)
    print(f"twist normalisation: s = {tn.s:.6f}, tau~.tau~ = {tn.norm_sq:.12f} (2d = {2 * tn.d})")
    print(f"involutivity residual of m = e1 - i e2: {adapted.involutivity_residual(e.model, spec, p):.2e}")


if __name__ == "__main__":
    main()
