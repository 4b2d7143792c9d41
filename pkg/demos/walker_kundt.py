"""Walker obstruction and integrability triple on Kundt metrics.

For a Kundt congruence the Weyl components W(k, l, k, e) and W(k, l, e, e)
are fixed by the derivatives of pi.  When both vanish the conformal class
can carry a recurrent null direction.  The integrability triple then measures
what is left: zero for a flat screen, the screen Weyl tensor for S^2 x S^2.
"""

import numpy as np

from optgeom import conformal, metrics
from optgeom.curvature import curvature
from optgeom.optical import analyze


def main():
    for name in ("pp_wave", "walker_recurrent", "kundt_walker", "kundt_walker_shifted", "kundt_general"):
        e = metrics.entry(name)
        p = e.sample_points[0]
        an = analyze(e.model, e.congruence("kappa"), p)
        w = conformal.walker_obstruction(curvature(e.model, p), an.frame, an.report)
        wc = conformal.walker_conditions(e.model, e.congruence("kappa"), p)
        c1, c2 = wc["coefficients"]
        rel = max(np.max(np.abs(wc["W_klke"] - c1 * wc["lie_pi"])), np.max(np.abs(wc["W_klee"] - c2 * wc["curl_pi"])))
        print(f"{name:<22} |obstruction| = {np.max(np.abs(w)):.2e}   |pi| = {np.linalg.norm(an.inv.pi):.3f}   "
              f"Weyl vs pi derivatives: {rel:.1e}")

    for name in ("kundt_general", "kundt_curved_screen"):
        e = metrics.entry(name)
        p = e.sample_points[0]
        an = analyze(e.model, e.congruence("kappa"), p)
        parts = conformal.integrability_obstruction(curvature(e.model, p), an.frame)
        print(f"{name:<22} integrability triple: {[f'{np.max(np.abs(x)):.3f}' for x in parts]}")


if __name__ == "__main__":
    main()
