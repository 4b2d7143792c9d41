"""Walk the metric catalog and print the optical class of every congruence.

Each line shows the norms of the five optical invariants at the first sample
point, the flags that hold there, and whether they stay the same at the
other sample points.
"""

import numpy as np

from optgeom import metrics
from optgeom.optical import analyze

SHOWN = ("geodetic", "expanding", "twisting", "shearing", "kundt", "robinson_trautman",
         "recurrent_walker", "parallel")


def main():
    print(f"{'entry/congruence':<38} {'|gamma|':>8} {'rho':>8} {'|tau|':>8} {'|sigma|':>8}  d  flags")
    for name in metrics.entry_names():
        e = metrics.entry(name)
        for label, spec in e.congruences.items():
            ans = [analyze(e.model, spec, p) for p in e.sample_points]
            inv, rep = ans[0].inv, ans[0].report
            flags = [f for f in SHOWN if rep.flags[f]]
            steady = all(a.report.flags == rep.flags for a in ans)
            print(f"{name + '/' + label:<38} {np.linalg.norm(inv.gamma):8.2e} {inv.rho:8.2e} "
                  f"{np.linalg.norm(inv.tau):8.2e} {np.linalg.norm(inv.sigma):8.2e}  {rep.twist_rank}  "
                  f"{', '.join(flags)}{'' if steady else '  (varies)'}")


if __name__ == "__main__":
    main()
