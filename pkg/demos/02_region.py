"""Sample random two-qubit states and locate them in the (tangle, IP) plane.

The extremal family traces the lower line P = T and the upper line
P = (1 + T) / 2. We count how many random states fall outside each.
"""
import sys

import numpy as np

from qmetro.states import extremal_curve, family_ip, family_tangle, region_scan

if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    recs = region_scan(n, seed=42)
    t = np.array([r.tangle for r in recs])
    p = np.array([r.ip for r in recs])
    print(f"{n} states: tangle in [{t.min():.3f}, {t.max():.3f}], IP in [{p.min():.3f}, {p.max():.3f}]")
    print(f"below P = T:          {sum(not r.lower_ok for r in recs)}")
    print(f"above P = (1 + T)/2:  {sum(not r.upper_ok for r in recs)}")
    print(f"min gap P - T:        {np.min(p - t):.2e}")

    print("\n   T    lower (th1, th2, P)        upper (th1, th2, P)")
    for tv in np.linspace(0, 1, 6):
        lo, up = extremal_curve("lower", tv), extremal_curve("upper", tv)
        assert abs(family_tangle(lo) - tv) < 1e-10
        print(f"  {tv:.1f}  ({lo.theta1:.3f}, {lo.theta2:.3f}, {family_ip(lo):.3f})"
              f"    ({up.theta1:.3f}, {up.theta2:.3f}, {family_ip(up):.3f})")
