"""Walk through the quantifier hierarchy on a few two-qubit states.

For each state we print the tangle, the interferometric power from the
closed form and from a brute-force search over local Hamiltonians, and the
QFI along the three Pauli axes.
"""
import math

import numpy as np

from qmetro import FamilyParams, bell, family_state, ip_closed, ip_oracle, tangle_wootters
from qmetro.metrology import PhaseHamiltonian, qfi
from qmetro.states import classical_state, random_rank_k_hs


def report(name, rho):
    t = tangle_wootters(rho).value
    closed = ip_closed(rho).value
    brute = ip_oracle(rho).value
    f = [qfi(rho, PhaseHamiltonian.along(axis)) for axis in np.eye(3)]
    print(f"{name:<26} T={t:.4f}  P={closed:.4f} (search {brute:.4f})  "
          f"F_x,y,z=({f[0]:.3f}, {f[1]:.3f}, {f[2]:.3f})")


if __name__ == "__main__":
    report("Bell phi+", bell("phi+").density())
    report("family (pi/4, pi/3)", family_state(FamilyParams(math.pi / 4, math.pi / 3)))
    report("family (0, pi/2)", family_state(FamilyParams(0, math.pi / 2)))
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    report("classical-quantum", classical_state([0.4, 0.6], h, [np.diag([1, 0]), np.eye(2) / 2]))
    for seed in range(3):
        report(f"random rank-2 (seed {seed})", random_rank_k_hs(4, 2, seed))
    print("\nIn every row P >= T: the tangle never exceeds the interferometric power.")
