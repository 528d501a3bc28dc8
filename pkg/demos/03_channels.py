"""Local channels on the unmeasured side never increase the interferometric power.

We build a d = 3 isotropic channel, audit its Kraus set and Choi spectrum,
then push random qutrit-qubit states through it and compare the IP before
and after.
"""
import numpy as np

from qmetro.channels import IsotropicParams, TRangeError, apply_local_A, build_isotropic, choi_matrix
from qmetro.metrology import ip_oracle_qudit
from qmetro.qmat import haar_unitary
from qmetro.states import random_rank_k_hs

if __name__ == "__main__":
    rng = np.random.default_rng(7)
    ch = build_isotropic(IsotropicParams(3, 0.4, haar_unitary(3, rng)))
    defect = np.linalg.norm(sum(k.conj().T @ k for k in ch.kraus) - np.eye(3))
    print(f"isotropic d=3 t=0.4: {len(ch.kraus)} Kraus operators, completeness defect {defect:.1e}")
    print("Choi spectrum:", np.round(np.sort(np.linalg.eigvalsh(choi_matrix(ch).matrix)), 6))

    try:
        IsotropicParams(3, 0.3, anti=True)
    except TRangeError as e:
        print(f"antiunitary t=0.3 rejected: {e}")

    print("\n  before    after")
    for seed in range(5):
        rho = random_rank_k_hs(6, 2, seed, dim_a=3)
        before = ip_oracle_qudit(rho, seed=seed).value
        after = ip_oracle_qudit(apply_local_A(rho, ch), seed=seed).value
        print(f"  {before:.4f}  {after:.4f}")
