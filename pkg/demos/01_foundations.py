# %% [markdown]
# # Foundations checks
# Bell correlations, contextuality, cloning and identity channels on small
# dense matrices. Each cell prints one number you can compare by hand.

# %%
import numpy as np

from qagi_lab.foundations import (
    ChshSetting,
    chsh_lhv_max,
    chsh_quantum,
    clone_fidelity_optimize,
    ks_assignment_search,
    load_ray_system,
    noninjectivity_witness,
    nocloning_check,
    separability_gap,
)
from qagi_lab.registers import Povm
from qagi_lab.standard import KET0, KET_PLUS, bell_state, singlet

# %% [markdown]
# ## CHSH
# The singlet with the usual settings reaches 2*sqrt(2); no deterministic
# local strategy gets past 2.

# %%
angles = (0.0, np.pi / 2, np.pi / 4, -np.pi / 4)
s = chsh_quantum(ChshSetting(singlet(), angles))
print(f"quantum |S| = {abs(s):.12f}   (2 sqrt 2 = {2 * np.sqrt(2):.12f})")
print("local max   =", chsh_lhv_max(angles).value)

# %% [markdown]
# ## Kochen-Specker
# Eighteen rays in four dimensions, nine bases, each ray in two of them.
# Exhaustive search finds no 0/1 assignment with one "true" ray per basis.

# %%
res = ks_assignment_search(load_ray_system())
print(res.verdict, res.certificate)

# %% [markdown]
# ## Cloning
# |0> and |+> overlap, so no channel copies both. The optimizer gets close to
# the known optimum of about 0.98296.

# %%
print(nocloning_check(KET0, KET_PLUS).to_json())
best = clone_fidelity_optimize([KET0, KET_PLUS], seed=0)
print(f"best worst-case clone fidelity {best.worst_fidelity:.8f} via {best.family}")

# %% [markdown]
# ## Identity and correlation
# A Z measurement cannot tell |+><+| from I/2, and CNOT-style correlation
# shows up as a separability gap of 0.75 for a Bell pair.

# %%
w = noninjectivity_witness(Povm.computational(2))
print("witness pair:", w.labels)
print("Bell-pair separability gap:", separability_gap(bell_state("phi+")))
