# %% [markdown]
# # A quantum agent entangling with its environment
# The agent's memory starts in |+>, the environment in |0>. A joint CNOT
# correlates them, then a Z instrument on the environment gives a percept
# and a reward, and re-encodes the outcome into memory.

# %%
import numpy as np

from qagi_lab.agents import InstrumentAction, QagiAgent, UnitaryAction, reencode_update, run_qagi_quantum
from qagi_lab.qmath import pure_state
from qagi_lab.registers import Alphabet, Instrument, Povm, QtqChannel
from qagi_lab.standard import CNOT, H, KET0, KET_PLUS

agent = QagiAgent(
    pure_state(KET_PLUS),
    {"cnot": UnitaryAction(QtqChannel.unitary(CNOT), "AE"),
     "h_env": UnitaryAction(QtqChannel.unitary(H), "E"),
     "measure": InstrumentAction(Instrument.from_povm(Povm.computational(2)))},
    {"0": 0.0, "1": 1.0},
    reencode_update(2, Alphabet(["0", "1"])),
)

# %%
trace = run_qagi_quantum(agent, pure_state(KET0), ["cnot", "measure", "h_env", "measure"], 4, seed=3)
for r in trace.records:
    print(f"t={r.t} {r.action:8s} obs={r.observation!s:5s} p={r.prob:.3f} gap={r.separability_gap:.3f}")

# %% [markdown]
# The gap is 0.75 right after the CNOT and drops to zero once the
# measurement collapses the joint state.

# %%
print("final joint state diagonal:", np.round(np.real(np.diag(trace.final_state.matrix)), 3))
