"""Ask whether a trial circuit family can represent a Laughlin state.

The trial layers swap one level at a time between qudit pairs. Unsampling
the three-qudit Laughlin state with them succeeds, which validates the
family. A crippled copy that ignores its angles cannot, and says so.
"""

from unsampling import laughlin_state
from unsampling.protocols import VquConfig, WTildeAnsatz, ansatz_validate

psi = laughlin_state(3)
good = ansatz_validate(psi)
bad = ansatz_validate(psi, WTildeAnsatz(3, crippled=True), VquConfig(max_restarts=2))
print(f"trial ansatz:    fidelity {good.final_fidelity:.8f}, converged {good.converged}")
print(f"crippled ansatz: fidelity {bad.final_fidelity:.8f}, converged {bad.converged}")
