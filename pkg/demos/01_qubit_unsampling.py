"""Unsample a random three-qubit circuit one qubit at a time.

A Haar-random unitary U prepares |psi> = U|000>. Each layer is a
rectangular MZI mesh on the qubits that are still entangled; it is trained
until its first qubit reads |0>. Multiplying the layers gives a circuit that
maps |psi> back to |000>.
"""

import numpy as np

from unsampling import VquConfig, assemble_solution, haar_unitary, qubit_vqu

rng = np.random.default_rng(7)
u = haar_unitary(8, rng)
result = qubit_vqu(u, VquConfig(seed=7))

print(f"final fidelity with |000>: {result.final_fidelity:.8f} (converged: {result.converged})")
for summary in result.layer_summaries():
    print(f"  {summary['label']}: {summary['iterations']:5d} loss evaluations, final loss {summary['final_loss']:.2e}")
print(f"restarts used: {result.restarts_used}")

v = assemble_solution(result.solution_layers)
out = v @ u[:, 0]
print(f"|<000| V U |000>|^2 from the assembled circuit: {abs(out[0]) ** 2:.8f}")
