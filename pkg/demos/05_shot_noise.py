"""Train the first optical layer from finite photon counts.

Each loss evaluation is replaced by the fraction of 100 simulated events in
which the target mode did not hold exactly one photon. Warm restarts from
the best point keep the trust region from collapsing on the noise.
"""

import numpy as np

from unsampling import OptimizationProblem, haar_unitary
from unsampling.optimizer import minimize_warm, with_shot_noise
from unsampling.protocols import sample_state, single_photon_loss, unsampling_layout

rng = np.random.default_rng(3)
psi = sample_state(haar_unitary(4, rng), 2)
layout = unsampling_layout(1, 4)
exact = single_photon_loss(psi, layout)
x0 = rng.uniform(-np.pi, np.pi, 2 * len(layout))

trace = minimize_warm(OptimizationProblem(with_shot_noise(exact, 100, rng), x0, budget=400, rho_begin=1.0, rho_end=0.02))
print(f"exact loss at the start: {exact(x0):.3f}")
print(f"exact loss at the best noisy point after {len(trace)} evaluations: {exact(trace.best_point):.3f}")
