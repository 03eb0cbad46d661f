# # Multi-task regression and matrix completion
#
# Two more instances of the same recipe. In multi-task regression each sample
# carries a whole response vector, which is shrunk in l2 norm. In matrix
# completion each sample reveals one noisy entry.

import numpy as np

from robust_trace import (LambdaRule, NoiseModel, ProblemKind, ProblemSpec, SingletonScaling,
                          default_shrinkage, estimate, generate_dataset, make_low_rank_target)

theta = make_low_rank_target(20, seed=5)

# ## Multi-task regression with truncated Cauchy noise

spec = ProblemSpec(ProblemKind.MULTI_TASK, (20, 20))
data = generate_dataset(spec, theta, NoiseModel.trunc_cauchy(1e4, 10), 1000, seed=6)
robust = estimate(spec, data, default_shrinkage(spec, 3.0), LambdaRule(0.2))
standard = estimate(spec, data, None, LambdaRule(8.0))
print("multi-task robust  :", round(np.linalg.norm(robust.estimate - theta), 3))
print("multi-task standard:", round(np.linalg.norm(standard.estimate - theta), 3))

# ## Matrix completion with log-normal noise
#
# Entries are observed through the scaled singleton design, and the estimate
# is kept inside a box set by the spikiness bound.

spec = ProblemSpec(ProblemKind.MATRIX_COMPLETION, (20, 20), spikiness=6.0,
                   singleton_scaling=SingletonScaling.THEORY)
data = generate_dataset(spec, theta, NoiseModel.lognormal(9, 250), 10000, seed=7)
robust = estimate(spec, data, default_shrinkage(spec, 0.6), LambdaRule(0.5))
standard = estimate(spec, data, None, LambdaRule(1.0))
print("completion robust  :", round(np.linalg.norm(robust.estimate - theta), 3))
print("completion standard:", round(np.linalg.norm(standard.estimate - theta), 3))
print("box:", robust.diagnostics["box"])
