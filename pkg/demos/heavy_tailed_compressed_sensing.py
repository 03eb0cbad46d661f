# # Compressed sensing with heavy-tailed noise
#
# We recover a rank-5 20 x 20 matrix from noisy random projections. The noise
# is a centred log-normal, so a handful of responses are enormous. The robust
# estimator truncates the responses before fitting; the standard one does not.

import numpy as np

from robust_trace import (LambdaRule, NoiseModel, ProblemKind, ProblemSpec,
                          default_shrinkage, estimate, generate_dataset, make_low_rank_target)

# ## The problem

d, n = 20, 1000
spec = ProblemSpec(ProblemKind.COMPRESSED_SENSING, (d, d))
theta = make_low_rank_target(d, rank=5, seed=1)
noise = NoiseModel.lognormal(6.25, 50)
data = generate_dataset(spec, theta, noise, n, seed=2)
print("largest |response|:", np.abs(data.Y).max().round(1))
print("median |response|:", np.median(np.abs(data.Y)).round(3))

# ## Fitting both estimators
#
# The threshold and penalty follow the default rates with the tuned constants
# shipped in the figure2-lognormal preset.

robust = estimate(spec, data, default_shrinkage(spec, 2.0), LambdaRule(0.5))
standard = estimate(spec, data, None, LambdaRule(1.5))
print("threshold used:", round(robust.diagnostics["tau_response"], 3))

for name, fit in (("robust", robust), ("standard", standard)):
    err = np.linalg.norm(fit.estimate - theta)
    sv = np.linalg.svd(fit.estimate, compute_uv=False)
    print(f"{name:8s} error {err:.3f}  leading singular values {np.round(sv[:7], 2)}")

# ## Same thing on clean data
#
# With Gaussian noise nothing is truncated at this threshold and both fits coincide.

clean = generate_dataset(spec, theta, NoiseModel.gaussian(0.25), n, seed=2)
a = estimate(spec, clean, default_shrinkage(spec, 2.0), LambdaRule(0.25)).estimate
b = estimate(spec, clean, None, LambdaRule(0.25)).estimate
print("max difference on Gaussian noise:", np.abs(a - b).max())
