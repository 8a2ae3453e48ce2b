# Link costs: BPR times, their integrals and conjugates.
#
# Every quantity the solver touches on a link is a closed form of the BPR
# curve tau(f) = t0 * (1 + kappa * (f / cap) ** power).

import numpy as np

from twostage import LinkParams, bpr_inverse, bpr_time, sigma, sigma_conj

link = LinkParams(free_flow_time=10.0, capacity=100.0, kappa=0.15, power=4.0)

# Travel time grows slowly until the flow approaches capacity.
flows = np.array([0.0, 50.0, 100.0, 150.0, 200.0])
times = bpr_time(link, flows)
for f, t in zip(flows, times):
    print(f"flow {f:6.1f}  time {t:8.4f}")

# The inverse maps a time back to the flow that causes it.
print("inverse of 11.5:", bpr_inverse(link, 11.5))

# sigma is the area under the curve, sigma_conj its convex conjugate.
# Fenchel-Young: sigma(f) + sigma_conj(tau(f)) == f * tau(f).
for f, t in zip(flows, times):
    lhs = sigma(link, f) + sigma_conj(link, t)
    print(f"f={f:6.1f}  sigma+conj={lhs:12.4f}  f*t={f * t:12.4f}")

# Below free flow the conjugate is undefined, and the library says so.
try:
    sigma_conj(link, 9.0)
except ValueError as exc:
    print("domain error:", exc)
