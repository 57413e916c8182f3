"""How far the identity is from failing strict X-convexity under a shift.

For phi(r) = r and g(t) = t - alpha every combination lands exactly alpha
below the chord, so the largest observed gap is -alpha.
"""

import numpy as np

from xconvex import DomainSet, GMap, ScalarFn, classify

M = DomainSet.union((0.0, 10.0))
phi = ScalarFn.from_text("r", 1).with_domain(DomainSet.whole(1))  # combos may leave [0, 10]

for alpha in np.array([0.5, 1.0, 2.0]):
    g = GMap.from_text(["r - alpha"], {"alpha": float(alpha)})
    v = classify(phi, g, M)["strictly_x_convex"]
    print(f"alpha={alpha:4.1f}  status={v.status.value:24s} max gap={v.max_gap!r}")

# without the shift the identity is X-convex but no longer strictly so
v = classify(phi, GMap.identity(1), M)["strictly_x_convex"]
print("alpha= 0.0  status=%s (equality along every segment)" % v.status.value)
