"""Efficient points of (r^2, (r - 1)^2) on [-1, 2].

The efficient set is [0, 1].  The weighted sum with weights (1/2, 1/2) has its
minimum at r = 1/2, which the scan confirms is efficient.
"""

import numpy as np

from xconvex import DomainSet, GMap, SamplePlan, ScalarFn
from xconvex.optimize import ObjectiveVector, efficiency_scan, efficiency_theorem_harness

M = DomainSet.union((-1.0, 2.0))
plan = SamplePlan(breakpoints=(0.0, 0.5, 1.0))  # make sure the ends of [0, 1] are sampled
Phi = ObjectiveVector((ScalarFn.from_text("r^2", 1), ScalarFn.from_text("(r - 1)^2", 1)), GMap.identity(1))

scan = efficiency_scan(Phi, M, plan, nu=0.1)
r = np.array([v.point[0] for v in scan])
eff = np.array([v.global_efficient for v in scan])
print("samples: %d, efficient: %d" % (len(r), eff.sum()))
print("efficient range: [%r, %r]" % (float(r[eff].min()), float(r[eff].max())))

# a dominated point and the sample that dominates it
v = next(v for v in scan if v.point[0] < 0)
print("r=%r is dominated by %r" % (v.point[0], dict(v.dominators)["global_efficient"][0]))

rep = efficiency_theorem_harness(Phi, M, plan, 0.1, "t54", mu=(0.5, 0.5))
print("\nscalarized local minima:", rep.details["scalar_local_minima"], "passed:", rep.passed)
