"""A floor function that is quasi-X-convex but not X-convex.

phi(r) = alpha + floor(r) on (-inf, -1/50] u [-1/100, 0] with g(t) = t - 1/50.
We classify it, look at the counterexample the search finds, and then
recompute the triple (r, t, delta) = (-1.5, -2.5, 0.502) by hand.
"""

from xconvex import DomainSet, GMap, ScalarFn, Tolerances, classify
from xconvex.checker import recheck_triple

M = DomainSet.union((-float("inf"), -0.02), (-0.01, 0.0))
g = GMap.from_text(["r - 0.02"])
phi = ScalarFn.from_text("alpha + floor(r)", 1, {"alpha": 1.0})

c = classify(phi, g, M, tol=Tolerances(eps_val_eq=0.0))
for v in c.verdicts[:5]:
    print(f"{v.class_name:30s} {v.status.value}")

# the search's witness for x_convex: phi(combo) sits above the chord
w = c["x_convex"].witness
print("\nfound witness: r=%s t=%s delta=%r" % (w.r, w.t, w.delta))
print("  phi(combo) = %r, chord = %r, gap = %r" % (w.lhs, w.rhs, w.gap))

# the hand-picked triple does not break the inequality
combo, lhs, rhs = recheck_triple(phi, g, "x_convex", -1.5, -2.5, 0.502)
print("\nhand-picked triple: combo = %r" % float(combo[0]))
print("  phi(combo) = %r <= chord = %r: %s" % (lhs, rhs, lhs <= rhs))
