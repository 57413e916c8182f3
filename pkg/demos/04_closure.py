"""Building new X-convex functions from old ones.

Sums, non-negative multiples and conic combinations keep X-convexity, and so
does composing with a non-decreasing convex outer function.  Each harness
checks its hypotheses on the samples first and then the built function.
"""

from xconvex import DomainSet, GMap, ScalarFn
from xconvex.algebra import OuterFn, theorem_closure_harness

M = DomainSet.union((0.0, 10.0))
g = GMap.from_text(["r - 1"])
ident = ScalarFn.from_text("r", 1).with_domain(DomainSet.whole(1))
exp = OuterFn.from_text("exp(x1)", monotone_nondecreasing=True, convex=True)

for theorem, inputs in [
    ("t43a", (ident, ident)),
    ("t43b", (2.5, ident)),
    ("t43c", ([2.0, 3.0], [ident, ident])),
    ("t42", (exp, ident)),
]:
    rep = theorem_closure_harness(inputs, g, M, theorem_id=theorem)
    print(f"{theorem:5s} built {rep.details['built']:30s} passed={rep.passed}")

# an outer function that claims to be non-decreasing but is not gets rejected
liar = OuterFn.from_text("-x1", monotone_nondecreasing=True, convex=True)
try:
    theorem_closure_harness((liar, ident), g, M, theorem_id="t42")
except Exception as exc:
    print("\nrejected:", exc)
