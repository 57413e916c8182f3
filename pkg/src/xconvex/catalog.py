"""Named functions and maps used by the worked examples.

``[x]`` (greatest integer) is read as ``floor(x)``.
"""

from __future__ import annotations

from .lang import ExprError, GMap, ScalarFn

__all__ = ["catalog", "CATALOG_FUNCTIONS", "CATALOG_MAPS", "FLOOR_READING_NOTE"]

FLOOR_READING_NOTE = "greatest-integer brackets evaluated as floor (rounding toward -inf)"

# name -> (expression in x1..xn / r, required parameters)
CATALOG_FUNCTIONS = {
    "const_c": ("c", ("c",)),
    "identity": ("x1", ()),
    "floor_alpha": ("alpha + floor(r)", ("alpha",)),
    "piecewise_3_2": ("piecewise((r == 0, 3), 2)", ()),
    "piecewise_2_1": ("piecewise((r == 0, 2), 1)", ()),
    "square": ("x1^2", ()),
    "neg_square": ("-x1^2", ()),
    "shifted_square": ("(x1 - c)^2", ("c",)),
    "abs": ("abs(x1)", ()),
    "exp": ("exp(x1)", ()),
    "w_shape": ("min((r + 1)^2, (r - 1)^2)", ()),
}

CATALOG_MAPS = {
    "identity_map": None,
    "shift_g": ("c",),
}


def catalog(name: str, dim: int = 1, **params) -> ScalarFn | GMap:
    """Look up a catalog entry, binding ``params``.

    >>> catalog("shift_g", c=3).texts
    ['x1 + 3.0']
    """
    if name in CATALOG_FUNCTIONS:
        text, required = CATALOG_FUNCTIONS[name]
        missing = set(required) - set(params)
        if missing:
            raise ExprError(f"catalog entry {name!r} needs parameters {sorted(missing)}")
        if dim != 1 and "r" in text.replace("sqrt", ""):
            raise ValueError(f"catalog entry {name!r} is one-dimensional")
        return ScalarFn.from_text(text, dim, {k: params[k] for k in required}, name=name)
    if name == "identity_map":
        return GMap.identity(dim)
    if name == "shift_g":
        if "c" not in params:
            raise ExprError("catalog entry 'shift_g' needs parameter c")
        c = float(params["c"])
        texts = [f"x{i + 1} + {c!r}" if c >= 0 else f"x{i + 1} - {-c!r}" for i in range(dim)]
        return GMap.from_text(texts)
    raise KeyError(f"unknown catalog entry {name!r}")
