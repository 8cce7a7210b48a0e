"""Independent bit-level simulation of the emulated floating-point formats.

Rounding is done with integer mantissa arithmetic (frexp/ldexp and Python's
exact half-to-even integer rounding), sharing no code path with the numpy
dtype casts used by the package.  Because an IEEE double carries at least
2p + 2 significand bits for both binary16 (p=11) and binary32 (p=24), a
correctly rounded double operation followed by one rounding into the narrow
format equals the directly rounded narrow operation, so this oracle models
two-operand +, -, *, /, sqrt exactly.
"""

import math

# (precision bits p, minimum normal exponent emin, largest finite value)
FORMATS = {
    "f16": (11, -14, 65504.0),
    "f32": (24, -126, float.fromhex("0x1.fffffep+127")),
    "f64": (53, -1022, float.fromhex("0x1.fffffffffffffp+1023")),
}


def sim_round(x: float, fmt: str) -> float:
    """Round a double to the format, round-to-nearest ties-to-even."""
    p, emin, max_finite = FORMATS[fmt]
    if fmt == "f64" or x == 0.0 or math.isnan(x) or math.isinf(x):
        return float(x)
    mag = abs(x)
    _, e = math.frexp(mag)  # 2^(e-1) <= mag < 2^e
    # quantum exponent: normals use e - p, subnormals bottom out at emin-p+1
    q = max(e - p, emin - p + 1)
    scaled = math.ldexp(mag, -q)  # exact: power-of-two scaling
    m = round(scaled)  # exact half-to-even on a float
    r = math.ldexp(float(m), q)
    if r > max_finite:
        r = math.inf
    return -r if x < 0.0 else r


def sim_dot(x, y, compute: str, accumulate: str) -> float:
    """Products rounded in ``compute``, sequential index-ascending sum
    rounded in ``accumulate``; returns the accumulate-format value."""
    s = 0.0
    for xi, yi in zip(x, y):
        p = sim_round(float(xi) * float(yi), compute)
        s = sim_round(s + p, accumulate)
    return s


def sim_safe_norm2(x, compute: str, accumulate: str) -> float:
    """Infinity-norm-scaled 2-norm under the simulated formats."""
    m = max(abs(float(v)) for v in x)
    if m == 0.0:
        return 0.0
    u = [sim_round(float(v) / m, compute) for v in x]
    ss = sim_dot(u, u, compute, accumulate)
    r = sim_round(math.sqrt(ss), compute)
    return sim_round(m * r, compute)
