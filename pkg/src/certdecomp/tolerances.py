"""Default numerical tolerances, overridable through ``CERTDECOMP_TOL``.

The variable holds either one number (the feasibility tolerance) or a
comma list such as ``feas=1e-9,saddle=1e-8``.
"""

import os

DEFAULTS = {"feas": 1e-8, "saddle": 1e-7}


def _parse(text):
    out = dict(DEFAULTS)
    text = text.strip()
    if not text:
        return out
    if "=" not in text:
        out["feas"] = float(text)
        return out
    for item in text.split(","):
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ValueError(f"CERTDECOMP_TOL: unknown key {key!r}")
        out[key] = float(val)
    return out


def current():
    return _parse(os.environ.get("CERTDECOMP_TOL", ""))


def feasibility():
    return current()["feas"]


def saddle_gap():
    return current()["saddle"]
