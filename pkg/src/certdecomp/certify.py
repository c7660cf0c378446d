"""Execution protocols and accuracy certificates.

A protocol is the ordered list of search points ``z_t`` with the vector
``e_t`` returned at each one: the oracle's first-order answer on a
productive step, a separator otherwise. A certificate is a nonnegative
weight vector over the steps whose productive part sums to one. Its
resolution over a solid ``B`` is::

    eps_cert = max_{z in B} sum_t w_t <e_t, z_t - z>
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, as_vector
from .lp_kernel import solve_lp
from .model import StandardLP
from .solids import Box, Product, ScaledSimplex, solid_from_dict

PROTOCOL_VERSION = 1
# Upper bound for the weight of one non-productive step in best_certificate;
# separators are stored with unit norm so this is scale-free.
SEPARATOR_WEIGHT_CAP = 1e4


class CertificateError(ValueError):
    """Certificate is malformed or not valid for its protocol."""


class ProtocolFormatError(ValueError):
    pass


@dataclass(eq=False)
class Step:
    z: np.ndarray
    e: np.ndarray
    productive: bool
    payload: dict = field(default_factory=dict)
    fvalue: float = None


@dataclass(eq=False)
class ExecutionProtocol:
    steps: list = field(default_factory=list)
    domain: object = None
    meta: dict = field(default_factory=dict)

    def append(self, z, e, productive, payload=None, fvalue=None):
        self.steps.append(Step(np.array(z, dtype=float), np.array(e, dtype=float),
                               bool(productive), payload or {}, fvalue))

    def __len__(self):
        return len(self.steps)

    def prefix(self, tau):
        return ExecutionProtocol(self.steps[:tau], self.domain, dict(self.meta))

    @property
    def productive_mask(self):
        return np.array([s.productive for s in self.steps], dtype=bool)

    def matrices(self):
        """``(Z, E)`` with one row per step."""
        if not self.steps:
            return np.zeros((0, 0)), np.zeros((0, 0))
        return (np.vstack([s.z for s in self.steps]),
                np.vstack([s.e for s in self.steps]))


@dataclass(eq=False)
class Certificate:
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)

    def check(self, protocol, tol=1e-12):
        w = self.weights
        if w.shape != (len(protocol),):
            raise CertificateError(
                f"certificate has {w.size} weights for {len(protocol)} steps")
        if not np.all(np.isfinite(w)):
            raise CertificateError("certificate weights must be finite")
        if np.any(w < 0):
            raise CertificateError("certificate weights must be nonnegative")
        mask = protocol.productive_mask
        if not mask.any():
            raise CertificateError("protocol has no productive step")
        total = w[mask].sum()
        if abs(total - 1.0) > tol:
            raise CertificateError(f"productive weights sum to {total!r}, not 1")

    def to_dict(self):
        return {"weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d):
        if "weights" not in d:
            raise CertificateError("certificate file lacks 'weights'")
        return cls(np.array(d["weights"], dtype=float))


def support(solid, g):
    value, arg = solid.support(g)
    return {"value": value, "argmax": arg}


def eps_cert(cert, protocol, B):
    """Resolution of ``cert`` on ``protocol`` over the solid ``B`` (exact)."""
    cert.check(protocol)
    Z, E = protocol.matrices()
    if Z.shape[1] != B.dim:
        raise DimensionError(f"protocol lives in dim {Z.shape[1]}, B has dim {B.dim}")
    w = cert.weights
    lin = float(w @ np.einsum("ij,ij->i", E, Z))
    return lin + B.support(-(w @ E))[0]


def uniform_certificate(protocol):
    mask = protocol.productive_mask
    if not mask.any():
        raise CertificateError("protocol has no productive step")
    return Certificate(mask / mask.sum())


def step_weight_certificate(protocol, stepsizes):
    """Weights proportional to the step sizes, normalized over productive steps."""
    g = as_vector(stepsizes, "stepsizes")
    if g.shape[0] != len(protocol):
        raise DimensionError("one stepsize per protocol step is required")
    if np.any(g <= 0):
        raise ValueError("stepsizes must be positive")
    mask = protocol.productive_mask
    if not mask.any():
        raise CertificateError("protocol has no productive step")
    return Certificate(g / g[mask].sum())


def _flat_factors(B):
    if isinstance(B, Product):
        out = []
        for f in B.factors:
            out.extend(_flat_factors(f))
        return out
    if isinstance(B, (Box, ScaledSimplex)):
        return [B]
    raise TypeError(f"unsupported solid {type(B).__name__}")


def best_certificate(protocol, B, pivot_rule="bland"):
    """Certificate of minimal resolution, found by linear programming.

    Variables are the step weights plus one epigraph variable per box
    coordinate (``w_i >= -u_i g_i`` and ``w_i >= -l_i g_i``) or one per
    simplex factor (``s >= 0, s >= -g_i``), where ``g = sum_t weight_t e_t``.
    The returned ``eps`` is recomputed exactly from the weights.
    """
    mask = protocol.productive_mask
    if not mask.any():
        raise CertificateError("protocol has no productive step")
    Z, E = protocol.matrices()
    tau, d = E.shape
    if d != B.dim:
        raise DimensionError(f"protocol lives in dim {d}, B has dim {B.dim}")
    lin = np.einsum("ij,ij->i", E, Z)
    absE = np.abs(E)
    gmax = absE[mask].max(axis=0) + SEPARATOR_WEIGHT_CAP * absE[~mask].sum(axis=0)

    rows, rhs = [], []
    cost_aux, lo_aux, hi_aux = [], [], []
    offset = 0
    for f in _flat_factors(B):
        idx = np.arange(offset, offset + f.dim)
        if isinstance(f, Box):
            for i_local, i in enumerate(idx):
                a = len(cost_aux)
                cost_aux.append(1.0)
                span = max(abs(f.lower[i_local]), abs(f.upper[i_local])) * gmax[i] + 1.0
                lo_aux.append(-span)
                hi_aux.append(span)
                for bound in (f.upper[i_local], f.lower[i_local]):
                    rows.append((-bound * E[:, i], a))
                    rhs.append(0.0)
        else:
            a = len(cost_aux)
            cost_aux.append(f.L)
            lo_aux.append(0.0)
            hi_aux.append(float(gmax[idx].max(initial=0.0)) + 1.0)
            for i in idx:
                rows.append((-E[:, i], a))
                rhs.append(0.0)
        offset += f.dim
    na = len(cost_aux)
    A = np.zeros((len(rows) + 2, tau + na))
    for r, (coef, a) in enumerate(rows):
        A[r, :tau] = coef
        A[r, tau + a] = -1.0
    A[-2, :tau] = mask
    A[-1, :tau] = -mask.astype(float)
    b = np.concatenate([rhs, [1.0, -1.0]])
    lp = StandardLP(
        c=np.concatenate([lin, cost_aux]),
        A=A, b=b,
        lower=np.concatenate([np.zeros(tau), lo_aux]),
        upper=np.concatenate([np.where(mask, 1.0, SEPARATOR_WEIGHT_CAP), hi_aux]),
    )
    res = solve_lp(lp, pivot_rule=pivot_rule)
    if not res.optimal:
        raise CertificateError("certificate LP reported infeasible")
    w = np.maximum(res.x[:tau], 0.0)
    w[mask] /= w[mask].sum()
    cert = Certificate(w)
    return {"cert": cert, "eps": eps_cert(cert, protocol, B)}


# ------------------------------------------------------------ serialization

def _payload_out(p):
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in p.items()}


def protocol_to_dict(protocol):
    return {
        "version": PROTOCOL_VERSION,
        "domain": protocol.domain.to_dict() if protocol.domain is not None else None,
        "meta": protocol.meta,
        "steps": [{"z": s.z.tolist(), "e": s.e.tolist(), "productive": s.productive,
                   "f": s.fvalue, "payload": _payload_out(s.payload)}
                  for s in protocol.steps],
    }


def protocol_from_dict(d):
    try:
        if d.get("version") != PROTOCOL_VERSION:
            raise ProtocolFormatError(f"unsupported protocol version {d.get('version')!r}")
        steps = []
        for t, s in enumerate(d["steps"]):
            payload = {k: (np.array(v, dtype=float) if isinstance(v, list) else v)
                       for k, v in (s.get("payload") or {}).items()}
            steps.append(Step(np.array(s["z"], dtype=float), np.array(s["e"], dtype=float),
                              bool(s["productive"]), payload, s.get("f")))
        domain = solid_from_dict(d["domain"]) if d.get("domain") else None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ProtocolFormatError):
            raise
        raise ProtocolFormatError(f"malformed protocol dump: {exc!r}") from exc
    dims = {s.z.shape for s in steps} | {s.e.shape for s in steps}
    if len(dims) > 1:
        raise ProtocolFormatError(f"protocol steps have inconsistent shapes {sorted(dims)}")
    return ExecutionProtocol(steps, domain, d.get("meta") or {})


def save_protocol(protocol, path):
    with open(path, "w") as fh:
        json.dump(protocol_to_dict(protocol), fh)
        fh.write("\n")


def load_protocol(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProtocolFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return protocol_from_dict(d)


def save_certificate(cert, path):
    with open(path, "w") as fh:
        json.dump(cert.to_dict(), fh)
        fh.write("\n")


def load_certificate(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CertificateError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return Certificate.from_dict(d)
