"""Black-box methods and the decomposition drivers built on them.

Three drivers share one engine loop:

* ``solve_benders``: no linking rows; minimizes the convex value function
  of the linking columns with a first-order plus separation oracle.
* ``solve_lagrangian``: no linking columns; minimizes the dual function of
  the linking rows over a scaled simplex and recovers a primal point.
* ``solve_saddle_general``: both kinds of linking present; runs the
  monotone map of the reduced saddle problem over ``(x2, y2)`` and
  recovers the full saddle point from the certificate weights.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .certify import (
    ExecutionProtocol,
    best_certificate,
    eps_cert as cert_resolution,
    uniform_certificate,
)
from .linalg import l1
from .lp_kernel import solve_lp
from .model import assemble_full
from .solids import Box, Product, ScaledSimplex

log = logging.getLogger(__name__)

SUBGRADIENT = "subgradient"
ELLIPSOID = "ellipsoid"
MAX_ELLIPSOID_DIM = 64


class ShapeMismatchError(ValueError):
    """Instance shape incompatible with the requested decomposition."""


class NoProductiveStepError(RuntimeError):
    def __init__(self, message, separator=None):
        super().__init__(message)
        self.separator = separator


class OracleFailure(RuntimeError):
    def __init__(self, step, cause):
        super().__init__(f"oracle failed at step {step}: {cause}")
        self.step = step


@dataclass
class RunConfig:
    method: str = SUBGRADIENT
    max_steps: int = 500
    target_eps: float = 1e-9
    stepsize_rule: str = "divergent"
    gamma: float = None
    seed: int = 0
    check_every: int = 0

    def __post_init__(self):
        if self.method not in (SUBGRADIENT, ELLIPSOID):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.target_eps > 0:
            raise ValueError("target_eps must be positive")
        if self.stepsize_rule not in ("divergent", "constant"):
            raise ValueError(f"unknown stepsize rule {self.stepsize_rule!r}")


@dataclass(eq=False)
class Answer:
    """What a black-box oracle reports at one search point."""

    productive: bool
    e: np.ndarray
    f: float = None
    payload: dict = field(default_factory=dict)


def _unit(e):
    n = np.linalg.norm(e)
    return e / n if n > 0 else e


def _run(oracle, domain, cfg):
    protocol = ExecutionProtocol(domain=domain, meta={
        "method": cfg.method, "seed": cfg.seed, "max_steps": cfg.max_steps})
    n = domain.dim
    D = domain.diameter()
    gamma0 = cfg.gamma if cfg.gamma is not None else D
    z = domain.center()
    stepsizes = []
    if cfg.method == ELLIPSOID:
        if n > MAX_ELLIPSOID_DIM:
            raise ValueError(f"ellipsoid method limited to dim {MAX_ELLIPSOID_DIM}, got {n}")
        box = domain.bounding_box()
        z = box.center()
        P = np.eye(n) * (0.25 * box.diameter() ** 2 + 1e-300)
    stop_reason = "max_steps"
    for t in range(1, cfg.max_steps + 1):
        sep = domain.separator(z) if not domain.contains(z) else None
        if sep is not None:
            ans = Answer(False, sep)
        else:
            try:
                ans = oracle(z)
            except Exception as exc:
                raise OracleFailure(t, exc) from exc
        e = np.asarray(ans.e, dtype=float)
        if not ans.productive:
            e = _unit(e)
        protocol.append(z, e, ans.productive, ans.payload, ans.f)
        gamma = gamma0 / np.sqrt(t) if cfg.stepsize_rule == "divergent" else gamma0
        stepsizes.append(gamma)
        if ans.productive and not np.any(e):
            stop_reason = "exact"
            break
        if cfg.check_every and t % cfg.check_every == 0 and protocol.productive_mask.any():
            if best_certificate(protocol, domain)["eps"] <= cfg.target_eps:
                stop_reason = "target"
                break
        if cfg.method == SUBGRADIENT:
            z = domain.project(z - gamma * _unit(e))
        else:
            if n == 1:
                r = np.sqrt(P[0, 0])
                z = z - 0.5 * r * np.sign(e)
                P = P / 4.0
                if r < 1e-15 * (1 + D):
                    stop_reason = "ellipsoid_collapsed"
                    break
            else:
                Pe = P @ e
                gn = np.sqrt(max(e @ Pe, 0.0))
                if gn < 1e-15 * (1 + D) * np.linalg.norm(e):
                    stop_reason = "ellipsoid_collapsed"
                    break
                bvec = Pe / gn
                z = z - bvec / (n + 1)
                P = (n * n / (n * n - 1.0)) * (P - (2.0 / (n + 1)) * np.outer(bvec, bvec))
                P = 0.5 * (P + P.T)
    protocol.meta["stepsizes"] = stepsizes
    protocol.meta["stop_reason"] = stop_reason
    return protocol


def run_convex(oracle, domain, cfg):
    """Minimize a convex function given by ``oracle`` over ``domain``.

    ``oracle(z)`` returns an ``Answer``: productive with a subgradient in
    ``e`` and value in ``f``, or non-productive with a separator.
    """
    return _run(oracle, domain, cfg)


def run_saddle(phi, domain, cfg):
    """Drive the monotone map ``phi`` (an ``Answer``-returning callback) over ``domain``."""
    protocol = _run(phi, domain, cfg)
    protocol.meta["kind"] = "saddle"
    return protocol


# ------------------------------------------------------------------ drivers

@dataclass(eq=False)
class DirectSolution:
    status: str
    opt: float
    x: np.ndarray
    y: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    farkas: np.ndarray = None


def solve_direct(inst):
    """Solve the assembled LP in one piece."""
    lp = assemble_full(inst)
    res = solve_lp(lp)
    if not res.optimal:
        return DirectSolution(res.status, None, None, None, None, None, res.farkas)
    m1 = inst.m1
    return DirectSolution(res.status, res.objective, res.x, res.y, res.y[:m1], res.y[m1:])


@dataclass(eq=False)
class BendersResult:
    x2: np.ndarray
    x1: np.ndarray
    obj: float
    eps: float
    protocol: ExecutionProtocol
    cert: object
    n_separators: int


def solve_benders(inst, cfg):
    if inst.m2 != 0:
        raise ShapeMismatchError(f"benders needs m2 = 0, instance has m2 = {inst.m2}")
    domain = Box.symmetric(inst.n2, inst.R)

    def oracle(z):
        r = oracles.benders_oracle(inst, z)
        if r.productive:
            return Answer(True, r.g, r.f, {"x1": r.x1, "y1": r.y1})
        return Answer(False, r.e, None, {"block": r.block})

    if inst.n2 == 0:
        r = oracles.benders_oracle(inst, np.zeros(0))
        if not r.productive:
            raise NoProductiveStepError("blocks are infeasible", r.e)
        protocol = ExecutionProtocol(domain=domain, meta={"method": cfg.method})
        protocol.append(np.zeros(0), np.zeros(0), True, {"x1": r.x1}, r.f)
        cert = uniform_certificate(protocol)
        return BendersResult(np.zeros(0), r.x1, r.f, 0.0, protocol, cert, 0)

    protocol = run_convex(oracle, domain, cfg)
    protocol.meta["mode"] = "benders"
    mask = protocol.productive_mask
    if not mask.any():
        raise NoProductiveStepError(
            "no productive step: every probed x2 was infeasible",
            protocol.steps[-1].e)
    prod = [s for s in protocol.steps if s.productive]
    best = min(prod, key=lambda s: s.fvalue)
    bc = best_certificate(protocol, domain)
    return BendersResult(best.z.copy(), best.payload["x1"].copy(), float(best.fvalue),
                         float(bc["eps"]), protocol, bc["cert"], int((~mask).sum()))


@dataclass(eq=False)
class RecoveredPrimal:
    x1_hat: np.ndarray
    bounds_report: dict
    y2: np.ndarray = None
    dual_obj: float = None
    eps_cert: float = None
    protocol: ExecutionProtocol = None
    cert: object = None


def recover_lagrangian(inst, protocol, cert, L, opt=None, ytilde2=None, B=None):
    """Primal recovery and bound report from a dual run and a certificate.

    ``opt`` is the optimal value from a direct solve when known. Without it
    the bounds use a certified upper bound on the box-restricted dual value,
    namely ``eps_cert - sum_t w_t f(y_t)``.
    """
    B = B if B is not None else ScaledSimplex(inst.m2, L)
    eps = cert_resolution(cert, protocol, B)
    w = cert.weights
    mask = protocol.productive_mask
    steps = protocol.steps
    x1_hat = sum(w[t] * steps[t].payload["x1"] for t in np.flatnonzero(mask))
    x1_hat = np.asarray(x1_hat, dtype=float)
    if opt is not None:
        ref, ref_kind = float(opt), "direct_opt"
    else:
        fbar = float(sum(w[t] * steps[t].fvalue for t in np.flatnonzero(mask)))
        ref, ref_kind = eps - fbar, "certified_optL_upper"
    Rc1 = inst.R * l1(inst.c1)
    b1_viol = inst.A11 @ x1_hat - inst.b1
    b2_res = inst.A21 @ x1_hat - inst.b2
    rhs2 = inst.b2 + (ref + eps + Rc1) / L
    obj = float(inst.c1 @ x1_hat)
    report = {
        "reference": ref_kind,
        "reference_value": ref,
        "eps_cert": eps,
        "b1_feas": float(max(0.0, b1_viol.max(initial=0.0))),
        "box_feas": float(max(0.0, np.abs(x1_hat).max(initial=0.0) - inst.R)),
        "b2_bound_rhs": rhs2,
        "b2_violation": b2_res,
        "b2_slack": float((rhs2 - inst.A21 @ x1_hat).min(initial=np.inf)),
        "obj_bound": ref + eps,
        "obj": obj,
        "obj_slack": ref + eps - obj,
        "refined_rhs": None,
        "refined": None,
    }
    if ytilde2 is not None:
        rb = check_refined_bound(inst, x1_hat, eps, L, ytilde2)
        report["refined"] = rb
        if rb["holds"] is not None:
            report["refined_rhs"] = inst.b2 + eps / rb["ell"]
    return RecoveredPrimal(x1_hat, report, eps_cert=eps, protocol=protocol, cert=cert)


def check_refined_bound(inst, x1_hat, eps_cert, L, ytilde2, tol=1e-7):
    """Refined linking-row bound ``A21 x1_hat <= b2 + eps/ell``, ``ell = L - sum(ytilde2)``."""
    ytilde2 = np.asarray(ytilde2, dtype=float)
    x1_hat = np.asarray(x1_hat, dtype=float)
    if ytilde2.shape != (inst.m2,) or x1_hat.shape != (inst.n1,):
        from .linalg import DimensionError
        raise DimensionError("ytilde2 / x1_hat do not match the instance")
    ell = float(L - ytilde2.sum())
    if ell <= 0:
        return {"ell": ell, "holds": None, "slack": None}
    slack = float((inst.b2 + eps_cert / ell - inst.A21 @ x1_hat).min(initial=np.inf))
    return {"ell": ell, "holds": bool(slack >= -tol), "slack": slack}


def solve_lagrangian(inst, L, cfg, opt=None, ytilde2=None, certificate="best"):
    if inst.n2 != 0:
        raise ShapeMismatchError(f"lagrangian needs n2 = 0, instance has n2 = {inst.n2}")
    if not L > 0:
        raise ValueError("L must be positive")
    domain = ScaledSimplex(inst.m2, L)

    def oracle(z):
        r = oracles.lagrange_oracle(inst, z)
        return Answer(True, r.g, r.f, {"x1": r.x1})

    protocol = run_convex(oracle, domain, cfg)
    protocol.meta.update({"mode": "lagrangian", "L": L})
    cert = best_certificate(protocol, domain)["cert"] if certificate == "best" \
        else uniform_certificate(protocol)
    rec = recover_lagrangian(inst, protocol, cert, L, opt=opt, ytilde2=ytilde2)
    prod = [s for s in protocol.steps if s.productive]
    best = min(prod, key=lambda s: s.fvalue)
    rec.y2 = best.z.copy()
    rec.dual_obj = -float(best.fvalue)
    return rec


@dataclass(eq=False)
class SaddleSolution:
    x_hat: tuple
    y_hat: tuple
    eps_cert: float
    eps_sad_measured: float
    eps_sad_induced: tuple
    recovered: dict
    protocol: ExecutionProtocol = None
    cert: object = None
    Y2: object = None
    y2_on_boundary: bool = False

    @property
    def gap_bound_holds(self):
        return self.eps_sad_measured <= self.eps_cert + 1e-8

    @property
    def induced_hold(self):
        return all(g <= self.eps_cert + 1e-8 for g in self.eps_sad_induced)


def default_Y2(inst, kind="box", L2=None, direct=None):
    """Dual solid for the linking rows, sized from direct-solve multipliers if needed."""
    if L2 is None:
        direct = direct or solve_direct(inst)
        if direct.status != "Optimal":
            raise RuntimeError("direct solve failed; pass L2 explicitly")
        L2 = 10.0 * (1.0 + l1(direct.y2))
    if kind == "box":
        return Box(np.zeros(inst.m2), np.full(inst.m2, L2))
    if kind == "simplex":
        return ScaledSimplex(inst.m2, L2)
    raise ValueError(f"unknown Y2 kind {kind!r}")


def recover_saddle(inst, protocol, cert, Y2, B=None, opt=None):
    """Recovery from certificate weights: averages of all four variable blocks."""
    domain = Product((Box.symmetric(inst.n2, inst.R), Y2))
    B = B if B is not None else domain
    eps = cert_resolution(cert, protocol, B)
    w = cert.weights
    idx = np.flatnonzero(protocol.productive_mask)
    n2 = inst.n2
    steps = protocol.steps
    x1 = sum(w[t] * steps[t].payload["x1"] for t in idx)
    y1 = sum(w[t] * steps[t].payload["y1"] for t in idx)
    x2 = sum(w[t] * steps[t].z[:n2] for t in idx)
    y2 = sum(w[t] * steps[t].z[n2:] for t in idx)
    x1, y1, x2, y2 = (np.asarray(v, dtype=float) for v in (x1, y1, x2, y2))
    # convex combinations may drift outside by rounding
    x1 = np.clip(x1, -inst.R, inst.R)
    x2 = np.clip(x2, -inst.R, inst.R)
    y1 = np.clip(y1, 0.0, inst.dual_upper())
    y2 = Y2.project(y2) if not Y2.contains(y2) else y2
    gap = oracles.eps_sad(inst, x1, x2, y1, y2, Y2)
    induced = (oracles.eps_sad_induced(inst, 1, x1, y1, Y2),
               oracles.eps_sad_induced(inst, 2, x2, y2, Y2))
    x = np.concatenate([x1, x2])
    lp = assemble_full(inst)
    viol = lp.A @ x - lp.b
    recovered = {"x": x, "obj": float(lp.c @ x),
                 "max_violation": float(max(0.0, viol.max(initial=0.0)))}
    if opt is not None:
        recovered["opt"] = float(opt)
        recovered["obj_gap"] = recovered["obj"] - float(opt)
    bb = Y2.bounding_box()
    on_bd = bool(np.any(y2 >= bb.upper - 1e-9 * (1 + bb.upper))) if y2.size else False
    return SaddleSolution((x1, x2), (y1, y2), eps, gap, induced, recovered,
                          protocol, cert, Y2, on_bd)


def solve_saddle_general(inst, cfg, Y2=None, B=None, certificate="best", direct=None):
    if inst.n2 < 1 or inst.m2 < 1:
        raise ShapeMismatchError(
            f"saddle mode needs n2 >= 1 and m2 >= 1, instance has n2 = {inst.n2}, "
            f"m2 = {inst.m2}")
    if Y2 is None:
        direct = direct or solve_direct(inst)
        Y2 = default_Y2(inst, direct=direct)
    domain = Product((Box.symmetric(inst.n2, inst.R), Y2))
    n2 = inst.n2

    def phi(z):
        r = oracles.phi_oracle(inst, z[:n2], z[n2:])
        return Answer(True, np.concatenate([r.e_x, r.e_y]), r.value,
                      {"x1": r.x1, "y1": r.y1})

    protocol = run_saddle(phi, domain, cfg)
    protocol.meta["mode"] = "saddle"
    protocol.meta["Y2"] = Y2.to_dict()
    Bc = B if B is not None else domain
    cert = best_certificate(protocol, Bc)["cert"] if certificate == "best" \
        else uniform_certificate(protocol)
    opt = direct.opt if direct is not None else None
    sol = recover_saddle(inst, protocol, cert, Y2, B=Bc, opt=opt)
    if not sol.gap_bound_holds:
        log.warning("saddle gap %.3e exceeds certificate resolution %.3e",
                    sol.eps_sad_measured, sol.eps_cert)
    return sol
