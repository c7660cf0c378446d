"""First-order and separation oracles, Lagrangian values and saddle gaps.

Throughout, the Lagrange function of the block LP is::

    Psi(x1, x2, y1, y2) = c1'x1 + c2'x2 + y1'(A11 x1 + A12 x2 - b1)
                                       + y2'(A21 x1 + A22 x2 - b2)

over ``X1 x X2`` (boxes of radius R) and ``Y1 x Y2`` where ``Y1`` is the
per-block dual box stored on the instance and ``Y2`` is supplied by the
caller. The outer pair of the reduced problem is ``(x2, y2)``.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, as_vector
from .lp_kernel import (
    INFEASIBLE,
    KernelError,
    block_saddle,
    solve_bilinear_saddle,
    solve_lp,
)
from .model import StandardLP
from .solids import Box, Product


class InstanceInfeasibleError(RuntimeError):
    """Some block admits no ``x1`` for any ``x2``; the whole LP is infeasible."""


@dataclass(eq=False)
class BendersResponse:
    productive: bool
    f: float = None
    g: np.ndarray = None
    x1: np.ndarray = None
    y1: np.ndarray = None
    e: np.ndarray = None
    block: int = None


@dataclass(eq=False)
class LagrangeResponse:
    f: float
    g: np.ndarray
    x1: np.ndarray


@dataclass(eq=False)
class PhiResponse:
    x1: np.ndarray
    y1: np.ndarray
    e_x: np.ndarray
    e_y: np.ndarray
    value: float


def _vectors(inst, x1, x2, y1, y2):
    x1, x2, y1, y2 = (as_vector(v, n) for v, n in
                      ((x1, "x1"), (x2, "x2"), (y1, "y1"), (y2, "y2")))
    want = (inst.n1, inst.n2, inst.m1, inst.m2)
    got = (x1.shape[0], x2.shape[0], y1.shape[0], y2.shape[0])
    if want != got:
        raise DimensionError(f"point dims {got} do not match instance {want}")
    return x1, x2, y1, y2


def x_box(inst):
    return Box.symmetric(inst.n1 + inst.n2, inst.R)


def y1_box(inst):
    return Box(np.zeros(inst.m1), inst.dual_upper())


def y_solid(inst, Y2):
    return Product((y1_box(inst), Y2))


def _full(inst):
    A = np.vstack([np.hstack([inst.A11, inst.A12]), np.hstack([inst.A21, inst.A22])])
    return np.concatenate([inst.c1, inst.c2]), A, np.concatenate([inst.b1, inst.b2])


def psi_value(inst, x1, x2, y1, y2):
    x1, x2, y1, y2 = _vectors(inst, x1, x2, y1, y2)
    r1 = inst.A11 @ x1 + inst.A12 @ x2 - inst.b1
    r2 = inst.A21 @ x1 + inst.A22 @ x2 - inst.b2
    return float(inst.c1 @ x1 + inst.c2 @ x2 + y1 @ r1 + y2 @ r2)


def psi_gradients(inst, x1, x2, y1, y2):
    """Partial gradients of the bilinear ``Psi``; these are regular sub/supergradients."""
    x1, x2, y1, y2 = _vectors(inst, x1, x2, y1, y2)
    return {
        "gx1": inst.c1 + inst.A11.T @ y1 + inst.A21.T @ y2,
        "gx2": inst.c2 + inst.A12.T @ y1 + inst.A22.T @ y2,
        "gy1": inst.A11 @ x1 + inst.A12 @ x2 - inst.b1,
        "gy2": inst.A21 @ x1 + inst.A22 @ x2 - inst.b2,
    }


def benders_oracle(inst, x2):
    """Value and subgradient of ``f(x2) = min_x1 {c1'x1 + c2'x2 : ...}``, or a cut.

    Each block LP ``min c1_k'x1k s.t. A11_k x1k <= b1_k - A12_k x2`` is solved
    separately. If one is infeasible its Farkas vector ``u`` gives the
    separator ``e = A12_k' u``: every feasible ``x2'`` has ``<e, x2'> < <e, x2>``.
    """
    x2 = as_vector(x2, "x2")
    if x2.shape[0] != inst.n2:
        raise DimensionError("x2 does not match the instance")
    xs, ys = [], []
    for k, blk in enumerate(inst.blocks):
        lp = StandardLP(blk.c1, blk.A11, blk.b1 - blk.A12 @ x2,
                        np.full(blk.n1, -inst.R), np.full(blk.n1, inst.R))
        res = solve_lp(lp)
        if res.status == INFEASIBLE:
            e = blk.A12.T @ res.farkas
            if not np.any(e != 0):
                raise InstanceInfeasibleError(f"block {k} is infeasible for every x2")
            y1 = np.zeros(inst.m1)
            o = inst.y_offsets()
            y1[o[k]:o[k + 1]] = res.farkas
            return BendersResponse(productive=False, e=e, y1=y1, block=k)
        xs.append(res.x)
        ys.append(res.y)
    x1 = np.concatenate(xs) if xs else np.zeros(0)
    y1 = np.concatenate(ys) if ys else np.zeros(0)
    f = float(inst.c1 @ x1 + inst.c2 @ x2)
    g = inst.A12.T @ y1 + inst.c2
    return BendersResponse(productive=True, f=f, g=g, x1=x1, y1=y1)


def lagrange_oracle(inst, y2):
    """Dual function of the linking rows, in minimization form.

    ``f(y2) = max_x1 {-(c1 + A21'y2)'x1 : A11 x1 <= b1, box} + b2'y2`` and
    ``g = b2 - A21 x1(y2)``.
    """
    y2 = as_vector(y2, "y2")
    if y2.shape[0] != inst.m2:
        raise DimensionError("y2 does not match the instance")
    xs = []
    inner = 0.0
    for k, blk in enumerate(inst.blocks):
        d = blk.c1 + blk.A21.T @ y2
        res = solve_lp(StandardLP(d, blk.A11, blk.b1,
                                  np.full(blk.n1, -inst.R), np.full(blk.n1, inst.R)))
        if not res.optimal:
            raise InstanceInfeasibleError(f"block {k} has no feasible x1")
        xs.append(res.x)
        inner += res.objective
    x1 = np.concatenate(xs) if xs else np.zeros(0)
    f = float(-inner + inst.b2 @ y2)
    g = inst.b2 - inst.A21 @ x1
    return LagrangeResponse(f=f, g=g, x1=x1)


def phi_oracle(inst, x2, y2):
    """Monotone map of the reduced saddle problem at the outer point ``(x2, y2)``.

    Solves the inner saddle over ``(x1, y1)`` exactly and returns the
    ``x2``-gradient and the negated ``y2``-gradient of ``Psi`` there.
    """
    x2 = as_vector(x2, "x2")
    y2 = as_vector(y2, "y2")
    inner = block_saddle(inst, x2, y2)
    x1, y1 = inner["x1"], inner["y1"]
    e_x = inst.c2 + inst.A12.T @ y1 + inst.A22.T @ y2
    e_y = -(inst.A21 @ x1 + inst.A22 @ x2 - inst.b2)
    value = inner["value"] + float(inst.c2 @ x2 + y2 @ (inst.A22 @ x2 - inst.b2))
    return PhiResponse(x1=x1, y1=y1, e_x=e_x, e_y=e_y, value=value)


# -------------------------------------------------------------- saddle values

def master_saddle(inst, Y2):
    """Saddle point of ``Psi`` over ``X x (Y1 x Y2)`` by a single LP."""
    c, A, b = _full(inst)
    sp = solve_bilinear_saddle(c, A, b, x_box(inst), y_solid(inst, Y2))
    n1, m1 = inst.n1, inst.m1
    return {"x1": sp.x_star[:n1], "x2": sp.x_star[n1:],
            "y1": sp.y_star[:m1], "y2": sp.y_star[m1:], "value": sp.value}


def _saddle_value(c, A, b, const, xdim, R, ysolid):
    if A.shape[0] == 0:
        # no y at all: plain minimization of a linear form over the box
        return const + float(-np.abs(c).sum() * R)
    sp = solve_bilinear_saddle(c, A, b, Box.symmetric(xdim, R), ysolid)
    return const + sp.value


def induced_value(inst, side, xi, yi, Y2):
    """Induced function ``Psi_1(x1, y1)`` (side 1) or ``Psi_2(x2, y2)`` (side 2).

    Side 1 eliminates ``(x2, y2)`` by ``min_x2 max_y2``; side 2 eliminates
    ``(x1, y1)`` by ``min_x1 max_y1``.
    """
    xi = as_vector(xi, "x")
    yi = as_vector(yi, "y")
    if side == 1:
        if xi.shape[0] != inst.n1 or yi.shape[0] != inst.m1:
            raise DimensionError("side-1 point does not match (n1, m1)")
        const = float(inst.c1 @ xi + yi @ (inst.A11 @ xi - inst.b1))
        return _saddle_value(inst.c2 + inst.A12.T @ yi, inst.A22, inst.b2 - inst.A21 @ xi,
                             const, inst.n2, inst.R, Y2)
    if side == 2:
        if xi.shape[0] != inst.n2 or yi.shape[0] != inst.m2:
            raise DimensionError("side-2 point does not match (n2, m2)")
        return phi_oracle(inst, xi, yi).value
    raise ValueError("side must be 1 or 2")


def eps_sad(inst, x1, x2, y1, y2, Y2):
    """Exact duality gap ``max_y Psi(x, y) - min_x Psi(x', y)`` of the master problem."""
    x1, x2, y1, y2 = _vectors(inst, x1, x2, y1, y2)
    c, A, b = _full(inst)
    x = np.concatenate([x1, x2])
    y = np.concatenate([y1, y2])
    upper = c @ x + y_solid(inst, Y2).support(A @ x - b)[0]
    lower = -x_box(inst).support(-(c + A.T @ y))[0] - y @ b
    return float(upper - lower)


def induced_bounds(inst, side, xi, yi, Y2):
    """``(max_eta Psi_i(x_i, eta), min_xi Psi_i(xi, y_i))`` for an induced problem.

    Each half is a single bilinear saddle after swapping min and max in the
    eliminated pair.
    """
    xi = as_vector(xi, "x")
    yi = as_vector(yi, "y")
    R = inst.R
    Yfull = y_solid(inst, Y2)
    if side == 1:
        x1, y1 = xi, yi
        upper = _saddle_value(
            inst.c2, np.vstack([inst.A12, inst.A22]),
            np.concatenate([inst.b1 - inst.A11 @ x1, inst.b2 - inst.A21 @ x1]),
            float(inst.c1 @ x1), inst.n2, R, Yfull)
        lower = _saddle_value(
            np.concatenate([inst.c1 + inst.A11.T @ y1, inst.c2 + inst.A12.T @ y1]),
            np.hstack([inst.A21, inst.A22]), inst.b2,
            -float(y1 @ inst.b1), inst.n1 + inst.n2, R, Y2)
    elif side == 2:
        x2, y2 = xi, yi
        upper = _saddle_value(
            inst.c1, np.vstack([inst.A11, inst.A21]),
            np.concatenate([inst.b1 - inst.A12 @ x2, inst.b2 - inst.A22 @ x2]),
            float(inst.c2 @ x2), inst.n1, R, Yfull)
        lower = _saddle_value(
            np.concatenate([inst.c1 + inst.A21.T @ y2, inst.c2 + inst.A22.T @ y2]),
            np.hstack([inst.A11, inst.A12]), inst.b1,
            -float(y2 @ inst.b2), inst.n1 + inst.n2, R, y1_box(inst))
    else:
        raise ValueError("side must be 1 or 2")
    return upper, lower


def eps_sad_induced(inst, side, xi, yi, Y2):
    upper, lower = induced_bounds(inst, side, xi, yi, Y2)
    return upper - lower


__all__ = [
    "BendersResponse", "InstanceInfeasibleError", "KernelError", "LagrangeResponse",
    "PhiResponse", "benders_oracle", "eps_sad", "eps_sad_induced", "induced_bounds",
    "induced_value", "lagrange_oracle", "master_saddle", "phi_oracle", "psi_gradients",
    "psi_value", "x_box", "y1_box", "y_solid",
]
