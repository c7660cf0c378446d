"""Dense bounded-variable primal simplex and box-constrained bilinear saddles.

``solve_lp`` handles ``min c'x s.t. Ax <= b, lower <= x <= upper`` with
finite bounds, so the only outcomes are an optimal vertex with dual
multipliers or infeasibility with a Farkas vector obtained from phase one.
"""

from dataclasses import dataclass

import numpy as np

from . import tolerances
from .linalg import DimensionError, as_matrix, as_vector
from .model import StandardLP
from .solids import Box, Product, ScaledSimplex

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"


class KernelError(RuntimeError):
    """Numerical failure inside the LP kernel."""


class IterationLimitError(KernelError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"simplex exceeded its iteration cap of {cap} pivots")


@dataclass(eq=False)
class LPResult:
    status: str
    x: np.ndarray = None
    y: np.ndarray = None
    reduced_bounds_duals: np.ndarray = None
    objective: float = None
    farkas: np.ndarray = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass(eq=False)
class SaddlePoint:
    x_star: np.ndarray
    y_star: np.ndarray
    value: float
    gap: float


class _Simplex:
    """Revised simplex on ``M v = rhs`` with ``lo <= v <= hi``.

    The basis inverse is updated in product form and refactored every
    25 pivots and before optimality is declared.
    """

    def __init__(self, M, rhs, lo, hi, basis, v, pivot_rule="bland", max_iter=None):
        self.M = M
        self.rhs = rhs
        self.lo = lo
        self.hi = hi
        self.basis = list(basis)
        self.v = v
        self.rule = pivot_rule
        m, N = M.shape
        self.max_iter = max_iter or 50 * (m + N) + 1000
        self.iterations = 0
        scale = max(1.0, np.abs(M).max(initial=0.0))
        self.ptol = 1e-11 * scale
        self.refactor_every = 25
        self._refresh()

    def _refresh(self):
        is_basic = np.zeros(self.M.shape[1], dtype=bool)
        is_basic[self.basis] = True
        self.is_basic = is_basic
        B = self.M[:, self.basis]
        r = self.rhs - self.M[:, ~is_basic] @ self.v[~is_basic]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise KernelError("singular basis") from exc
        xb = self.binv @ r
        self.v[self.basis] = xb
        self.since_refactor = 0

    def run(self, cost, dtol):
        m = self.M.shape[0]
        while True:
            pi = self.binv.T @ cost[self.basis]
            d = cost - self.M.T @ pi
            d[self.basis] = 0.0
            movable = self.hi > self.lo
            at_lo = (self.v <= self.lo) & movable & ~self.is_basic
            at_hi = (self.v >= self.hi) & movable & ~self.is_basic
            cand = (at_lo & (d < -dtol)) | (at_hi & (d > dtol))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                if self.since_refactor:
                    self._refresh()
                    continue
                return pi, d
            if self.iterations >= self.max_iter:
                raise IterationLimitError(self.max_iter)
            self.iterations += 1
            if self.rule == "bland":
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if at_lo[j] else -1.0
            delta = self.binv @ self.M[:, j]
            # basic values move by -direction * t * delta
            step = direction * delta
            t_flip = self.hi[j] - self.lo[j]
            bidx = np.asarray(self.basis)
            vb, lob, hib = self.v[bidx], self.lo[bidx], self.hi[bidx]
            ratios = np.full(m, np.inf)
            dec = step > self.ptol
            inc = (step < -self.ptol) & np.isfinite(hib)
            ratios[dec] = (vb[dec] - lob[dec]) / step[dec]
            ratios[inc] = (hib[inc] - vb[inc]) / -step[inc]
            np.maximum(ratios, 0.0, out=ratios)
            t_min = ratios.min() if m else np.inf
            if t_min < t_flip - 1e-13:
                ties = np.flatnonzero(ratios <= t_min + 1e-13)
                leave = int(ties[np.argmin(bidx[ties])])
                t_best, leave_to_hi = t_min, bool(inc[leave])
            else:
                t_best, leave, leave_to_hi = t_flip, -1, False
            if not np.isfinite(t_best):
                raise KernelError("unbounded direction in a bounded LP")
            t_best = float(t_best)
            if leave < 0:
                # bound flip of the entering variable
                self.v[j] = self.hi[j] if direction > 0 else self.lo[j]
                self.v[bidx] -= (direction * t_flip) * delta
                continue
            out = self.basis[leave]
            self.v[bidx] -= (direction * t_best) * delta
            self.v[j] = self.v[j] + direction * t_best
            self.v[out] = self.hi[out] if leave_to_hi else self.lo[out]
            self.basis[leave] = j
            self.is_basic[out] = False
            self.is_basic[j] = True
            self.since_refactor += 1
            if self.since_refactor >= self.refactor_every:
                self._refresh()
            else:
                # product-form update of the basis inverse
                piv = delta[leave]
                row = self.binv[leave] / piv
                self.binv -= np.outer(delta, row)
                self.binv[leave] = row


def solve_lp(lp, pivot_rule="bland", feas_tol=None, max_iter=None):
    """Solve ``lp`` (a ``StandardLP``) by two-phase bounded primal simplex.

    Optimal results carry ``y >= 0`` for the rows and the reduced costs of
    the columns, so ``c + A'y - reduced_bounds_duals = 0``. Infeasible
    results carry ``farkas >= 0`` with ``farkas'(Ax - b) > 0`` on the box.
    """
    if not isinstance(lp, StandardLP):
        raise TypeError("solve_lp expects a StandardLP")
    tol = tolerances.feasibility() if feas_tol is None else feas_tol
    A, b, c = lp.A, lp.b, lp.c
    m, n = A.shape
    lo_x, hi_x = lp.lower, lp.upper

    xn = np.where(np.abs(lo_x) <= np.abs(hi_x), lo_x, hi_x).astype(float)
    resid = b - A @ xn
    neg = np.flatnonzero(resid < 0)
    na = neg.size
    N = n + m + na
    M = np.zeros((m, N))
    M[:, :n] = A
    M[:, n:n + m] = np.eye(m)
    for k, i in enumerate(neg):
        M[i, n + m + k] = -1.0
    lo = np.concatenate([lo_x, np.zeros(m + na)])
    hi = np.concatenate([hi_x, np.full(m, np.inf), np.full(na, np.inf)])
    v = np.concatenate([xn, np.zeros(m + na)])
    basis = [n + i for i in range(m)]
    for k, i in enumerate(neg):
        basis[i] = n + m + k
    if m == 0:
        x = np.where(c > 0, lo_x, np.where(c < 0, hi_x, lo_x))
        return LPResult(OPTIMAL, x=x, y=np.zeros(0), reduced_bounds_duals=c.copy(),
                        objective=float(c @ x))

    sx = _Simplex(M, b.astype(float), lo, hi, basis, v, pivot_rule, max_iter)
    scale_b = 1.0 + np.abs(b).max(initial=0.0) + np.abs(A).max(initial=0.0) * max(
        1.0, np.abs(lo_x).max(initial=0.0), np.abs(hi_x).max(initial=0.0))
    dtol = 1e-13

    if na:
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        pi1, _ = sx.run(cost1, dtol)
        infeas = float(sx.v[n + m:].sum())
        if infeas > 1e-12 * scale_b:
            # any leftover with a valid proof is infeasible; rounding-level
            # leftovers without one are accepted up to the tolerance
            y = np.maximum(-pi1, 0.0)
            if farkas_margin(A, b, lo_x, hi_x, y) > 0:
                return LPResult(INFEASIBLE, farkas=y, iterations=sx.iterations)
            if infeas > tol * scale_b:
                raise KernelError(
                    f"phase one infeasibility {infeas:.3e} without a valid Farkas vector")
        sx.hi[n + m:] = 0.0
        sx.v[n + m:] = np.clip(sx.v[n + m:], 0.0, 0.0)
        sx._refresh()

    cscale = max(1.0, np.abs(c).max(initial=0.0))
    cost2 = np.concatenate([c, np.zeros(m + na)])
    pi, d = sx.run(cost2, dtol * cscale)
    x = np.clip(sx.v[:n], lo_x, hi_x)
    y = np.maximum(-pi, 0.0)
    rbd = c + A.T @ y
    return LPResult(OPTIMAL, x=x, y=y, reduced_bounds_duals=rbd,
                    objective=float(c @ x), iterations=sx.iterations)


def farkas_margin(A, b, lower, upper, y):
    """``min over the box of y'(Ax - b)``; positive means ``y`` proves infeasibility."""
    g = A.T @ y
    return float(np.minimum(g * lower, g * upper).sum() - y @ b)


def dual_objective(lp, res):
    """Value of the dual at ``(y, reduced_bounds_duals)``."""
    d = res.reduced_bounds_duals
    bound = np.where(d > 0, lp.lower, lp.upper)
    return float(-res.y @ lp.b + d @ bound)


# ----------------------------------------------------------- bilinear saddles

def _y_factors(ysolid):
    if isinstance(ysolid, Product):
        out = []
        for f in ysolid.factors:
            out.extend(_y_factors(f))
        return out
    if isinstance(ysolid, Box):
        if np.any(ysolid.lower != 0):
            raise ValueError("dual box must have lower bound 0")
        return [ysolid]
    if isinstance(ysolid, ScaledSimplex):
        return [ysolid]
    raise TypeError(f"unsupported dual solid {type(ysolid).__name__}")


def bilinear_upper(c, A, b, x, ysolid):
    """``max_{y in Y} c'x + y'(Ax - b)``."""
    return float(c @ x + ysolid.support(A @ x - b)[0])


def bilinear_lower(c, A, b, y, xbox):
    """``min_{x in X} c'x + y'(Ax - b)``."""
    g = c + A.T @ y
    return float(-xbox.support(-g)[0] - y @ b)


def solve_bilinear_saddle(c, A, b, xbox, ybox, gap_tol=None):
    """Saddle point of ``<c, x> + <y, Ax - b>`` over ``xbox`` x ``ybox``.

    The max over ``y`` is written with epigraph variables: one ``s_i >= 0``
    per row of a box factor (cost ``u_i``) and one scalar ``t >= 0`` per
    simplex factor (cost ``L``). The row multipliers of the resulting LP
    are the maximizing ``y``. ``ybox`` may be a ``Box`` with zero lower
    bound, a ``ScaledSimplex`` or a ``Product`` of those.
    """
    c = as_vector(c, "c")
    b = as_vector(b, "b")
    A = as_matrix(A, rows=b.shape[0], cols=c.shape[0], name="A")
    if not isinstance(xbox, Box) or xbox.dim != c.shape[0]:
        raise DimensionError("xbox must be a Box matching c")
    if ybox.dim != b.shape[0]:
        raise DimensionError("ybox must match the rows of A")
    gap_tol = tolerances.saddle_gap() if gap_tol is None else gap_tol
    m, n = A.shape
    factors = _y_factors(ybox)
    # worst possible row residual over the box bounds every epigraph variable
    resid_hi = np.abs(A) @ np.maximum(np.abs(xbox.lower), np.abs(xbox.upper)) + np.abs(b) + 1.0

    cols_cost, cols_lo, cols_hi = [], [], []
    E = np.zeros((m, 0))
    extra = []
    row = 0
    for f in factors:
        rows = np.arange(row, row + f.dim)
        if isinstance(f, Box):
            col = np.zeros((m, f.dim))
            col[rows, np.arange(f.dim)] = -1.0
            extra.append(col)
            cols_cost.extend(f.upper.tolist())
            cols_lo.extend([0.0] * f.dim)
            cols_hi.extend(resid_hi[rows].tolist())
        else:
            col = np.zeros((m, 1))
            col[rows, 0] = -1.0
            extra.append(col)
            cols_cost.append(f.L)
            cols_lo.append(0.0)
            cols_hi.append(float(resid_hi[rows].max(initial=1.0)))
        row += f.dim
    if extra:
        E = np.hstack(extra)
    lp = StandardLP(
        c=np.concatenate([c, cols_cost]),
        A=np.hstack([A, E]),
        b=b,
        lower=np.concatenate([xbox.lower, cols_lo]),
        upper=np.concatenate([xbox.upper, cols_hi]),
    )
    res = solve_lp(lp)
    if not res.optimal:
        raise KernelError("epigraph reformulation reported infeasible")
    x = res.x[:n]
    y = _clip_to(ybox, res.y)
    upper = bilinear_upper(c, A, b, x, ybox)
    lower = bilinear_lower(c, A, b, y, xbox)
    gap = upper - lower
    scale = 1.0 + abs(upper)
    if gap > gap_tol * scale:
        raise KernelError(f"bilinear saddle gap {gap:.3e} exceeds tolerance")
    return SaddlePoint(x_star=x, y_star=y, value=upper, gap=gap)


def _clip_to(ysolid, y):
    if isinstance(ysolid, Product):
        parts = [_clip_to(f, yi) for f, yi in zip(ysolid.factors, ysolid.split(y))]
        return np.concatenate(parts) if parts else np.zeros(0)
    if isinstance(ysolid, Box):
        return np.clip(y, ysolid.lower, ysolid.upper)
    y = np.maximum(y, 0.0)
    s = y.sum()
    return y * (ysolid.L / s) if s > ysolid.L else y


def block_saddle(inst, x2, y2):
    """Solve the inner saddle over ``(x1, y1)`` block by block.

    Block ``k`` sees ``c = c1_k + A21_k' y2`` and ``b = b1_k - A12_k x2`` with
    ``y1_k`` in ``[0, R_k]``. ``value`` is the sum of the block values; the
    terms ``c2'x2 + y2'(A22 x2 - b2)`` are left to the caller.
    """
    x2 = as_vector(x2, "x2")
    y2 = as_vector(y2, "y2")
    if x2.shape[0] != inst.n2 or y2.shape[0] != inst.m2:
        raise DimensionError("x2/y2 do not match the instance")
    xs, ys, value = [], [], 0.0
    for blk, rk in zip(inst.blocks, inst.dual_box):
        sp = solve_bilinear_saddle(
            blk.c1 + blk.A21.T @ y2, blk.A11, blk.b1 - blk.A12 @ x2,
            Box.symmetric(blk.n1, inst.R), Box(np.zeros(blk.m1), np.full(blk.m1, rk)))
        xs.append(sp.x_star)
        ys.append(sp.y_star)
        value += sp.value
    cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)  # noqa: E731
    return {"x1": cat(xs), "y1": cat(ys), "value": value}
