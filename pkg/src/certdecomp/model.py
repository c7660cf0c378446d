"""Block-angular LP instances.

The problem is::

    min  c1'x1 + c2'x2
    s.t. A11 x1 + A12 x2 <= b1      (A11 block diagonal)
         A21 x1 + A22 x2 <= b2      (linking rows)
         ||x||_inf <= R

with ``x1 = [x11; ...; x1K]``. ``m2 = 0`` is the no-linking-rows shape,
``n2 = 0`` the no-linking-columns shape.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector, l1

FORMAT_VERSION = 1


class InvalidInstanceError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid instance: " + "; ".join(self.violations))


class InstanceFormatError(ValueError):
    """Instance file could not be parsed."""


@dataclass(eq=False)
class Block:
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    c1: np.ndarray
    b1: np.ndarray

    @property
    def n1(self):
        return self.c1.shape[0]

    @property
    def m1(self):
        return self.b1.shape[0]


@dataclass(eq=False)
class StandardLP:
    """``min c'x  s.t.  A x <= b,  lower <= x <= upper``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.c = as_vector(self.c, "c")
        self.b = as_vector(self.b, "b")
        self.A = as_matrix(self.A, rows=self.b.shape[0], cols=self.c.shape[0], name="A")
        self.lower = as_vector(self.lower, "lower")
        self.upper = as_vector(self.upper, "upper")
        if self.lower.shape != self.c.shape or self.upper.shape != self.c.shape:
            raise ValueError("bounds must match the number of variables")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def m(self):
        return self.b.shape[0]


@dataclass(eq=False)
class BlockLPInstance:
    blocks: list
    A22: np.ndarray
    c2: np.ndarray
    b2: np.ndarray
    R: float
    dual_box: list = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c2 = as_vector(self.c2, "c2")
        self.b2 = as_vector(self.b2, "b2")
        self.A22 = _shaped(self.A22, self.m2, self.n2)
        fixed = []
        for blk in self.blocks:
            c1 = as_vector(blk.c1, "c1")
            b1 = as_vector(blk.b1, "b1")
            fixed.append(Block(
                A11=_shaped(blk.A11, b1.shape[0], c1.shape[0]),
                A12=_shaped(blk.A12, b1.shape[0], self.n2),
                A21=_shaped(blk.A21, self.m2, c1.shape[0]),
                c1=c1, b1=b1))
        self.blocks = fixed
        self.R = float(self.R)
        if self.dual_box is None:
            r = default_dual_radius(self)
            self.dual_box = [r] * len(self.blocks)
        else:
            self.dual_box = [float(v) for v in self.dual_box]

    @property
    def K(self):
        return len(self.blocks)

    @property
    def n2(self):
        return self.c2.shape[0]

    @property
    def m2(self):
        return self.b2.shape[0]

    @property
    def n1(self):
        return sum(b.n1 for b in self.blocks)

    @property
    def m1(self):
        return sum(b.m1 for b in self.blocks)

    def x_offsets(self):
        return np.cumsum([0] + [b.n1 for b in self.blocks])

    def y_offsets(self):
        return np.cumsum([0] + [b.m1 for b in self.blocks])

    @property
    def c1(self):
        return _cat([b.c1 for b in self.blocks])

    @property
    def b1(self):
        return _cat([b.b1 for b in self.blocks])

    @property
    def A11(self):
        out = np.zeros((self.m1, self.n1))
        xo, yo = self.x_offsets(), self.y_offsets()
        for k, b in enumerate(self.blocks):
            out[yo[k]:yo[k + 1], xo[k]:xo[k + 1]] = b.A11
        return out

    @property
    def A12(self):
        if not self.blocks:
            return np.zeros((0, self.n2))
        return np.vstack([b.A12 for b in self.blocks])

    @property
    def A21(self):
        if not self.blocks:
            return np.zeros((self.m2, 0))
        return np.hstack([b.A21 for b in self.blocks])

    def split_x1(self, x1):
        o = self.x_offsets()
        return [x1[o[k]:o[k + 1]] for k in range(self.K)]

    def split_y1(self, y1):
        o = self.y_offsets()
        return [y1[o[k]:o[k + 1]] for k in range(self.K)]

    def dual_upper(self):
        """Upper bounds of the per-block dual box Y1, one per row of b1."""
        return _cat([np.full(b.m1, r) for b, r in zip(self.blocks, self.dual_box)])

    def equals(self, other):
        if self.K != other.K or self.R != other.R:
            return False
        pairs = [(self.A22, other.A22), (self.c2, other.c2), (self.b2, other.b2),
                 (np.array(self.dual_box), np.array(other.dual_box))]
        for a, b in zip(self.blocks, other.blocks):
            pairs += [(a.A11, b.A11), (a.A12, b.A12), (a.A21, b.A21),
                      (a.c1, b.c1), (a.b1, b.b1)]
        return all(x.shape == y.shape and np.array_equal(x, y) for x, y in pairs)


def _shaped(A, rows, cols):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros((rows, cols))
    return A


def _cat(parts):
    return np.concatenate(parts) if parts else np.zeros(0)


def default_dual_radius(inst):
    return 10.0 * (1.0 + l1(inst.c1))


def validate(inst):
    """List every structural problem with ``inst``; empty means valid."""
    out = []
    n2, m2 = inst.c2.shape[0], inst.b2.shape[0]
    if not (np.isfinite(inst.R) and inst.R > 0):
        out.append(f"radius R must be positive and finite, got {inst.R}")
    if inst.K < 1:
        out.append("instance needs at least one block")
    if inst.A22.shape != (m2, n2):
        out.append(f"A22 has shape {inst.A22.shape}, expected {(m2, n2)}")
    for k, b in enumerate(inst.blocks):
        n1k, m1k = b.c1.shape[0], b.b1.shape[0]
        for name, M, shape in (("A11", b.A11, (m1k, n1k)), ("A12", b.A12, (m1k, n2)),
                               ("A21", b.A21, (m2, n1k))):
            if M.ndim != 2 or M.shape != shape:
                out.append(f"block {k}: {name} has shape {M.shape}, expected {shape}")
            elif not np.all(np.isfinite(M)):
                out.append(f"block {k}: {name} has non-finite entries")
        for name, v in (("c1", b.c1), ("b1", b.b1)):
            if not np.all(np.isfinite(v)):
                out.append(f"block {k}: {name} has non-finite entries")
    for name, v in (("c2", inst.c2), ("b2", inst.b2), ("A22", inst.A22)):
        if not np.all(np.isfinite(v)):
            out.append(f"{name} has non-finite entries")
    if len(inst.dual_box) != inst.K:
        out.append(f"dual_box has {len(inst.dual_box)} entries, expected {inst.K}")
    elif any(not (np.isfinite(r) and r > 0) for r in inst.dual_box):
        out.append("dual_box radii must be positive and finite")
    return out


def assemble_full(inst):
    """Flatten to one ``StandardLP`` over ``[x1 blocks; x2]`` with rows ``[b1; b2]``."""
    bad = validate(inst)
    if bad:
        raise InvalidInstanceError(bad)
    n1, n2 = inst.n1, inst.n2
    top = np.hstack([inst.A11, inst.A12])
    bottom = np.hstack([inst.A21, inst.A22])
    A = np.vstack([top, bottom])
    n = n1 + n2
    return StandardLP(
        c=np.concatenate([inst.c1, inst.c2]),
        A=A,
        b=np.concatenate([inst.b1, inst.b2]),
        lower=np.full(n, -inst.R),
        upper=np.full(n, inst.R),
    )


def _sparse_uniform(rng, shape, density):
    M = rng.uniform(-1.0, 1.0, size=shape)
    if density < 1.0:
        M *= rng.random(shape) < density
    return M


def generate(K, n1k, m1k, n2, m2, R=10.0, density=1.0, seed=0,
             force_infeasible_x2=False):
    """Random instance that is feasible by construction.

    A point ``x0`` with ``||x0||_inf <= R/2`` is drawn first and every
    right-hand side is ``A x0 + s`` with slacks ``s`` in ``[0.1, 1]``.

    With ``force_infeasible_x2`` the first row of block 0 is rewritten so
    that it mostly constrains ``x2[0]``, ``x0`` gets ``x2[0] = -R/2`` and the
    slack is shrunk; then every ``x2`` with ``x2[0] > 0.1 - 0.35 R`` (the centre
    of the box included) admits no ``x1``. Needs ``n2 >= 1``, ``m1k >= 1``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if min(n1k, m1k, n2, m2) < 0:
        raise ValueError("dimensions must be nonnegative")
    if not (0 < density <= 1):
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    x0_1 = [rng.uniform(-R / 2, R / 2, size=n1k) for _ in range(K)]
    x0_2 = rng.uniform(-R / 2, R / 2, size=n2)
    force = force_infeasible_x2 and m1k >= 1 and n2 >= 1
    if force:
        x0_2[0] = -R / 2
    blocks = []
    for k in range(K):
        A11 = _sparse_uniform(rng, (m1k, n1k), density)
        A12 = _sparse_uniform(rng, (m1k, n2), density)
        A21 = _sparse_uniform(rng, (m2, n1k), density)
        c1 = rng.uniform(-1.0, 1.0, size=n1k)
        s1 = rng.uniform(0.1, 1.0, size=m1k)
        if force and k == 0:
            A11[0] *= 0.1 / max(1.0, np.abs(A11[0]).sum())
            A12[0] = 0.0
            A12[0, 0] = 1.0
            s1[0] = 0.1
        b1 = A11 @ x0_1[k] + A12 @ x0_2 + s1
        blocks.append(Block(A11=A11, A12=A12, A21=A21, c1=c1, b1=b1))
    A22 = _sparse_uniform(rng, (m2, n2), density)
    c2 = rng.uniform(-1.0, 1.0, size=n2)
    s2 = rng.uniform(0.1, 1.0, size=m2)
    b2 = A22 @ x0_2 + s2
    for k in range(K):
        b2 = b2 + blocks[k].A21 @ x0_1[k]
    inst = BlockLPInstance(blocks=blocks, A22=A22, c2=c2, b2=b2, R=R)
    inst.meta = {"seed": seed, "x0": np.concatenate(x0_1 + [x0_2]).tolist(),
                 "force_infeasible_x2": bool(force_infeasible_x2)}
    return inst


# ---------------------------------------------------------------- file I/O

def _mat_out(M):
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": M.tolist()}


def to_dict(inst):
    return {
        "version": FORMAT_VERSION,
        "R": inst.R,
        "blocks": [{"A11": _mat_out(b.A11), "A12": _mat_out(b.A12),
                    "A21": _mat_out(b.A21), "c1": b.c1.tolist(), "b1": b.b1.tolist()}
                   for b in inst.blocks],
        "A22": _mat_out(inst.A22),
        "c2": inst.c2.tolist(),
        "b2": inst.b2.tolist(),
        "dual_box": list(inst.dual_box),
    }


def save(inst, path):
    with open(path, "w") as fh:
        # json writes floats with repr, which round-trips exactly
        json.dump(to_dict(inst), fh, indent=1)
        fh.write("\n")


def _need(d, key, where):
    if not isinstance(d, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    if key not in d:
        raise InstanceFormatError(f"{where}: missing field '{key}'")
    return d[key]


def _mat_in(d, where):
    rows = _need(d, "rows", where)
    cols = _need(d, "cols", where)
    data = _need(d, "data", where)
    try:
        M = np.array(data, dtype=float).reshape(rows, cols) if rows * cols \
            else np.zeros((rows, cols))
    except (ValueError, TypeError) as exc:
        raise InstanceFormatError(f"{where}: data does not match {rows}x{cols}: {exc}")
    return M


def _vec_in(d, key, where):
    try:
        return np.array(_need(d, key, where), dtype=float).reshape(-1)
    except (ValueError, TypeError) as exc:
        raise InstanceFormatError(f"{where}.{key}: {exc}")


def from_dict(d):
    version = _need(d, "version", "instance")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"instance: unsupported version {version!r}")
    blocks = []
    for k, bd in enumerate(_need(d, "blocks", "instance")):
        where = f"blocks[{k}]"
        blocks.append(Block(
            A11=_mat_in(_need(bd, "A11", where), where + ".A11"),
            A12=_mat_in(_need(bd, "A12", where), where + ".A12"),
            A21=_mat_in(_need(bd, "A21", where), where + ".A21"),
            c1=_vec_in(bd, "c1", where), b1=_vec_in(bd, "b1", where)))
    inst = BlockLPInstance(
        blocks=blocks,
        A22=_mat_in(_need(d, "A22", "instance"), "A22"),
        c2=_vec_in(d, "c2", "instance"),
        b2=_vec_in(d, "b2", "instance"),
        R=float(_need(d, "R", "instance")),
        dual_box=d.get("dual_box"),
    )
    bad = validate(inst)
    if bad:
        raise InvalidInstanceError(bad)
    return inst


def load(path):
    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(d)
