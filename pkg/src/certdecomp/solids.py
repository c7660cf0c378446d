"""Simple solids with closed-form support functions and projections.

Three shapes are supported: axis-aligned boxes, the scaled nonnegative
simplex ``{y >= 0, sum(y) <= L}`` and Cartesian products of those.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, as_vector


class Solid:
    """Base class; subclasses implement the geometry."""

    dim: int

    def support(self, g):
        """Return ``(max_{z in solid} <g, z>, argmax)``."""
        raise NotImplementedError

    def contains(self, z, tol=0.0):
        raise NotImplementedError

    def project(self, z):
        raise NotImplementedError

    def separator(self, z):
        """Nonzero ``e`` with ``<e, z'> < <e, z>`` for every ``z'`` in the solid.

        Only meaningful when ``z`` lies outside; returns ``None`` otherwise.
        """
        raise NotImplementedError

    def center(self):
        raise NotImplementedError

    def diameter(self):
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def _check(self, g):
        g = as_vector(g)
        if g.shape[0] != self.dim:
            raise DimensionError(
                f"{type(self).__name__} has dim {self.dim}, got {g.shape[0]}")
        return g


@dataclass(frozen=True, eq=False)
class Box(Solid):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, "lower")
        hi = as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in length")
        if np.any(lo > hi):
            raise ValueError("box has lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, dim, radius):
        return cls(-radius * np.ones(dim), radius * np.ones(dim))

    @property
    def dim(self):
        return self.lower.shape[0]

    def support(self, g):
        g = self._check(g)
        arg = np.where(g > 0, self.upper, self.lower)
        return float(g @ arg), arg

    def contains(self, z, tol=0.0):
        z = self._check(z)
        return bool(np.all(z >= self.lower - tol) and np.all(z <= self.upper + tol))

    def project(self, z):
        return np.clip(self._check(z), self.lower, self.upper)

    def separator(self, z):
        z = self._check(z)
        over = z - self.upper
        under = self.lower - z
        viol = np.maximum(over, under)
        if viol.size == 0 or viol.max() <= 0:
            return None
        i = int(np.argmax(viol))
        e = np.zeros(self.dim)
        e[i] = 1.0 if over[i] >= under[i] else -1.0
        return e

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def bounding_box(self):
        return self

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class ScaledSimplex(Solid):
    """``{y in R^dim : y >= 0, sum(y) <= L}``."""

    n: int
    L: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("simplex dimension must be >= 0")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"simplex radius must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def dim(self):
        return self.n

    def support(self, g):
        g = self._check(g)
        arg = np.zeros(self.n)
        if self.n == 0:
            return 0.0, arg
        i = int(np.argmax(g))
        if g[i] <= 0:
            return 0.0, arg
        arg[i] = self.L
        return float(self.L * g[i]), arg

    def contains(self, z, tol=0.0):
        z = self._check(z)
        return bool(np.all(z >= -tol) and z.sum() <= self.L + tol)

    def project(self, z):
        z = self._check(z)
        p = np.maximum(z, 0.0)
        if p.sum() <= self.L:
            return p
        # Euclidean projection onto {y >= 0, sum y = L} by sorting
        u = np.sort(z)[::-1]
        css = np.cumsum(u) - self.L
        k = np.arange(1, self.n + 1)
        rho = np.nonzero(u - css / k > 0)[0][-1]
        theta = css[rho] / (rho + 1)
        return np.maximum(z - theta, 0.0)

    def separator(self, z):
        z = self._check(z)
        e = np.zeros(self.n)
        neg = -z.min() if self.n else 0.0
        over = z.sum() - self.L
        if max(neg, over) <= 0:
            return None
        if over >= neg:
            e[:] = 1.0
        else:
            e[int(np.argmin(z))] = -1.0
        return e

    def center(self):
        return np.full(self.n, self.L / (self.n + 1))

    def diameter(self):
        return float(self.L * np.sqrt(2.0)) if self.n > 1 else float(self.L)

    def bounding_box(self):
        return Box(np.zeros(self.n), np.full(self.n, self.L))

    def to_dict(self):
        return {"kind": "simplex", "dim": self.n, "L": self.L}


@dataclass(frozen=True, eq=False)
class Product(Solid):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    def offsets(self):
        out = [0]
        for f in self.factors:
            out.append(out[-1] + f.dim)
        return out

    def split(self, z):
        z = self._check(z)
        off = self.offsets()
        return [z[off[i]:off[i + 1]] for i in range(len(self.factors))]

    def support(self, g):
        parts = [f.support(gi) for f, gi in zip(self.factors, self.split(g))]
        value = float(sum(p[0] for p in parts))
        arg = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0)
        return value, arg

    def contains(self, z, tol=0.0):
        return all(f.contains(zi, tol) for f, zi in zip(self.factors, self.split(z)))

    def project(self, z):
        parts = [f.project(zi) for f, zi in zip(self.factors, self.split(z))]
        return np.concatenate(parts) if parts else np.zeros(0)

    def separator(self, z):
        off = self.offsets()
        for f, zi, o in zip(self.factors, self.split(z), off):
            e = f.separator(zi)
            if e is not None:
                out = np.zeros(self.dim)
                out[o:o + f.dim] = e
                return out
        return None

    def center(self):
        return np.concatenate([f.center() for f in self.factors])

    def diameter(self):
        return float(np.sqrt(sum(f.diameter() ** 2 for f in self.factors)))

    def bounding_box(self):
        boxes = [f.bounding_box() for f in self.factors]
        return Box(np.concatenate([b.lower for b in boxes]),
                   np.concatenate([b.upper for b in boxes]))

    def to_dict(self):
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}


def solid_from_dict(d):
    kind = d.get("kind")
    if kind == "box":
        return Box(np.array(d["lower"], dtype=float), np.array(d["upper"], dtype=float))
    if kind == "simplex":
        return ScaledSimplex(int(d["dim"]), float(d["L"]))
    if kind == "product":
        return Product(tuple(solid_from_dict(f) for f in d["factors"]))
    raise ValueError(f"unknown solid kind {kind!r}")


def parse_solid_spec(text, dim=None):
    """Parse a compact solid description used on the command line.

    ``box:LO:HI`` is a cube of dimension ``dim``; ``simplex:L`` a scaled
    simplex of dimension ``dim``; ``;`` joins factors ``name@dim``, e.g.
    ``box:-10:10@3;box:0:50@2``.
    """
    if ";" in text or "@" in text:
        factors = []
        for part in text.split(";"):
            body, _, d = part.partition("@")
            factors.append(parse_solid_spec(body, int(d) if d else dim))
        return factors[0] if len(factors) == 1 else Product(tuple(factors))
    kind, *args = text.split(":")
    if dim is None:
        raise ValueError(f"solid spec {text!r} needs a dimension")
    if kind == "box" and len(args) == 2:
        lo, hi = float(args[0]), float(args[1])
        return Box(np.full(dim, lo), np.full(dim, hi))
    if kind == "simplex" and len(args) == 1:
        return ScaledSimplex(dim, float(args[0]))
    raise ValueError(f"bad solid spec {text!r}")
