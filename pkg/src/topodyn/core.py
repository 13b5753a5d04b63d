"""Finite metric systems, neighbourhoods, invariant cores and pseudo-orbits.

A :class:`FiniteMetricSystem` is the desk-scale stand-in for a compact
metric space with a homeomorphism: states are the integers ``0..n-1``, the
metric is a dense symmetric table and the map is a permutation.  Subsets of
states are plain ``frozenset`` objects.

The pseudo-orbit helpers at the bottom of the module are duck-typed: they
work for any system exposing ``apply``, ``iterate`` and ``distance``, which
includes :class:`topodyn.symbolic.SubshiftSystem`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Any, Callable, Iterable, Sequence

import numpy as np

DEFAULT_TOL = 2.0**-40


class MetricSystemError(ValueError):
    """Raised when a system violates its construction contract."""


class FiniteMetricSystem:
    """A bijection on a finite metric space.

    Parameters
    ----------
    dist:
        ``(n, n)`` array of distances, or a zero-argument callable producing
        it.  The callable form lets large symbolic truncations defer the
        quadratic table until an analysis actually needs it.
    perm:
        ``perm[x]`` is the image of state ``x``.
    labels:
        Optional human-readable names, one per state.
    meta:
        Free-form provenance (generator name and parameters, symbolic
        codes, declared expansive constant, model resolution, ...).
    """

    def __init__(
        self,
        dist: np.ndarray | Callable[[], np.ndarray],
        perm: Sequence[int],
        labels: Sequence[str] | None = None,
        *,
        name: str = "system",
        tol: float = DEFAULT_TOL,
        meta: dict[str, Any] | None = None,
        check: bool = True,
    ):
        perm_arr = np.asarray(perm, dtype=np.intp)
        n = len(perm_arr)
        if n == 0:
            raise MetricSystemError("a system needs at least one state")
        if sorted(perm_arr.tolist()) != list(range(n)):
            raise MetricSystemError("map is not a bijection on the states")
        perm_arr.setflags(write=False)
        self.perm = perm_arr
        inv = np.empty(n, dtype=np.intp)
        inv[perm_arr] = np.arange(n)
        inv.setflags(write=False)
        self.inv = inv
        self.n = n
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
        if len(self.labels) != n:
            raise MetricSystemError("labels must have one entry per state")
        self.name = name
        self.tol = float(tol)
        self.meta = dict(meta or {})
        self._check = check
        if callable(dist):
            self._dist_factory = dist
        else:
            self._dist_factory = None
            self.__dict__["dist"] = self._validated(np.asarray(dist, dtype=float))

    @cached_property
    def dist(self) -> np.ndarray:
        return self._validated(np.asarray(self._dist_factory(), dtype=float))

    def _validated(self, d: np.ndarray) -> np.ndarray:
        n, tol = self.n, self.tol
        if d.shape != (n, n):
            raise MetricSystemError(f"metric table has shape {d.shape}, expected {(n, n)}")
        if self._check:
            if np.any(d < -tol):
                raise MetricSystemError("negative distance in metric table")
            if np.any(np.abs(np.diag(d)) > tol):
                raise MetricSystemError("d(x, x) must be 0")
            if np.any(np.abs(d - d.T) > tol):
                raise MetricSystemError("metric table is not symmetric")
            for z in range(n):
                # d(x, y) <= d(x, z) + d(z, y) for all x, y at fixed z
                if np.any(d > d[:, z, None] + d[None, z, :] + tol):
                    raise MetricSystemError(f"triangle inequality fails through state {z}")
        d = d.copy()
        d.setflags(write=False)
        return d

    # -- map ---------------------------------------------------------------

    @property
    def states(self) -> range:
        return range(self.n)

    def apply(self, x: int) -> int:
        return int(self.perm[x])

    def iterate(self, x: int, k: int) -> int:
        step = self.perm if k >= 0 else self.inv
        for _ in range(abs(k)):
            x = int(step[x])
        return x

    def distance(self, x: int, y: int) -> float:
        return float(self.dist[x, y])

    def image(self, subset: Iterable[int], k: int = 1) -> frozenset[int]:
        arr = np.fromiter(subset, dtype=np.intp)
        step = self.perm if k >= 0 else self.inv
        for _ in range(abs(k)):
            arr = step[arr]
        return frozenset(arr.tolist())

    def is_invariant(self, subset: Iterable[int]) -> bool:
        s = frozenset(subset)
        return self.image(s) == s

    def orbit(self, x: int) -> list[int]:
        out = [x]
        y = self.apply(x)
        while y != x:
            out.append(y)
            y = self.apply(y)
        return out

    def period(self, x: int) -> int:
        return len(self.orbit(x))

    def orbit_matrix(self, length: int) -> np.ndarray:
        """Row ``i`` holds ``f^i`` applied to every state."""
        rows = np.empty((max(length, 1), self.n), dtype=np.intp)
        rows[0] = np.arange(self.n)
        for i in range(1, length):
            rows[i] = self.perm[rows[i - 1]]
        return rows[:length] if length > 0 else rows[:0]

    # -- metric summaries --------------------------------------------------

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max())

    @cached_property
    def min_positive_distance(self) -> float:
        d = self.dist
        pos = d[d > self.tol]
        return float(pos.min()) if pos.size else float("inf")

    def realized_distances(self) -> np.ndarray:
        return np.unique(self.dist[np.triu_indices(self.n, 1)])

    def restrict(self, subset: Iterable[int], *, name: str | None = None) -> tuple["FiniteMetricSystem", list[int]]:
        """Restriction to an invariant subset.

        Returns the subsystem and the list mapping new state ids back to
        the parent's ids (ascending).
        """
        members = sorted(frozenset(subset))
        if not members:
            raise MetricSystemError("cannot restrict to an empty subset")
        if not self.is_invariant(members):
            raise MetricSystemError("restriction requires an invariant subset")
        index = {s: i for i, s in enumerate(members)}
        perm = [index[self.apply(s)] for s in members]
        sub = self.dist[np.ix_(members, members)]
        meta = {k: v for k, v in self.meta.items() if k in ("expansive_constant", "metric", "discrete")}
        meta["parent"] = self.name
        if "codes" in self.meta:
            meta["codes"] = [self.meta["codes"][s] for s in members]
            if "origin" in self.meta:
                meta["origin"] = self.meta["origin"]
        return (
            FiniteMetricSystem(
                sub,
                perm,
                [self.labels[s] for s in members],
                name=name or f"{self.name}|restricted",
                tol=self.tol,
                meta=meta,
                check=False,
            ),
            members,
        )

    def state_of(self, label: str) -> int:
        return self.labels.index(label)

    def __repr__(self) -> str:
        return f"FiniteMetricSystem(name={self.name!r}, n={self.n})"


def _as_members(system: FiniteMetricSystem, S: Iterable[int]) -> np.ndarray:
    arr = np.fromiter(frozenset(S), dtype=np.intp)
    if arr.size and (arr.min() < 0 or arr.max() >= system.n):
        raise MetricSystemError("subset contains unknown states")
    return arr


def build_ball(system: FiniteMetricSystem, S: Iterable[int], r: float) -> frozenset[int]:
    """Closed ``r``-neighbourhood ``{y : d(y, S) <= r}``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    members = _as_members(system, S)
    if members.size == 0:
        raise ValueError("S must be nonempty")
    near = (system.dist[:, members] <= r + system.tol).any(axis=1)
    return frozenset(np.flatnonzero(near).tolist())


@dataclass(frozen=True)
class CoreResult:
    members: frozenset[int]
    stabilized: bool
    steps: int


def invariant_core(
    system: FiniteMetricSystem, S: Iterable[int], r: float, horizon: int | None = None
) -> CoreResult:
    """``⋂_{|i|<=horizon} f^i(B_r(S))`` with a stabilization flag.

    Uses ``D_{k+1} = D_k ∩ f(D_k) ∩ f^{-1}(D_k)``, which equals the
    ``k``-step intersection; once two consecutive sets agree the sequence is
    constant, so the result is the maximal invariant subset of the ball.
    """
    if horizon is None:
        horizon = system.n
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    inside = np.zeros(system.n, dtype=bool)
    inside[list(build_ball(system, S, r))] = True
    for step in range(horizon):
        # x survives iff x, f(x) and f^{-1}(x) all survived the previous round
        nxt = inside & inside[system.perm] & inside[system.inv]
        if np.array_equal(nxt, inside):
            return CoreResult(frozenset(np.flatnonzero(inside).tolist()), True, step)
        inside = nxt
    nxt = inside & inside[system.perm] & inside[system.inv]
    stable = bool(np.array_equal(nxt, inside))
    return CoreResult(frozenset(np.flatnonzero(inside).tolist()), stable, horizon)


def accumulation_set(system: FiniteMetricSystem, r: float) -> frozenset[int]:
    """States with another state within ``r`` (the resolution-``r`` echo of
    ``x ∈ closure(X \\ {x})``)."""
    if r <= 0:
        raise ValueError("resolution must be positive")
    d = system.dist.copy()
    np.fill_diagonal(d, np.inf)
    return frozenset(np.flatnonzero((d <= r + system.tol).any(axis=1)).tolist())


# -- pseudo-orbits -------------------------------------------------------------


@dataclass(frozen=True)
class PseudoOrbit:
    """A finitely presented bi-infinite sequence of points.

    ``entries[j]`` sits at index ``start + j``.  Outside the window the
    sequence continues in one of three ways: ``periodic=True`` repeats the
    whole window; otherwise ``left``/``right`` give a block repeated
    outward on that side, and ``None`` means the sequence continues as the
    genuine orbit of the boundary entry.
    """

    entries: tuple
    start: int = 0
    periodic: bool = False
    left: tuple | None = None
    right: tuple | None = None

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty pseudo-orbit")
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.left is not None:
            object.__setattr__(self, "left", tuple(self.left))
            if not self.left:
                raise ValueError("empty left block")
        if self.right is not None:
            object.__setattr__(self, "right", tuple(self.right))
            if not self.right:
                raise ValueError("empty right block")

    @property
    def end(self) -> int:
        return self.start + len(self.entries) - 1

    def at(self, system, i: int):
        j = i - self.start
        m = len(self.entries)
        if 0 <= j < m:
            return self.entries[j]
        if self.periodic:
            return self.entries[j % m]
        if j < 0:
            if self.left is None:
                return system.iterate(self.entries[0], j)
            q = len(self.left)
            return self.left[j % q]
        if self.right is None:
            return system.iterate(self.entries[-1], j - m + 1)
        p = len(self.right)
        return self.right[(j - m) % p]

    def check_window(self) -> range:
        """Indices over which sup-conditions must be verified.

        Periodic parts are unrolled twice so every step pattern, including
        the seams between blocks, is visited.
        """
        if self.periodic:
            return range(self.start, self.start + len(self.entries))
        lo = self.start - (2 * len(self.left) + 1 if self.left else 1)
        hi = self.end + (2 * len(self.right) + 1 if self.right else 1)
        return range(lo, hi + 1)


def _as_pseudo_orbit(seq) -> PseudoOrbit:
    if isinstance(seq, PseudoOrbit):
        return seq
    seq = tuple(seq)
    if not seq:
        raise ValueError("empty sequence")
    return PseudoOrbit(seq)


def pseudo_orbit_error(system, seq) -> float:
    """``sup_i d(f(x_i), x_{i+1})`` over the presented window.

    A plain list is treated as a finite chain (no wrap-around).
    """
    po = _as_pseudo_orbit(seq)
    if not isinstance(seq, PseudoOrbit):
        idx = range(po.start, po.end)
    elif po.periodic:
        idx = range(po.start, po.start + len(po.entries))
    else:
        w = po.check_window()
        idx = range(w.start, w.stop - 1)
    worst = 0.0
    for i in idx:
        worst = max(worst, float(system.distance(system.apply(po.at(system, i)), po.at(system, i + 1))))
    return worst


def is_pseudo_orbit(system, seq, delta: float) -> bool:
    return pseudo_orbit_error(system, seq) <= float(delta) + getattr(system, "tol", 0.0)


def shadowing_error(system, seq, x) -> float:
    """``sup_i d(x_i, f^i(x))`` over the presented window (periodic parts
    unrolled)."""
    po = _as_pseudo_orbit(seq)
    window = range(po.start, po.end + 1) if not isinstance(seq, PseudoOrbit) else po.check_window()
    if po.periodic:
        m = len(po.entries)
        period = system.period(x) if hasattr(system, "period") else 0
        if period:
            # both sides repeat: one common period is the whole story
            window = range(po.start, po.start + m * period // gcd(m, period))
        else:
            pad = 4 * m + 2 * getattr(x, "support_radius", 0)
            window = range(po.start - pad, po.start + pad + 1)
    worst = 0.0
    y = system.iterate(x, window.start)
    for i in window:
        worst = max(worst, float(system.distance(po.at(system, i), y)))
        y = system.apply(y)
    return worst


def is_shadowed_by(system, seq, x, eps: float) -> bool:
    return shadowing_error(system, seq, x) <= float(eps) + getattr(system, "tol", 0.0)
