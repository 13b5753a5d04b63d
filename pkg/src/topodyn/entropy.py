"""Topological entropy: exact values for SFTs and separated-set estimates
for finite systems."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import log

import numpy as np

from .chain import strongly_connected_components
from .core import FiniteMetricSystem
from .symbolic import EmptySubshiftError, SubshiftSystem

EXACT_CAP = 128


class CapExceededError(ValueError):
    pass


# -- separation graphs and cliques ------------------------------------------------------------


def separation_matrix(system: FiniteMetricSystem, K, n: int, r: float) -> tuple[list[int], np.ndarray]:
    """Members of ``K`` (sorted) and the boolean matrix of pairs that are
    ``(n, r)``-separated."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if r <= 0:
        raise ValueError("r must be positive")
    members = sorted(K)
    idx = np.asarray(members, dtype=np.intp)
    sep = np.zeros((len(members), len(members)), dtype=bool)
    cur = idx
    for _ in range(n):
        sep |= system.dist[np.ix_(cur, cur)] > r + system.tol
        cur = system.perm[cur]
    return members, sep


def max_clique(adj: np.ndarray) -> list[int]:
    """Exact maximum clique by branch and bound with a greedy colouring
    bound.  ``adj`` is a symmetric boolean matrix with a false diagonal."""
    n = len(adj)
    nbr = [0] * n
    for i in range(n):
        for j in np.flatnonzero(adj[i]):
            nbr[i] |= 1 << int(j)
    best: list[int] = []

    def colour_order(cand: int) -> list[tuple[int, int]]:
        # greedy sequential colouring; returns (vertex, colour) by colour
        out = []
        colour = 0
        rest = cand
        while rest:
            colour += 1
            avail = rest
            while avail:
                v = (avail & -avail).bit_length() - 1
                avail &= ~(1 << v)
                avail &= ~nbr[v]
                rest &= ~(1 << v)
                out.append((v, colour))
        return out

    def expand(clique: list[int], cand: int) -> None:
        nonlocal best
        for v, colour in reversed(colour_order(cand)):
            if len(clique) + colour <= len(best):
                return
            new = cand & nbr[v]
            clique.append(v)
            if new:
                expand(clique, new)
            elif len(clique) > len(best):
                best = clique.copy()
            clique.pop()
            cand &= ~(1 << v)

    expand([], (1 << n) - 1)
    return sorted(best)


def greedy_clique(adj: np.ndarray) -> list[int]:
    chosen: list[int] = []
    for v in range(len(adj)):
        if all(adj[v, u] for u in chosen):
            chosen.append(v)
    return chosen


def separated_set(system: FiniteMetricSystem, K, n: int, r: float, mode: str = "exact", cap: int = EXACT_CAP) -> tuple[frozenset, int]:
    """A largest (exact) or inclusion-maximal (greedy) ``(n, r)``-separated
    subset of ``K`` and its size."""
    K = frozenset(K) if K is not None else frozenset(system.states)
    if mode not in ("exact", "greedy"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and len(K) > cap:
        raise CapExceededError(f"exact mode limited to {cap} states, got {len(K)}")
    members, sep = separation_matrix(system, K, n, r)
    pick = max_clique(sep) if mode == "exact" else greedy_clique(sep)
    chosen = frozenset(members[i] for i in pick)
    return chosen, len(chosen)


def word_radius(r: float) -> int | None:
    """Largest ``m`` with ``2^-m > r`` (None when ``r >= 1``)."""
    if r >= 1:
        return None
    m = 0
    while 2.0 ** -(m + 1) > r:
        m += 1
    return m


def word_count_s_n(codes, K, n: int, r: float) -> int:
    """``s_n`` for shift-metric systems: ``(n, r)``-separated iff the words
    on ``[-m, n-1+m]`` differ, ``m`` from :func:`word_radius`, so a maximal
    separated set takes one point per word."""
    m = word_radius(r)
    if m is None:
        return 1
    return len({codes[x].window(-m, n - 1 + m) for x in K})


# -- estimates ------------------------------------------------------------------------------------


@dataclass
class EntropyReport:
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    estimate: float = 0.0
    method: str = ""
    degenerate: bool = False
    fit_window: tuple = ()
    notes: list = field(default_factory=list)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "n", "s_n", "mode"])
        for r, n, s, mode in self.rows:
            w.writerow([repr(float(r)), n, s, mode])
        return buf.getvalue()


def fit_slope(ns, values) -> tuple[float, float]:
    """Least-squares slope of ``log values`` against ``ns`` and the RMS
    residual."""
    x = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    if len(x) < 2:
        return 0.0, 0.0
    slope, icpt = np.polyfit(x, y, 1)
    res = y - (slope * x + icpt)
    return float(slope), float(np.sqrt(np.mean(res**2)))


def r_schedule(system: FiniteMetricSystem) -> list[float]:
    """Dyadic radii, one just below each realized distance scale."""
    if system.meta.get("metric") == "shift":
        return [0.5, 0.25]
    real = system.realized_distances()
    real = real[real > system.tol]
    if not real.size:
        return [1.0]
    out = set()
    k = int(np.floor(np.log2(real.max())))
    while 2.0**k >= real.min() / 2:
        r = 2.0**k
        if (real > r).any():
            out.add(r)
        k -= 1
    return sorted(out, reverse=True)


def entropy_estimate(system: FiniteMetricSystem, K=None, r=None, n_max: int = 12, *, mode: str = "auto", cap: int = EXACT_CAP) -> EntropyReport:
    """Slope of ``log s_n`` over ``n ∈ [n_max/2, n_max]`` per radius; the
    estimate is the largest slope.

    Shift-metric truncations count words; other systems use the exact
    clique search under ``cap`` states and the greedy bound beyond.  When
    the system declares coded blocks (state sets conjugate to a subshift),
    blocks inside ``K`` contribute their exact word-count slope as an extra
    row.
    """
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    K = frozenset(K) if K is not None else frozenset(system.states)
    if not K:
        raise ValueError("K must be nonempty")
    radii = [float(r)] if r is not None and np.isscalar(r) else list(r) if r is not None else r_schedule(system)
    codes = system.meta.get("codes") if system.meta.get("metric") == "shift" else None
    if mode == "auto":
        mode = "word-count" if codes is not None else ("separated-exact" if len(K) <= cap else "separated-greedy")
    lo = n_max // 2
    ns = list(range(lo, n_max + 1))
    rep = EntropyReport(method=mode, fit_window=(lo, n_max))
    for rad in radii:
        values = []
        for n in range(1, n_max + 1):
            if mode == "word-count":
                s = word_count_s_n(codes, K, n, rad)
            else:
                s = separated_set(system, K, n, rad, "exact" if mode == "separated-exact" else "greedy", cap)[1]
            values.append(max([s] + values[-1:]))
            rep.rows.append((rad, n, s, mode))
        slope, resid = fit_slope(ns, values[lo - 1 :])
        rep.slopes[rad] = max(slope, 0.0)
        rep.residuals[rad] = resid
    rep.estimate = max(rep.slopes.values(), default=0.0)
    rep.degenerate = all(s == 1 for _, _, s, _ in rep.rows)
    if rep.degenerate:
        rep.estimate = 0.0
    for block in system.meta.get("blocks", ()):
        states, sub = block["states"], block["subshift"]
        if frozenset(states) <= K:
            h = word_count_entropy(sub, max(n_max, 8))
            rep.rows.append((0.0, n_max, sub.count_words(n_max), f"symbolic-lift:{block['name']}"))
            rep.notes.append(f"{block['name']}: coded by {sub.name}, word-count slope {h:.6f}")
            if h > rep.estimate:
                rep.estimate = h
                rep.method = f"{mode}+symbolic-lift"
                rep.degenerate = False
    if mode != "word-count" or system.meta.get("blocks"):
        rep.notes.append("finite-model estimate; not an exact value")
    return rep


# -- exact SFT entropy --------------------------------------------------------------------------


def perron_root(matrix: np.ndarray, rtol: float = 1e-12, max_iter: int = 1_000_000) -> float:
    """Spectral radius of a non-negative irreducible matrix.

    Iterates on ``A + I`` (primitive whenever ``A`` is irreducible) and
    stops when the Collatz–Wielandt bounds meet to ``rtol``.
    """
    b = np.asarray(matrix, dtype=float) + np.eye(len(matrix))
    v = np.ones(len(b))
    for _ in range(max_iter):
        w = b @ v
        ratio = w / v
        lo, hi = ratio.min(), ratio.max()
        if hi - lo <= rtol * hi:
            return float((lo + hi) / 2 - 1.0)
        v = w / w.max()
    raise ArithmeticError("power iteration did not converge")


def spectral_radius(S: SubshiftSystem) -> float:
    if S.is_empty:
        raise EmptySubshiftError("empty subshift")
    a = S.matrix
    succ = [set(np.flatnonzero(row).tolist()) for row in a]
    best = 0.0
    for comp in strongly_connected_components(succ):
        if len(comp) == 1 and not a[comp[0], comp[0]]:
            continue
        best = max(best, perron_root(a[np.ix_(comp, comp)]))
    return best


def sft_entropy(S: SubshiftSystem) -> float:
    """``log`` of the spectral radius of the block transition matrix."""
    rho = spectral_radius(S)
    return log(rho) if rho > 1.0 else 0.0


def word_count_entropy(S, n_max: int = 20) -> float:
    """Least-squares slope of ``log #words(n)`` over ``[n_max/2, n_max]``."""
    if getattr(S, "is_empty", False):
        raise EmptySubshiftError("empty subshift")
    lo = max(n_max // 2, 1)
    ns = list(range(lo, n_max + 1))
    counts = [S.count_words(n) for n in ns]
    # logs of exact integers keep precision for huge counts
    x = np.asarray(ns, dtype=float)
    y = np.array([log(c) for c in counts])
    if len(x) < 2:
        return 0.0
    return max(float(np.polyfit(x, y, 1)[0]), 0.0)
