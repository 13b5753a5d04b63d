"""Exact symbolic dynamics on subshifts of finite type.

Points are eventually periodic bi-infinite sequences (:class:`SymbolicPoint`)
kept in a canonical form, so equality is syntactic.  The metric is
``d(x, y) = 2^-k`` with ``k`` the least ``|i|`` where ``x_i != y_i``; all
distances are returned as :class:`fractions.Fraction`.

A :class:`SubshiftSystem` is presented by an allowed-word set of a fixed
length ``L``; internally it works on the 1-step graph of ``(L-1)``-blocks,
pruned to its bi-infinite core.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .core import FiniteMetricSystem, PseudoOrbit, is_pseudo_orbit, is_shadowed_by


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def primitive_root(word: tuple) -> tuple:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return word[:p]
    return word


def dyadic_exponent(r) -> int:
    """Least ``t >= 0`` with ``2^-t <= r``; for the shift metric ``d <= r``
    iff the points agree on ``|i| < t``."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    t = 0
    while Fraction(1, 2**t) > r:
        t += 1
    return t


def dyadic_floor(r) -> Fraction:
    return Fraction(1, 2 ** dyadic_exponent(r))


@dataclass(frozen=True, order=True)
class SymbolicPoint:
    """Eventually periodic sequence in canonical form.

    ``x_i = left[(i - offset) % len(left)]`` for ``i < offset``, then
    ``center`` occupies ``[offset, offset + len(center))`` and ``right``
    repeats from there on.  Periodic points have empty ``center``,
    ``left == right`` and ``offset == 0``.  Use :meth:`make` or
    :meth:`periodic`; the bare constructor does not normalize.
    """

    left: tuple
    center: tuple
    right: tuple
    offset: int = 0

    @staticmethod
    def _raw(left, center, right, offset, i):
        if i < offset:
            return left[(i - offset) % len(left)]
        j = i - offset
        if j < len(center):
            return center[j]
        return right[(j - len(center)) % len(right)]

    @classmethod
    def make(cls, left: Sequence[int], center: Sequence[int], right: Sequence[int], offset: int = 0) -> "SymbolicPoint":
        left, center, right = tuple(left), tuple(center), tuple(right)
        if not left or not right:
            raise ValueError("periodic tails must be nonempty")
        left, right = primitive_root(left), primitive_root(right)
        q, p = len(left), len(right)

        def f(i):
            return cls._raw(left, center, right, offset, i)

        r_start = offset + len(center)
        floor = offset - (p * q + p + q) - 1
        while f(r_start - 1) == f(r_start - 1 + p):
            r_start -= 1
            if r_start < floor:
                base = offset + len(center)
                word = tuple(right[(i - base) % p] for i in range(p))
                return cls(word, (), word, 0)
        l_end = offset
        while f(l_end) == f(l_end - q):
            l_end += 1
        start = min(l_end, r_start)
        return cls(
            tuple(f(i) for i in range(start - q, start)),
            tuple(f(i) for i in range(start, r_start)),
            tuple(f(i) for i in range(r_start, r_start + p)),
            start,
        )

    @classmethod
    def periodic(cls, word: Sequence[int]) -> "SymbolicPoint":
        """The point ``w^∞`` with ``x_0 = w[0]``."""
        return cls.make(word, (), word, 0)

    @classmethod
    def constant(cls, a: int) -> "SymbolicPoint":
        return cls((a,), (), (a,), 0)

    def at(self, i: int) -> int:
        return self._raw(self.left, self.center, self.right, self.offset, i)

    def window(self, a: int, b: int) -> tuple:
        """Symbols at indices ``a..b`` inclusive."""
        return tuple(self.at(i) for i in range(a, b + 1))

    def shift(self, k: int = 1) -> "SymbolicPoint":
        if k == 0:
            return self
        return SymbolicPoint.make(self.left, self.center, self.right, self.offset - k)

    @property
    def is_periodic(self) -> bool:
        return not self.center and self.left == self.right and self.offset == 0

    @property
    def period(self) -> int:
        return len(self.right) if self.is_periodic else 0

    @property
    def tail_start(self) -> int:
        return self.offset + len(self.center)

    @property
    def support_radius(self) -> int:
        return max(abs(self.offset), abs(self.tail_start)) + len(self.left) + len(self.right)

    @property
    def symbols(self) -> frozenset:
        return frozenset(self.left + self.center + self.right)

    def __str__(self) -> str:
        return format_point(self)


def format_point(x: SymbolicPoint) -> str:
    """``(left).center.(right)`` with the center starting at index 0, or an
    ``@k`` suffix when the center starts at ``k < 0``."""

    def w(t):
        return "".join(_sym(a) for a in t)

    if x.is_periodic:
        return f"({w(x.right)}).({w(x.right)})"
    if x.offset >= 0:
        body = x.window(0, x.tail_start - 1)
        left = tuple(x.at(i) for i in range(-len(x.left), 0))
        mid = f"{w(body)}." if body else ""
        return f"({w(left)}).{mid}({w(x.right)})"
    return f"({w(x.left)}).{w(x.center)}.({w(x.right)})@{x.offset}"


def _sym(a: int) -> str:
    return str(a) if a < 10 else f"[{a}]"


_TOKEN = re.compile(r"\[(\d+)\]|(\d)")


def _parse_word(text: str) -> tuple:
    text = text.strip()
    out, pos = [], 0
    for m in _TOKEN.finditer(text):
        if m.start() != pos:
            raise ValueError(f"bad symbol in {text!r}")
        out.append(int(m.group(1) or m.group(2)))
        pos = m.end()
    if pos != len(text):
        raise ValueError(f"bad symbol in {text!r}")
    return tuple(out)


_POINT = re.compile(r"^\s*\(([^)]*)\)\s*\.\s*(?:([^.(]*?)\s*\.\s*)?\(([^)]*)\)\s*(?:@\s*(-?\d+))?\s*$")


def parse_point(text: str) -> SymbolicPoint:
    """Inverse of :func:`format_point`; ``(u).(w)`` means an empty center."""
    m = _POINT.match(text)
    if not m:
        raise ValueError(f"cannot parse point {text!r}")
    left, center, right = (_parse_word(g or "") for g in m.group(1, 2, 3))
    offset = int(m.group(4)) if m.group(4) else 0
    if m.group(4) is None:
        # center starts at index 0 and the left word ends right before it
        return SymbolicPoint.make(left, center, right, 0)
    return SymbolicPoint.make(left, center, right, offset)


def shift_metric(x: SymbolicPoint, y: SymbolicPoint) -> Fraction:
    if x == y:
        return Fraction(0)
    bound = (
        max(x.support_radius, y.support_radius)
        + _lcm(len(x.right), len(y.right))
        + _lcm(len(x.left), len(y.left))
        + 2
    )
    for k in range(bound + 1):
        if x.at(k) != y.at(k) or x.at(-k) != y.at(-k):
            return Fraction(1, 2**k)
    raise AssertionError("distinct canonical points agree on their whole support")


# -- subshifts -----------------------------------------------------------------


class EmptySubshiftError(ValueError):
    pass


class SubshiftSystem:
    """Shift map on the SFT of all sequences whose ``L``-windows lie in
    ``words``.

    The presentation is pruned on construction: blocks without an allowed
    successor or predecessor are removed until a fixpoint.
    """

    def __init__(self, alphabet: int, words: Iterable[Sequence[int]], *, name: str = "sft"):
        words = {tuple(w) for w in words}
        lengths = {len(w) for w in words}
        if len(lengths) > 1:
            raise ValueError("allowed words must share one length")
        L = lengths.pop() if lengths else 2
        if L == 1:
            syms = sorted(w[0] for w in words)
            words = {(a, b) for a in syms for b in syms}
            L = 2
        if any(not 0 <= a < alphabet for w in words for a in w):
            raise ValueError("symbol outside the alphabet")
        self.alphabet = int(alphabet)
        self.L = L
        self.name = name
        self.allowed = frozenset(prune_words(words))
        self.blocks = sorted({w[:-1] for w in self.allowed} | {w[1:] for w in self.allowed})
        self.block_index = {b: i for i, b in enumerate(self.blocks)}
        k = len(self.blocks)
        adj = np.zeros((k, k), dtype=np.int64)
        for w in self.allowed:
            adj[self.block_index[w[:-1]], self.block_index[w[1:]]] = 1
        adj.setflags(write=False)
        self.matrix = adj
        self._succ = [sorted(np.flatnonzero(adj[i]).tolist()) for i in range(k)]
        self._pred = [sorted(np.flatnonzero(adj[:, i]).tolist()) for i in range(k)]
        self.tol = 0.0

    # -- constructors ----------------------------------------------------------

    @classmethod
    def from_transitions(cls, alphabet: int, pairs: Iterable[tuple[int, int]], *, name: str = "sft") -> "SubshiftSystem":
        return cls(alphabet, pairs, name=name)

    @classmethod
    def from_matrix(cls, matrix, *, name: str = "sft") -> "SubshiftSystem":
        a = np.asarray(matrix)
        pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(a))]
        return cls(a.shape[0], pairs, name=name)

    @classmethod
    def from_words(cls, alphabet: int, words: Iterable[Sequence[int]], *, name: str = "sft") -> "SubshiftSystem":
        return cls(alphabet, words, name=name)

    # -- presentation ------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.allowed

    @property
    def used_symbols(self) -> frozenset:
        return frozenset(a for w in self.allowed for a in w)

    def successors(self, block: tuple) -> list[tuple]:
        return [self.blocks[j] for j in self._succ[self.block_index[block]]]

    def predecessors(self, block: tuple) -> list[tuple]:
        return [self.blocks[j] for j in self._pred[self.block_index[block]]]

    @lru_cache(maxsize=64)
    def words(self, n: int) -> frozenset:
        """All allowed words of length ``n`` (words of some point)."""
        if n <= 0:
            return frozenset({()})
        if n <= self.L - 1:
            return frozenset(b[:n] for b in self.blocks)
        out = set()
        stack = [(b, b) for b in self.blocks]
        while stack:
            word, last = stack.pop()
            if len(word) == n:
                out.add(word)
                continue
            for nb in self.successors(last):
                stack.append((word + nb[-1:], nb))
        return frozenset(out)

    def count_words(self, n: int) -> int:
        if n <= self.L - 1:
            return len(self.words(n))
        k = len(self.blocks)
        vec = [1] * k
        rows = [self._succ[i] for i in range(k)]
        for _ in range(n - self.L + 1):
            vec = [sum(vec[j] for j in rows[i]) for i in range(k)]
        return sum(vec)

    def is_allowed_word(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        if len(word) < self.L:
            return word in self.words(len(word))
        return all(word[i : i + self.L] in self.allowed for i in range(len(word) - self.L + 1))

    # -- dynamics ------------------------------------------------------------------

    def contains(self, x: SymbolicPoint) -> bool:
        L = self.L
        if x.is_periodic:
            lo, hi = 0, len(x.right) + L
        else:
            lo = x.offset - 2 * len(x.left) - L
            hi = x.tail_start + 2 * len(x.right) + L
        return all(x.window(i, i + L - 1) in self.allowed for i in range(lo, hi + 1))

    def apply(self, x: SymbolicPoint) -> SymbolicPoint:
        return x.shift(1)

    def iterate(self, x: SymbolicPoint, k: int) -> SymbolicPoint:
        return x.shift(k)

    def distance(self, x: SymbolicPoint, y: SymbolicPoint) -> Fraction:
        return shift_metric(x, y)

    def period(self, x: SymbolicPoint) -> int:
        return x.period

    def periodic_points(self, max_period: int) -> list[SymbolicPoint]:
        """Every point of least period at most ``max_period``, sorted by
        ``(period, word)``."""
        found = set()
        for k in range(1, max_period + 1):
            for start in range(len(self.blocks)):
                self._closed_walks(start, k, found)
        return sorted(found, key=lambda x: (x.period, x.right))

    def _closed_walks(self, start: int, k: int, found: set) -> None:
        stack = [(start, (self.blocks[start][0],))]
        while stack:
            v, word = stack.pop()
            for nb in self._succ[v]:
                if len(word) == k:
                    if nb == start:
                        found.add(SymbolicPoint.periodic(word))
                    continue
                stack.append((nb, word + (self.blocks[nb][0],)))

    def _walk(self, block: tuple, forward: bool) -> tuple[list, list]:
        """Greedy walk from ``block`` until a block repeats.

        Returns the transient symbols and the cycle symbols, in walking
        order (last symbol of each block forward, first symbol backward).
        """
        step = self.successors if forward else self.predecessors
        seen = {block: 0}
        path = [block]
        while True:
            nxt = step(path[-1])[0]
            if nxt in seen:
                i = seen[nxt]
                syms = [b[-1] if forward else b[0] for b in path[1:]] + [nxt[-1] if forward else nxt[0]]
                return syms[:i], syms[i:]
            seen[nxt] = len(path)
            path.append(nxt)

    def point_containing(self, word: Sequence[int], at: int = 0) -> SymbolicPoint:
        """Some point of the subshift carrying ``word`` on ``[at, at+len)``."""
        word = tuple(word)
        if len(word) < self.L - 1:
            word = next(b for b in self.blocks if b[: len(word)] == word)
        if not self.is_allowed_word(word):
            raise ValueError(f"word {word} is not allowed")
        b = self.L - 1
        rtrans, rcycle = self._walk(word[-b:], True)
        ltrans, lcycle = self._walk(word[:b], False)
        center = tuple(reversed(ltrans)) + word + tuple(rtrans)
        return SymbolicPoint.make(tuple(reversed(lcycle)), center, tuple(rcycle), at - len(ltrans))

    def __repr__(self) -> str:
        return f"SubshiftSystem({self.name!r}, alphabet={self.alphabet}, L={self.L}, blocks={len(self.blocks)})"


def prune_words(words: set[tuple]) -> set[tuple]:
    """Remove words whose prefix block has no predecessor or whose suffix
    block has no successor, to a fixpoint."""
    words = set(words)
    while True:
        heads = {w[:-1] for w in words}
        tails = {w[1:] for w in words}
        keep = {w for w in words if w[:-1] in tails and w[1:] in heads}
        if keep == words:
            return words
        words = keep


def full_shift(m: int = 2) -> SubshiftSystem:
    return SubshiftSystem(m, itertools.product(range(m), repeat=2), name=f"full-{m}-shift")


def golden_mean() -> SubshiftSystem:
    return SubshiftSystem(2, [(0, 0), (0, 1), (1, 0)], name="golden-mean")


def one_point(symbol: int = 0, alphabet: int = 1) -> SubshiftSystem:
    return SubshiftSystem(alphabet, [(symbol, symbol)], name="one-point")


class OrbitClosure:
    """Language of the orbit closure of one eventually periodic point."""

    def __init__(self, point: SymbolicPoint, alphabet: int = 2):
        self.point = point
        self.alphabet = alphabet
        self.name = f"orbit-closure {format_point(point)}"

    @lru_cache(maxsize=64)
    def words(self, n: int) -> frozenset:
        x = self.point
        lo = x.offset - 2 * len(x.left) - n
        hi = x.tail_start + 2 * len(x.right) + n
        return frozenset(x.window(i, i + n - 1) for i in range(lo, hi + 1))

    def count_words(self, n: int) -> int:
        return len(self.words(n))


# -- expansiveness -----------------------------------------------------------------


@dataclass(frozen=True)
class ExpansivityCertificate:
    e: Fraction
    window: int
    pairs_checked: int
    note: str


def expansivity_constant(S: SubshiftSystem) -> ExpansivityCertificate:
    """Certify ``e = 1/2``.

    ``sup_i d(σ^i x, σ^i y) <= 1/2`` forces ``x_i = y_i`` for every ``i``;
    the check enumerates symbol pairs at window 0 and confirms every pair
    of distinct symbols sits at distance 1 > 1/2.
    """
    syms = sorted(S.used_symbols)
    pairs = 0
    for a, b in itertools.combinations(syms, 2):
        x, y = SymbolicPoint.constant(a), SymbolicPoint.constant(b)
        assert shift_metric(x, y) == 1
        pairs += 1
    note = "vacuous (one symbol)" if len(syms) <= 1 else "distinct symbols at index 0 give distance 1"
    return ExpansivityCertificate(Fraction(1, 2), 0, pairs, note)


def uniform_expansivity_horizon(S: SubshiftSystem, e, eps) -> int:
    """Least ``n`` such that closeness ``<= e`` on ``|i| <= n`` forces
    ``d(x, y) <= eps``, checked over allowed word pairs."""
    e, eps = Fraction(e), Fraction(eps)
    if not 0 < e < 1:
        raise ValueError("expansive constant for the shift metric must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    j = dyadic_exponent(e)
    if eps >= 1:
        return 0
    T = dyadic_exponent(eps) - 1
    if T < 0:
        return 0
    words = S.words(2 * T + 1)
    n = 0
    while True:
        inner = n + j - 1
        if inner >= T:
            return n
        groups: dict[tuple, int] = {}
        clash = False
        for w in words:
            key = w[T - inner : T + inner + 1]
            groups[key] = groups.get(key, 0) + 1
            if groups[key] > 1:
                clash = True
                break
        if not clash:
            return n
        n += 1


# -- shadowing -------------------------------------------------------------------------


class ShadowingError(ValueError):
    pass


def _splice(left_src: SymbolicPoint, center: Sequence[int], cstart: int, right_src: SymbolicPoint) -> SymbolicPoint:
    """Sequence equal to ``left_src`` before ``cstart``, ``center`` on its
    window and ``right_src`` afterwards."""
    center = tuple(center)
    cend = cstart + len(center)
    a = min(cstart, left_src.offset)
    b = max(cend, right_src.tail_start)

    def g(i):
        if i < cstart:
            return left_src.at(i)
        if i < cend:
            return center[i - cstart]
        return right_src.at(i)

    q, p = len(left_src.left), len(right_src.right)
    return SymbolicPoint.make(
        tuple(left_src.at(i) for i in range(a - q, a)),
        tuple(g(i) for i in range(a, b)),
        tuple(right_src.at(i) for i in range(b, b + p)),
        a,
    )


def constructive_shadow(S: SubshiftSystem, po: PseudoOrbit, delta) -> tuple[SymbolicPoint, Fraction]:
    """Shadow a δ-pseudo-orbit by its diagonal ``y_i = (x_i)_0``.

    With ``δ <= 2^-k`` consecutive terms agree on ``|j| < k``, so ``σ^i y``
    agrees with ``x_i`` there and ``ε = 2^-k`` (the dyadic floor of δ).
    Needs ``k >= L`` so every ``L``-window of ``y`` is a window of some
    ``x_i``; for 1-step presentations that is ``δ <= 1/4``.
    """
    delta = Fraction(delta)
    if not is_pseudo_orbit(S, po, delta):
        raise ShadowingError("sequence is not a δ-pseudo-orbit")
    for x in _entries(po):
        if not S.contains(x):
            raise ShadowingError(f"pseudo-orbit entry {format_point(x)} is not in the subshift")
    if delta == 0:
        y = po.entries[0].shift(-po.start)
        eps = Fraction(0)
    else:
        need = max(2, S.L)
        if delta > Fraction(1, 2**need):
            raise ShadowingError(f"δ = {delta} too large to determine symbols (need δ <= 2^-{need})")
        eps = dyadic_floor(delta)
        diag = [x.at(0) for x in po.entries]
        if po.periodic:
            y = SymbolicPoint.make(diag, (), diag, po.start)
        else:
            if po.left is None:
                lsrc = po.entries[0].shift(-po.start)
            else:
                lw = [x.at(0) for x in po.left]
                lsrc = SymbolicPoint.make(lw, (), lw, po.start)
            if po.right is None:
                rsrc = po.entries[-1].shift(-po.end)
            else:
                rw = [x.at(0) for x in po.right]
                rsrc = SymbolicPoint.make(rw, (), rw, po.end + 1)
            y = _splice(lsrc, diag, po.start, rsrc)
    if not S.contains(y):
        raise ShadowingError("diagonal sequence violates the transition relation")
    if not is_shadowed_by(S, po, y, eps):
        raise AssertionError("diagonal point failed to shadow its pseudo-orbit")
    return y, eps


def _entries(po: PseudoOrbit):
    yield from po.entries
    if po.left:
        yield from po.left
    if po.right:
        yield from po.right


# -- stable sets and asymptotic pairs ------------------------------------------------------


@dataclass(frozen=True)
class StableCylinder:
    """``{y : y_i = x_i for all i >= start}``; ``word`` lists ``x`` on
    ``[start, start + horizon]``."""

    point: SymbolicPoint
    start: int
    word: tuple

    def contains(self, y: SymbolicPoint) -> bool:
        x = self.point
        hi = max(x.tail_start, y.tail_start) + _lcm(len(x.right), len(y.right)) + 1
        return all(x.at(i) == y.at(i) for i in range(self.start, hi + 1))


def local_stable_set(S: SubshiftSystem, x: SymbolicPoint, r, horizon: int = 8) -> StableCylinder:
    r = Fraction(r)
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    start = -(dyadic_exponent(r) - 1)
    return StableCylinder(x, start, x.window(start, start + horizon))


def asymptotic_pair(S: SubshiftSystem, x: SymbolicPoint) -> SymbolicPoint | None:
    """A point ``y != x`` with ``y_i = x_i`` for all large ``i``, or None.

    Looks for the right-most branching: an index ``k`` where the block of
    ``x`` starting at ``k`` has a predecessor other than the one ``x`` uses.
    """
    b = S.L - 1
    if x.is_periodic:
        lo, hi = -len(x.right) - b, len(x.right) + b
    else:
        lo = x.offset - len(x.left) - b
        hi = x.tail_start + len(x.right) + b
    order = sorted(range(lo, hi + 1), key=lambda k: (abs(k), k < 0))
    for k in order:
        block = x.window(k, k + b - 1)
        mine = x.window(k - 1, k + b - 2)
        for pred in S.predecessors(block):
            if pred == mine:
                continue
            trans, cycle = S._walk(pred, False)
            center = tuple(reversed(trans)) + (pred[0],)
            lsrc = SymbolicPoint.make(tuple(reversed(cycle)), center, center[-1:], k - len(center))
            y = _splice(lsrc, (), k, x)
            assert y != x and S.contains(y)
            return y
    return None


# -- local maximality ----------------------------------------------------------------------


@dataclass(frozen=True)
class LocalMaximality:
    locally_maximal: bool
    r: Fraction | None
    checked_window: int
    tried: tuple


def _check_invariant(G, upto: int, start: int = 1) -> None:
    for n in range(start, upto + 1):
        shorter, longer = G.words(n), G.words(n + 1)
        if {w[1:] for w in longer} != shorter or {w[:-1] for w in longer} != shorter:
            raise ValueError(f"G is not shift-invariant (language not extendable at length {n})")


def neighbourhood_core(ambient: SubshiftSystem, G, r) -> SubshiftSystem:
    """``⋂_i σ^i(B_r(G))`` as an SFT.

    ``d(y, G) <= 2^-t`` iff the ``(2t-1)``-window of ``y`` at 0 is a word
    of ``G``, so the maximal invariant set of the ball is the SFT of
    ambient points all of whose ``(2t-1)``-windows are ``G``-words.
    """
    t = dyadic_exponent(r)
    if t == 0:
        return ambient
    span = 2 * t - 1
    Lp = max(span, ambient.L)
    gw = G.words(span)
    allowed = [
        w
        for w in ambient.words(Lp)
        if all(w[i : i + span] in gw for i in range(Lp - span + 1))
    ]
    return SubshiftSystem(ambient.alphabet, allowed, name=f"core_{r}({getattr(G, 'name', 'G')})")


def is_locally_maximal(ambient: SubshiftSystem, G, r=None, horizon: int = 6) -> LocalMaximality:
    """Whether ``G = ⋂_i σ^i(B_r(G))`` for ``r`` (or some ``r`` in the
    schedule ``2^-1 .. 2^-horizon`` when ``r`` is None).

    ``G`` is any language object with ``words(n)``.  The core always
    contains ``G``, so equality is decided by comparing word counts up to
    the checked window length.
    """
    schedule = [Fraction(r)] if r is not None else [Fraction(1, 2**t) for t in range(1, horizon + 1)]
    tried = []
    checked = 0
    for s in schedule:
        core = neighbourhood_core(ambient, G, s)
        window = max(2 * dyadic_exponent(s) + 1, core.L + 1)
        # invariance is only needed as far as the windows actually compared
        _check_invariant(G, max(window, ambient.L + 1), checked + 1)
        checked = max(checked, window, ambient.L + 1)
        equal = all(core.count_words(n) == len(G.words(n)) for n in range(1, window + 1))
        tried.append((s, equal))
        if equal:
            return LocalMaximality(True, s, window, tuple(tried))
    return LocalMaximality(False, None, checked, tuple(tried))


# -- finite truncations ----------------------------------------------------------------------


def periodic_distance_table(points: Sequence[SymbolicPoint]) -> np.ndarray:
    """Shift-metric table for periodic points (vectorized)."""
    P = max(x.period for x in points)
    idx = [0]
    for k in range(1, P + 1):
        idx += [k, -k]
    seq = np.array([[x.right[i % x.period] for i in idx] for x in points], dtype=np.int16)
    n = len(points)
    d = np.zeros((n, n))
    open_ = np.ones((n, n), dtype=bool)
    np.fill_diagonal(open_, False)
    for col, i in enumerate(idx):
        c = seq[:, col]
        diff = c[:, None] != c[None, :]
        hit = open_ & diff
        d[hit] = 2.0 ** -abs(i)
        open_ &= ~diff
    assert not open_.any(), "distinct periodic points agreed on a Fine–Wilf window"
    return d


def truncation(S: SubshiftSystem, max_period: int, *, name: str | None = None) -> FiniteMetricSystem:
    """Finite system on the periodic points of least period ``<= max_period``.

    The metric table is built lazily; ``meta['codes']`` keeps the points so
    word-based analyses never need it.
    """
    pts = S.periodic_points(max_period)
    if not pts:
        raise EmptySubshiftError("subshift has no periodic points in range")
    index = {x: i for i, x in enumerate(pts)}
    perm = [index[x.shift(1)] for x in pts]
    return FiniteMetricSystem(
        lambda: periodic_distance_table(pts),
        perm,
        [format_point(x) for x in pts],
        name=name or f"{S.name}|P<={max_period}",
        meta={
            "codes": pts,
            "origin": S,
            "metric": "shift",
            "expansive_constant": 0.5,
            "generator": ("truncation", {"subshift": S.name, "max_period": max_period}),
        },
        check=False,
    )


# -- SFT text format -------------------------------------------------------------------------


def parse_sft(text: str, *, name: str = "sft") -> SubshiftSystem:
    """Parse ``alphabet m`` followed by ``a -> b`` lines or one
    ``words L: w1 w2 ...`` line.  ``#`` starts a comment."""
    alphabet = None
    pairs: list[tuple] = []
    words: list[tuple] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("alphabet"):
                alphabet = int(line.split()[1])
            elif line.startswith("words"):
                head, _, body = line.partition(":")
                L = int(head.split()[1])
                for tok in body.split():
                    w = _parse_word(tok)
                    if len(w) != L:
                        raise ValueError(f"word {tok} does not have length {L}")
                    words.append(w)
            elif "->" in line:
                a, b = line.split("->")
                pairs.append((int(a), int(b)))
            else:
                raise ValueError(f"unrecognized record {line!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if alphabet is None:
        raise ValueError("missing 'alphabet' record")
    if pairs and words:
        raise ValueError("use either transitions or a word list, not both")
    return SubshiftSystem(alphabet, words or pairs, name=name)


def format_sft(S: SubshiftSystem) -> str:
    lines = [f"alphabet {S.alphabet}"]
    if S.L == 2:
        lines += [f"{a} -> {b}" for a, b in sorted(S.allowed)]
    else:
        lines.append(f"words {S.L}: " + " ".join("".join(_sym(a) for a in w) for w in sorted(S.allowed)))
    return "\n".join(lines) + "\n"
