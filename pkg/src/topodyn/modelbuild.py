"""SFT models of totally disconnected invariant sets and the three-way
zero-entropy equivalence check.

For a subshift ``Λ`` the cells are central cylinders of radius ``j0``;
itineraries of ``Λ`` read through those cells give a word set ``W`` of
window length ``2n+1``, the SFT ``Ξ`` of sequences with every window in
``W``, and an embedded copy ``Γ_c`` of ``Ξ`` in the ambient shift.  The map
``h: Ξ -> Γ_c`` decodes the centre symbol of each cell; it is checked
against the diagonal shadowing point of the cell pseudo-orbit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chain import chain_components, strongly_connected_components
from .chaos import sensitive_points
from .core import FiniteMetricSystem, PseudoOrbit, build_ball, invariant_core
from .entropy import entropy_estimate, sft_entropy
from .symbolic import (
    SubshiftSystem,
    SymbolicPoint,
    constructive_shadow,
    dyadic_exponent,
    expansivity_constant,
    format_point,
    is_locally_maximal,
    neighbourhood_core,
    truncation,
)


class ModelBuildError(ValueError):
    pass


# -- partitions ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Cells covering ``Λ``: cylinder words of radius ``radius`` (symbolic)
    or state sets (finite)."""

    kind: str
    cells: tuple
    radius: int
    diameter_bound: float

    @property
    def size(self) -> int:
        return len(self.cells)

    def cell_of_word(self, window: tuple) -> int:
        return self._index[window]

    @property
    def _index(self):
        return {w: k for k, w in enumerate(self.cells)}


def cylinder_radius(e) -> int:
    """Least ``j`` with ``2^-(j+1) < e``: radius-``j`` central cylinders
    then have diameter below ``e``."""
    e = Fraction(e)
    if e <= 0:
        raise ModelBuildError("e must be positive")
    j = 0
    while Fraction(1, 2 ** (j + 1)) >= e:
        j += 1
    return j


def clopen_partition(ambient, Lam, e) -> Partition:
    if isinstance(ambient, SubshiftSystem):
        j = cylinder_radius(e)
        cells = tuple(sorted(Lam.words(2 * j + 1)))
        return Partition("cylinder", cells, j, float(Fraction(1, 2 ** (j + 1))))
    if float(e) <= ambient.tol:
        raise ModelBuildError("e below the metric tolerance")
    cells = tuple(frozenset([x]) for x in sorted(Lam))
    return Partition("states", cells, 0, 0.0)


# -- symbolic models ---------------------------------------------------------------------------


@dataclass
class SftModel:
    partition: Partition
    c: Fraction
    n: int
    W: frozenset
    Xi: SubshiftSystem
    Gamma: SubshiftSystem | frozenset
    samples: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    entropy_xi: float = 0.0
    entropy_gamma: float = 0.0
    locally_maximal: bool | None = None

    def decode(self, s: SymbolicPoint) -> SymbolicPoint:
        """``h(s)``: centre symbol of every cell along ``s``."""
        j = self.partition.radius
        centre = [w[j] for w in self.partition.cells]

        def sub(t):
            return tuple(centre[a] for a in t)

        return SymbolicPoint.make(sub(s.left), sub(s.center), sub(s.right), s.offset)

    def summary(self) -> str:
        lines = [
            f"cells: {self.partition.size} (radius {self.partition.radius})",
            f"c = {self.c}, window n = {self.n}, |W| = {len(self.W)}",
            f"entropy(Xi) = {self.entropy_xi:.6f}, entropy(Gamma_c) = {self.entropy_gamma:.6f}",
            f"Gamma_c locally maximal: {self.locally_maximal}",
        ]
        lines += [f"check {k}: {v}" for k, v in self.checks.items()]
        return "\n".join(lines) + "\n"


def default_c(partition: Partition, b=Fraction(1, 2)) -> Fraction:
    """Largest dyadic ``c <= b`` keeping the thickened cylinders disjoint."""
    return min(Fraction(1, 2 ** (partition.radius + 1)), Fraction(b))


def _itinerary_words(Lam, partition: Partition, length: int) -> dict:
    """Cell itineraries of ``Λ``-words, keyed by itinerary."""
    j = partition.radius
    index = partition._index
    out = {}
    for w in Lam.words(length + 2 * j):
        it = tuple(index[w[i : i + 2 * j + 1]] for i in range(length))
        out.setdefault(it, w)
    return out


def build_sft_model(
    ambient: SubshiftSystem,
    Lam,
    partition: Partition | None = None,
    n: int | None = None,
    c=None,
    *,
    e=Fraction(3, 4),
    check_length: int = 10,
    sample_period: int = 6,
    lm_horizon: int = 6,
) -> SftModel:
    """The SFT model of ``Λ`` at window ``n`` and thickening ``c``.

    ``n`` defaults to the least window making the cell pseudo-orbits
    ``1/4``-pseudo-orbits, so every sample can be cross-checked by
    constructive shadowing.
    """
    if not isinstance(ambient, SubshiftSystem):
        raise ModelBuildError("symbolic ambient required; use build_finite_model for finite systems")
    partition = partition or clopen_partition(ambient, Lam, e)
    j = partition.radius
    c = Fraction(c) if c is not None else default_c(partition)
    if c <= 0:
        raise ModelBuildError("c must be positive")
    if dyadic_exponent(c) < j + 1:
        raise ModelBuildError(f"c = {c} merges cells: thickened cylinders of radius {j} overlap")
    if n is None:
        n = max(1, 2 - j)
    if n < 1:
        raise ModelBuildError("n must be at least 1")
    m = partition.size
    W = frozenset(_itinerary_words(Lam, partition, 2 * n + 1))
    Xi = SubshiftSystem(m, W, name=f"Xi(n={n})")
    gamma_words = Lam.words(2 * (n + j) + 1)
    Gamma = SubshiftSystem(ambient.alphabet, gamma_words, name=f"Gamma_{c}")
    model = SftModel(partition, c, n, W, Xi, Gamma)
    ch = model.checks

    # Σ ⊆ Ξ, window by window
    ch["sigma_in_xi"] = all(set(_itinerary_words(Lam, partition, k)) <= Xi.words(k) for k in range(1, check_length + 1))
    # Λ ⊆ Γ_c ⊆ B_c(Λ)
    ch["lambda_in_gamma"] = all(Lam.words(k) <= Gamma.words(k) for k in range(1, check_length + 1))
    span = 2 * dyadic_exponent(c) - 1
    ch["gamma_in_ball"] = Gamma.words(span) <= Lam.words(span)
    # h maps Ξ-words onto Γ_c-words
    centre = [w[j] for w in partition.cells]
    ch["h_onto_gamma"] = all(
        {tuple(centre[a] for a in s) for s in Xi.words(k)} == set(Gamma.words(k)) for k in range(1, check_length + 1)
    )

    # materialized samples: periodic points and points through short words of Ξ
    samples = list(Xi.periodic_points(sample_period))
    for k in range(1, check_length + 1):
        samples += [Xi.point_containing(w) for w in sorted(Xi.words(k))[:4]]
    radius = max(n, 2 - j)
    lookup = _itinerary_words(Lam, partition, 2 * radius + 1)
    delta = Fraction(1, 2 ** (radius + j))
    ok_conj = ok_shadow = True
    for s in dict.fromkeys(samples):
        y = model.decode(s)
        ok_conj &= model.decode(s.shift(1)) == y.shift(1) and Gamma.contains(y)
        po = _cell_pseudo_orbit(ambient, s, lookup, radius, j)
        if po is None:
            ch["shadow_failure"] = f"itinerary window of {format_point(s)} not realized by Λ"
            ok_shadow = False
            continue
        z, eps = constructive_shadow(ambient, po, delta)
        ok_shadow &= z == y
        model.samples[format_point(s)] = format_point(y)
    ch["conjugacy"] = ok_conj
    ch["shadow_matches_decoding"] = ok_shadow
    model.entropy_xi = sft_entropy(Xi)
    model.entropy_gamma = sft_entropy(Gamma)
    model.locally_maximal = is_locally_maximal(ambient, Gamma, horizon=lm_horizon).locally_maximal
    failed = [k for k, v in ch.items() if v is not True]
    if failed:
        raise ModelBuildError(f"model invariants failed: {failed}")
    return model


def _cell_pseudo_orbit(ambient, s: SymbolicPoint, lookup: dict, radius: int, j: int) -> PseudoOrbit | None:
    """Pseudo-orbit ``j -> point carrying the Λ-word whose itinerary is the
    window of s around j``; eventually periodic tails become periodic
    blocks."""

    def entry(i):
        key = s.window(i - radius, i + radius)
        w = lookup.get(key)
        if w is None:
            return None
        return ambient.point_containing(w, at=-(radius + j))

    if s.is_periodic:
        ents = [entry(i) for i in range(s.period)]
        return None if None in ents else PseudoOrbit(tuple(ents), 0, periodic=True)
    q, p = len(s.left), len(s.right)
    lo, hi = s.offset - q - radius, s.tail_start + p + radius
    ents = [entry(i) for i in range(lo, hi)]
    left = [entry(i) for i in range(lo - q, lo)]
    right = [entry(i) for i in range(hi, hi + p)]
    if None in ents + left + right:
        return None
    return PseudoOrbit(tuple(ents), lo, left=tuple(left), right=tuple(right))


# -- finite models -----------------------------------------------------------------------------


@dataclass
class FiniteModel:
    partition: Partition
    c: float
    n: int
    W: frozenset
    Xi: SubshiftSystem
    Gamma: frozenset
    unique: bool
    shadow_ok: bool
    locally_maximal: bool
    lm_radius: float | None
    entropy_gamma: float
    notes: list = field(default_factory=list)


def build_finite_model(system: FiniteMetricSystem, Lam, c: float, n: int = 1, *, e: float | None = None, resolution: float | None = None) -> FiniteModel:
    """Finite analogue: singleton cells, itineraries of the periodic states
    of ``Λ``, and the set of states whose orbits follow each itinerary
    inside the ``c``-balls of the cells."""
    Lam = frozenset(Lam)
    partition = clopen_partition(system, Lam, e if e is not None else 2 * c)
    cells = [next(iter(cell)) for cell in partition.cells]
    balls = [build_ball(system, {x}, c) for x in cells]
    for a in range(len(balls)):
        for b in range(a + 1, len(balls)):
            if balls[a] & balls[b]:
                raise ModelBuildError(f"c = {c} merges cells {a} and {b}")
    index = {x: k for k, x in enumerate(cells)}
    W = set()
    for x in Lam:
        p = system.period(x)
        it = [index[system.iterate(x, i)] for i in range(p)]
        for i in range(p):
            W.add(tuple(it[(i + t) % p] for t in range(2 * n + 1)))
    Xi = SubshiftSystem(max(len(cells), 1), W, name=f"Xi(n={n})")
    member = np.zeros((len(cells), system.n), dtype=bool)
    for k, ball in enumerate(balls):
        member[k, list(ball)] = True
    gamma, unique, shadow_ok = set(), True, True
    for s in Xi.periodic_points(max(system.period(x) for x in Lam)):
        word = s.right
        hits = [
            y for y in system.states
            if all(member[word[i % len(word)], system.iterate(y, i)] for i in range(np.lcm(len(word), system.period(y))))
        ]
        if not hits:
            shadow_ok = False
        if len(hits) > 1:
            unique = False
        gamma.update(hits)
    gamma = frozenset(gamma)
    res = resolution if resolution is not None else system.meta.get("resolution", 0.0)
    lm, lm_r = False, None
    r = 0.5
    while r >= res - system.tol and gamma:
        core = invariant_core(system, gamma, r)
        if core.stabilized and core.members == gamma:
            lm, lm_r = True, r
            break
        r /= 2
    if gamma:
        rep = entropy_estimate(system, gamma, n_max=8)
        h = rep.estimate
    else:
        h = 0.0
    notes = []
    if not unique:
        notes.append("several states follow the same itinerary: h is not single-valued at this c")
    if not lm:
        notes.append(f"Gamma_c is not isolated by any dyadic r >= {res:.4g}")
    return FiniteModel(partition, float(c), n, frozenset(W), Xi, gamma, unique, shadow_ok, lm, lm_r, h, notes)


# -- the zero-entropy equivalence -----------------------------------------------------------------


@dataclass
class Schedule:
    eps: tuple = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
    delta: tuple = (Fraction(1, 4), Fraction(1, 8))
    c: tuple = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
    b: tuple = (Fraction(1, 2),)
    e: tuple = (Fraction(1, 2), Fraction(1, 4))
    a: float = 0.5
    n_max: int = 10
    truncation_period: int = 6
    growth_threshold: int = 64
    entropy_tol: float = 1e-6


@dataclass
class Theorem12Report:
    hypotheses: dict
    conditions: dict
    verdict: str
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == "CONSISTENT" else 2 if self.verdict == "HYPOTHESIS FAILS" else 1

    def text(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        for k, v in self.hypotheses.items():
            lines.append(f"  hypothesis {k}: {v}")
        for k, v in self.conditions.items():
            lines.append(f"  condition {k}: {v}")
        for k, v in self.details.items():
            lines.append(f"  {k}: {v}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _verdict(hyp: dict, cond: dict, notes: list) -> str:
    held = all(v == "certified" for v in hyp.values())
    values = list(cond.values())
    if held:
        return "CONSISTENT" if len(set(values)) == 1 else "INCONSISTENT"
    a, b, c = values
    notes.append("hypotheses not certified: no verdict on the equivalence")
    for name, (x, y) in {"(1)=>(2)": (a, b), "(2)=>(3)": (b, c), "(3)=>(1)": (c, a)}.items():
        notes.append(f"{name} {'held' if (not x or y) else 'FAILED'} empirically")
    return "HYPOTHESIS FAILS"


def is_sft_language(G, horizon: int = 6, check: int = 12) -> int | None:
    """Least ``L <= horizon`` whose ``L``-words generate exactly ``G``'s
    language up to length ``check``, or None."""
    if isinstance(G, SubshiftSystem):
        return G.L
    for L in range(2, horizon + 1):
        S = SubshiftSystem(max(a for w in G.words(1) for a in w) + 1, G.words(L))
        if all(S.count_words(k) == len(G.words(k)) for k in range(1, check + 1)):
            return L
    return None


def theorem_1_2_verify(ambient, Lam, schedule: Schedule | None = None) -> Theorem12Report:
    schedule = schedule or Schedule()
    if isinstance(ambient, SubshiftSystem):
        return _verify_symbolic(ambient, Lam, schedule)
    return _verify_finite(ambient, frozenset(Lam), schedule)


def _verify_symbolic(ambient: SubshiftSystem, Lam, sch: Schedule) -> Theorem12Report:
    notes, details = [], {}
    L = is_sft_language(Lam)
    shadow = "certified" if L is not None else "not certified"
    details["shadowing"] = f"Λ is an SFT (window {L}); diagonal shadowing applies" if L else "Λ is not an SFT in range"
    cert = expansivity_constant(ambient)
    hyp = {"shadowing on Λ": shadow, "expansive on B_b(Λ)": "certified"}
    details["expansive constant"] = f"{cert.e} ({cert.note})"

    # (1) sensitivity on CR(f|Λ), read on a periodic truncation
    SLam = Lam if isinstance(Lam, SubshiftSystem) else SubshiftSystem(ambient.alphabet, Lam.words(L or 2))
    T = truncation(SLam, sch.truncation_period)
    cr = chain_components(T, float(min(sch.delta))).cr
    sen = sensitive_points(T, cr, sch.a).sensitive if cr else frozenset()
    simple = _all_simple_cycles(SLam)
    cond1 = not sen
    details["(1) |Sen_a| on truncation"] = f"{len(sen)} of {len(cr)} chain recurrent states"
    details["(1) structure"] = "every recurrent class is one cycle" if simple else "a recurrent class branches"
    if cond1 != simple:
        notes.append("truncated sensitivity disagrees with the structural reading")

    # (2) entropy of the maximal invariant set of B_ε(Λ)
    ents = {}
    for eps in sch.eps:
        core = neighbourhood_core(ambient, Lam, eps)
        ents[str(eps)] = 0.0 if core.is_empty else sft_entropy(core)
    cond2 = any(h <= sch.entropy_tol for h in ents.values())
    details["(2) h(Λ_ε)"] = ", ".join(f"ε={k}: {v:.6f}" for k, v in ents.items())

    # (3) zero-entropy locally maximal envelopes at every c
    cond3, rows = True, []
    for c in sch.c:
        j = dyadic_exponent(c) - 1
        try:
            part = clopen_partition(ambient, Lam, Fraction(1, 2**j))
            model = build_sft_model(ambient, Lam, part, c=c)
            ok = model.locally_maximal and model.entropy_gamma <= sch.entropy_tol
            rows.append(f"c={c}: LM={model.locally_maximal}, h={model.entropy_gamma:.6f}")
        except Exception as exc:  # a failed build is a report state
            ok = False
            rows.append(f"c={c}: build failed ({exc})")
        cond3 &= ok
    details["(3) envelopes"] = "; ".join(rows)
    cond = {"(1) Sen(f|CR(f|Λ)) empty": cond1, "(2) h(Λ_ε)=0 for some ε": cond2, "(3) Γ_c LM with h=0 for all c": cond3}
    return Theorem12Report(hyp, cond, _verdict(hyp, cond, notes), details, notes)


def _all_simple_cycles(S: SubshiftSystem) -> bool:
    succ = [set(np.flatnonzero(r).tolist()) for r in S.matrix]
    for comp in strongly_connected_components(succ):
        cs = set(comp)
        if any(len(succ[v] & cs) > 1 for v in comp):
            return False
    return True


def expansive_witness(system: FiniteMetricSystem, Lam, b: float, e: float):
    """A pair ``x != y`` in the maximal invariant set of ``B_b(Λ)`` whose
    orbits stay within ``e``, or None."""
    from .chaos import orbit_separation

    core = invariant_core(system, Lam, b).members
    # pairs away from Λ first, so the witness lives in the accumulating part
    order = sorted(core - Lam) + sorted(core & Lam)
    for i, x in enumerate(order):
        for y in order[i + 1 :]:
            if system.dist[x, y] <= e + system.tol and orbit_separation(system, x, y, stop_above=e + system.tol)[0] <= e + system.tol:
                return x, y
    return None


def _verify_finite(system: FiniteMetricSystem, Lam: frozenset, sch: Schedule) -> Theorem12Report:
    notes, details = [], {}
    d = system.dist[np.ix_(sorted(Lam), sorted(Lam))]
    gap = d[d > system.tol].min() if (d > system.tol).any() else np.inf
    delta = float(min(sch.delta))
    shadow = "certified" if delta < gap else "not certified"
    details["shadowing"] = f"δ={delta} below the least distance in Λ ({gap}): pseudo-orbits in Λ are orbits" if shadow == "certified" else f"δ={delta} not below gap {gap}"

    witnesses = {}
    for b in sch.b:
        for e in sch.e:
            w = expansive_witness(system, Lam, float(b), float(e))
            witnesses[(b, e)] = w
    refuted = all(w is not None for w in witnesses.values())
    hyp = {"shadowing on Λ": shadow, "expansive on B_b(Λ)": "refuted" if refuted else "certified"}
    for (b, e), w in witnesses.items():
        if w is not None:
            x, y = w
            details[f"witness b={b}, e={e}"] = f"{system.labels[x]} / {system.labels[y]}"

    cr = chain_components(system.restrict(Lam)[0], delta).cr
    sub, members = system.restrict(Lam)
    sen = sensitive_points(sub, cr, sch.a).sensitive if cr else frozenset()
    cond1 = not sen
    details["(1) |Sen_a(f|CR(f|Λ))|"] = len(sen)

    res = system.meta.get("resolution", 0.0)
    eps_ladder = [float(x) for x in sch.eps if float(x) >= res - system.tol] or [float(max(sch.eps))]
    ents = {}
    for eps in eps_ladder:
        core = invariant_core(system, Lam, eps)
        rep = entropy_estimate(system, core.members, n_max=sch.n_max)
        ents[eps] = rep.estimate
        details[f"(2) ε={eps}"] = f"|Λ_ε|={len(core.members)}, h≈{rep.estimate:.4f} ({rep.method})"
    cond2 = any(h <= sch.entropy_tol for h in ents.values())

    # c must keep each thickened cell inside the expansive scale: 2c <= e, c <= b
    good = [(float(b), float(e)) for (b, e), w in witnesses.items() if w is None]
    c_cap = max((min(b, e / 2) for b, e in good), default=max(float(c) for c in sch.c))
    cond3, rows = True, []
    for c in sch.c:
        if float(c) < res - system.tol or float(c) > c_cap + system.tol:
            continue
        try:
            fm = build_finite_model(system, Lam, float(c), resolution=res)
            ok = fm.unique and fm.shadow_ok and fm.locally_maximal and fm.entropy_gamma <= sch.entropy_tol
            rows.append(f"c={c}: |Γ|={len(fm.Gamma)}, unique={fm.unique}, LM={fm.locally_maximal}, h≈{fm.entropy_gamma:.4f}")
        except ModelBuildError as exc:
            ok = False
            rows.append(f"c={c}: {exc}")
        cond3 &= ok
    if not rows:
        cond3 = False
        rows.append("no c in the ladder above the model resolution")
    details["(3) envelopes"] = "; ".join(rows)
    cond = {"(1) Sen(f|CR(f|Λ)) empty": cond1, "(2) h(Λ_ε)=0 for some ε": cond2, "(3) Γ_c LM with h=0 for all c": cond3}
    verdict = _verdict(hyp, cond, notes)
    if refuted and cond1 and not cond2:
        notes.append("Sen empty on Λ yet Λ_ε carries positive entropy: expansiveness near Λ cannot be dropped")
    return Theorem12Report(hyp, cond, verdict, details, notes)
