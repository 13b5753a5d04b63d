"""Sensitivity, equicontinuity and horseshoe certificates.

Sensitivity on a finite model has to stop somewhere.  A state ``x`` is
probed on the dyadic ladder down to its own scale: the finest probe is the
least power of two at or above the distance to ``x``'s nearest neighbour.
``x`` is a-sensitive when some ``y`` inside that probe has a forward orbit
that ends up farther than ``a`` from ``x``'s orbit and farther than it
started.

Systems flagged ``meta["discrete"]`` are the whole space rather than a
sample of one; every point is isolated and ``Sen_a`` is empty.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import ceil, gcd, inf, log, log2

import numpy as np

from .chain import chain_components, chain_graph, is_chain
from .core import FiniteMetricSystem, PseudoOrbit, accumulation_set, is_shadowed_by
from .symbolic import (
    SubshiftSystem,
    SymbolicPoint,
    constructive_shadow,
    format_point,
    format_sft,
    parse_point,
    parse_sft,
    shift_metric,
    truncation,
)


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def orbit_separation(system: FiniteMetricSystem, x: int, y: int, stop_above: float = inf) -> tuple[float, int]:
    """``(sup_{i>=0} d(f^i x, f^i y), argmax)`` over one joint period.

    Stops early once the running value exceeds ``stop_above``.
    """
    n = _lcm(system.period(x), system.period(y))
    best, where = -1.0, 0
    u, v = x, y
    for i in range(n):
        d = system.dist[u, v]
        if d > best:
            best, where = float(d), i
            if best > stop_above:
                break
        u, v = system.perm[u], system.perm[v]
    return best, where


def dyadic_ceiling(t: float) -> float:
    """Least power of two ``>= t`` (``t > 0``)."""
    return 2.0 ** ceil(log2(t) - 1e-12)


def _nearest(system: FiniteMetricSystem) -> np.ndarray:
    d = system.dist.copy()
    np.fill_diagonal(d, inf)
    return d.min(axis=1) if system.n > 1 else np.full(system.n, inf)


@dataclass(frozen=True)
class Witness:
    y: int
    step: int
    start: float
    reached: float


@dataclass(frozen=True)
class SensitivityReport:
    a: float
    sensitive: frozenset
    witnesses: dict
    probes: dict
    mode: str = "single-model"

    def labels(self, system) -> list[str]:
        return [system.labels[x] for x in sorted(self.sensitive)]


def _witness(system, x, nearest, a, resolution) -> tuple[Witness | None, list]:
    scale = max(nearest[x], resolution or 0.0)
    if scale == inf:
        return None, []
    finest = dyadic_ceiling(scale)
    top = dyadic_ceiling(max(float(a), finest))
    ladder = [top / 2**j for j in range(int(round(log2(top / finest))) + 1)]
    tol = system.tol
    cands = np.flatnonzero(system.dist[x] <= finest + tol)
    for y in sorted(cands.tolist(), key=lambda y: (system.dist[x, y], y)):
        if y == x:
            continue
        start = float(system.dist[x, y])
        need = max(float(a), start) + tol
        sep, i = orbit_separation(system, x, y, stop_above=need)
        if sep > need:
            return Witness(y, i, start, sep), ladder
    return None, ladder


def sensitive_points(system: FiniteMetricSystem, restrict_to=None, a: float = 0.5, *, resolution: float | None = None) -> SensitivityReport:
    """``Sen_a`` of ``f`` restricted to the invariant set ``restrict_to``
    (everything when None), reported in the caller's state ids."""
    if a <= 0:
        raise ValueError("a must be positive")
    if restrict_to is not None:
        sub, members = system.restrict(restrict_to)
    else:
        sub, members = system, list(system.states)
    if sub.meta.get("discrete"):
        return SensitivityReport(float(a), frozenset(), {}, {}, mode="discrete")
    nearest = _nearest(sub)
    sens, wits, probes = set(), {}, {}
    for x in sub.states:
        w, ladder = _witness(sub, x, nearest, a, resolution)
        probes[members[x]] = ladder
        if w is not None:
            sens.add(members[x])
            wits[members[x]] = Witness(members[w.y], w.step, w.start, w.reached)
    return SensitivityReport(float(a), frozenset(sens), wits, probes)


def verify_witness(system: FiniteMetricSystem, x: int, w: Witness, a: float) -> bool:
    """Re-check a witness from raw metric data."""
    u, v = system.iterate(x, w.step), system.iterate(w.y, w.step)
    d0, dk = system.distance(x, w.y), system.distance(u, v)
    return x != w.y and abs(d0 - w.start) <= system.tol and dk > max(a, d0) + system.tol


def witness_scale(system: FiniteMetricSystem, a: float) -> np.ndarray:
    """Per state, the closest ``y`` whose orbit separates beyond ``a`` and
    beyond its starting distance (``inf`` when none)."""
    out = np.full(system.n, inf)
    order = np.argsort(system.dist, axis=1, kind="stable")
    for x in system.states:
        for y in order[x]:
            y = int(y)
            if y == x:
                continue
            start = float(system.dist[x, y])
            need = max(a, start) + system.tol
            if orbit_separation(system, x, y, stop_above=need)[0] > need:
                out[x] = start
                break
    return out


def refinements(system: FiniteMetricSystem, steps: int) -> list[FiniteMetricSystem]:
    """The system followed by ``steps`` finer members of its generator family."""
    from .generators import refine

    return [system] + [refine(system, k) for k in range(1, steps + 1)]


def sensitive_points_refined(family, a: float) -> SensitivityReport:
    """Sensitivity read off a refinement family.

    States are matched across members by label.  A state of the first
    member counts as a-sensitive when its witness scale (distance to the
    closest separating neighbour) strictly decreases along every member,
    i.e. separating points keep arriving closer as the model is refined.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    base = family[0]
    scales = [witness_scale(m, a) for m in family]
    index = [{lab: i for i, lab in enumerate(m.labels)} for m in family]
    nearest = _nearest(base)
    sens, wits = set(), {}
    for x in base.states:
        lab = base.labels[x]
        trail = []
        for m, sc, idx in zip(family, scales, index):
            j = idx.get(lab)
            trail.append(sc[j] if j is not None else inf)
        if all(t < inf for t in trail) and all(t2 < t1 - base.tol for t1, t2 in zip(trail, trail[1:])):
            sens.add(x)
            w, _ = _witness(base, x, nearest, a, None)
            if w is not None:
                wits[x] = w
    return SensitivityReport(float(a), frozenset(sens), wits, {"scales": "refinement"}, mode=f"refined x{len(family)}")


def equicontinuity_modulus(system: FiniteMetricSystem, eps: float):
    """``("delta", δ)`` for the largest schedule value ``δ = eps·2^-j`` with
    ``d(z, w) <= δ ⇒ sup_{i>=0} d(f^i z, f^i w) <= eps``, or
    ``("witness", (z, w, i))`` when no value above the least positive
    distance works."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    gap = system.min_positive_distance
    iu = np.triu_indices(system.n, 1)
    d = system.dist[iu]
    bad = None
    for k in np.argsort(d, kind="stable"):
        if d[k] > eps + system.tol:
            break
        z, w = int(iu[0][k]), int(iu[1][k])
        sep, i = orbit_separation(system, z, w, stop_above=eps + system.tol)
        if sep > eps + system.tol:
            bad = (float(d[k]), z, w, i)
            break
    delta = float(eps)
    while True:
        if bad is None or delta < bad[0] - system.tol:
            return ("delta", delta)
        delta /= 2
        if delta < gap - system.tol:
            return ("witness", bad[1:])


# -- horseshoe certificates ---------------------------------------------------------------


@dataclass
class HorseshoeCertificate:
    base_point: str
    k: int
    m: int
    z: list
    w: list
    delta: float
    eps: float
    a: float
    margin: float
    entropy_bound: float
    word_length: int
    realizations: dict = field(default_factory=dict)
    separated: bool = False
    greedy_entropy: float = 0.0
    subshift: str | None = None
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HorseshoeCertificate":
        return cls(**json.loads(text))


class NoSensitivePointError(ValueError):
    pass


class ShadowSearchError(ValueError):
    pass


def _pair_search(graph, dist, p, separated, max_length):
    """Shortest closed walk of the pair graph from ``(p, p)`` back to
    ``(p, p)`` that visits a separated pair.  Returns ``(z, w, k)``."""
    succ = [sorted(s) for s in graph.successors]
    start = (p, p, False)
    prev = {start: None}
    frontier = [start]
    for depth in range(1, max_length + 1):
        nxt = []
        for u, v, seen in frontier:
            for u2 in succ[u]:
                for v2 in succ[v]:
                    flag = seen or separated(u2, v2)
                    st = (u2, v2, flag)
                    if st in prev:
                        continue
                    prev[st] = (u, v, seen)
                    if u2 == p and v2 == p and flag:
                        path = [st]
                        while prev[path[-1]] is not None:
                            path.append(prev[path[-1]])
                        path.reverse()
                        z = [s[0] for s in path]
                        w = [s[1] for s in path]
                        k = next(i for i, s in enumerate(path) if s[2])
                        return z, w, k
                    nxt.append(st)
        frontier = nxt
        if not frontier:
            break
    return None


def horseshoe_certificate(
    system,
    Lam=None,
    eps: float = 0.25,
    a: float = 1.0,
    *,
    p=None,
    word_length: int = 3,
    truncation_period: int = 6,
    max_length: int = 40,
) -> HorseshoeCertificate:
    """Two chains through a sensitive point ``p`` that split apart and
    return, plus shadowing realizations of their concatenations.

    ``system`` is a :class:`SubshiftSystem` (``Lam`` an SFT inside it or
    None) or a :class:`FiniteMetricSystem` (``Lam`` an invariant state set or
    None).  Chains are searched as η-chains with ``η = eps``; the separation
    check is ``d(z_k, w_k) - 2 eps > 0``.
    """
    eps, a = float(eps), float(a)
    if not 0 < eps < a / 2:
        raise ValueError("need 0 < eps < a/2")
    symbolic = isinstance(system, SubshiftSystem)
    notes = []
    if symbolic:
        base = Lam if Lam is not None else system
        model = truncation(base, truncation_period)
        codes = model.meta["codes"]
        pick = None if p is None else codes.index(p if isinstance(p, SymbolicPoint) else parse_point(p))
        sub, members = model, list(model.states)
    else:
        states = frozenset(Lam) if Lam is not None else frozenset(system.states)
        sub, members = system.restrict(states)
        pick = None if p is None else members.index(p)
    cr = chain_components(sub, eps).cr
    if not cr:
        raise NoSensitivePointError("no sensitive point: chain recurrent set is empty")
    crsys, crmembers = sub.restrict(cr)
    sen = sensitive_points(crsys, None, 2 * eps)
    if a <= crsys.diameter:
        sen_a = sensitive_points(crsys, None, a).sensitive
        if sen_a:
            sen = sensitive_points(crsys, None, a)
        else:
            notes.append(f"Sen_a empty since d <= {crsys.diameter}; sensitivity used at scale 2·eps")
    if not sen.sensitive:
        raise NoSensitivePointError("no sensitive point")
    if pick is None:
        p_local = min(sen.sensitive)
    else:
        if pick not in crmembers:
            raise NoSensitivePointError("requested base point is not chain recurrent")
        p_local = crmembers.index(pick)
        if p_local not in sen.sensitive:
            raise NoSensitivePointError("requested base point is not sensitive")
    graph = chain_graph(crsys, eps)
    dist = crsys.dist

    def separated(u, v):
        return dist[u, v] - 2 * eps > crsys.tol

    found = _pair_search(graph, dist, p_local, separated, max_length)
    if found is None:
        raise ShadowSearchError(f"no separating chain pair of length <= {max_length}")
    z, w, k = found
    m = len(z) - 1
    label = crsys.labels
    cert = HorseshoeCertificate(
        base_point=label[p_local],
        k=k,
        m=m,
        z=[label[i] for i in z],
        w=[label[i] for i in w],
        delta=eps,
        eps=eps,
        a=a,
        margin=float(dist[z[k], w[k]] - 2 * eps),
        entropy_bound=log(2) / m,
        word_length=word_length,
        subshift=format_sft(base) if symbolic else None,
        notes=notes,
    )
    if symbolic:
        _realize_symbolic(cert, base, [crsys.meta["codes"][i] for i in z], [crsys.meta["codes"][i] for i in w])
    else:
        _realize_finite(cert, crsys, z, w)
    return cert


def _words(length: int):
    return ["".join(s) for s in itertools.product("zw", repeat=length)]


def _realize_symbolic(cert, S, zpts, wpts) -> None:
    m, ell = cert.m, cert.word_length
    points = {}
    for s in _words(ell):
        entries = []
        for c in s:
            entries += (zpts if c == "z" else wpts)[:m]
        po = PseudoOrbit(tuple(entries), 0, periodic=True)
        y, _ = constructive_shadow(S, po, Fraction(cert.delta))
        points[s] = y
    cert.realizations = {s: format_point(y) for s, y in points.items()}
    cert.separated = _pairwise_separated(list(points.values()), ell * m, cert.eps, lambda x, i: x.shift(i), shift_metric)
    cert.greedy_entropy = _family_entropy(list(points.values()), ell * m, cert.eps)


def _realize_finite(cert, system, z, w) -> None:
    m, ell = cert.m, cert.word_length
    points = {}
    for s in _words(ell):
        seq = []
        for c in s:
            seq += (z if c == "z" else w)[:m]
        hit = next((x for x in system.states if _periodic_shadow(system, x, seq, cert.eps)), None)
        if hit is None:
            raise ShadowSearchError(f"no state ε-shadows the pseudo-orbit for word {s}: {seq}")
        points[s] = hit
    cert.realizations = {s: system.labels[x] for s, x in points.items()}
    cert.separated = _pairwise_separated(list(points.values()), ell * m, cert.eps, system.iterate, system.distance)
    from .entropy import separated_set

    orbit = frozenset(itertools.chain.from_iterable(system.orbit(x) for x in points.values()))
    _, s_n = separated_set(system, orbit, ell * m, cert.eps, mode="greedy")
    cert.greedy_entropy = log(s_n) / (ell * m)


def _periodic_shadow(system, x, seq, eps) -> bool:
    n = _lcm(len(seq), system.period(x))
    return all(system.dist[system.iterate(x, i), seq[i % len(seq)]] <= eps + system.tol for i in range(n))


def _pairwise_separated(points, n, r, step, dist) -> bool:
    for x, y in itertools.combinations(points, 2):
        if not any(dist(step(x, i), step(y, i)) > r for i in range(n)):
            return False
    return True


def _family_entropy(points, n, r) -> float:
    """Greedy ``log s_n / n`` on the orbit closure of a periodic family."""
    from .entropy import separated_set

    orbit = sorted({x.shift(i) for x in points for i in range(x.period)}, key=lambda x: (x.period, x.right))
    fam = _symbolic_family(orbit)
    K = frozenset(fam.states)
    _, s_n = separated_set(fam, K, n, r, mode="greedy")
    return log(s_n) / n


def _symbolic_family(points) -> FiniteMetricSystem:
    from .symbolic import periodic_distance_table

    index = {x: i for i, x in enumerate(points)}
    return FiniteMetricSystem(
        periodic_distance_table(points),
        [index[x.shift(1)] for x in points],
        [format_point(x) for x in points],
        name="realizations",
        meta={"codes": points, "metric": "shift", "expansive_constant": 0.5},
        check=False,
    )


def verify_certificate(cert: HorseshoeCertificate, system: FiniteMetricSystem | None = None) -> list[str]:
    """Re-check a certificate from raw data; returns the failed checks
    (empty when it verifies)."""
    fails = []
    if not 0 < cert.eps < cert.a / 2:
        fails.append("eps outside (0, a/2)")
    if cert.m < cert.k + 1 or len(cert.z) != cert.m + 1 or len(cert.w) != cert.m + 1:
        fails.append("chain lengths inconsistent")
    if not (cert.z[0] == cert.w[0] == cert.z[-1] == cert.w[-1] == cert.base_point):
        fails.append("chains do not start and end at the base point")
    if abs(cert.entropy_bound - log(2) / cert.m) > 1e-15:
        fails.append("entropy bound differs from log 2 / m")
    if cert.subshift is not None:
        S = parse_sft(cert.subshift)
        z = [parse_point(t) for t in cert.z]
        w = [parse_point(t) for t in cert.w]
        step, dist = (lambda x, i: x.shift(i)), shift_metric
        if not all(S.contains(x) for x in z + w):
            fails.append("chain point outside the subshift")
        if not (is_chain(S, z, cert.delta) and is_chain(S, w, cert.delta)):
            fails.append("chains are not δ-chains")
        reals = {s: parse_point(t) for s, t in cert.realizations.items()}
        for s, x in reals.items():
            seq = [p for c in s for p in (z if c == "z" else w)[: cert.m]]
            if not is_shadowed_by(S, PseudoOrbit(tuple(seq), 0, periodic=True), x, cert.eps):
                fails.append(f"realization for {s} does not shadow its pseudo-orbit")
        margin = float(dist(z[cert.k], w[cert.k])) - 2 * cert.eps
    else:
        if system is None:
            return fails + ["finite-system certificate needs its system"]
        z = [system.state_of(t) for t in cert.z]
        w = [system.state_of(t) for t in cert.w]
        step, dist = system.iterate, system.distance
        if not (is_chain(system, z, cert.delta) and is_chain(system, w, cert.delta)):
            fails.append("chains are not δ-chains")
        reals = {s: system.state_of(t) for s, t in cert.realizations.items()}
        margin = dist(z[cert.k], w[cert.k]) - 2 * cert.eps
    if margin <= 0:
        fails.append("separation margin not positive")
    if len(reals) != 2**cert.word_length:
        fails.append("missing realizations")
    elif not _pairwise_separated(list(reals.values()), cert.word_length * cert.m, cert.eps, step, dist):
        fails.append("realizations are not pairwise separated")
    return fails


# -- appendix checks ----------------------------------------------------------------------------


@dataclass(frozen=True)
class AppendixReport:
    all_periodic: bool
    sensitive: tuple
    accumulation_contains_sen: bool
    expansive_check: str
    layers: dict
    mode: str

    def text(self) -> str:
        lines = [
            f"X = Per(f): {self.all_periodic}",
            f"Sen_a ({self.mode}): {len(self.sensitive)} states",
            f"Sen_a inside accumulation set: {self.accumulation_contains_sen}",
            f"expansive check: {self.expansive_check}",
        ]
        for layer, count in sorted(self.layers.items()):
            lines.append(f"  sensitive in layer {layer}: {count}")
        return "\n".join(lines) + "\n"


def appendix_verify(system: FiniteMetricSystem, a: float, r: float, *, refine_steps: int | None = None) -> AppendixReport:
    """Finite-model checks around ``X = Per(f)``.

    When the system comes from a refinable generator, sensitivity is read
    off ``refine_steps`` (default 2) finer members and the accumulation set
    is taken on the finest member, matched back by label.
    """
    refinable = "refine_key" in system.meta
    if refine_steps is None:
        refine_steps = 2 if refinable else 0
    all_periodic = all(system.period(x) > 0 for x in system.states)
    if refine_steps and refinable:
        family = refinements(system, refine_steps)
        sen = sensitive_points_refined(family, a)
        finest = family[-1]
        acc = accumulation_set(finest, r)
        acc_labels = {finest.labels[x] for x in acc}
        inside = all(system.labels[x] in acc_labels for x in sen.sensitive)
    else:
        sen = sensitive_points(system, None, a)
        acc = accumulation_set(system, r)
        inside = sen.sensitive <= acc
    e = system.meta.get("expansive_constant")
    if e is None:
        exp = "not applicable (no expansiveness certificate)"
    elif not sen.sensitive:
        exp = f"expansive (e={e}) and Sen empty: consistent with finiteness"
    else:
        exp = (
            f"expansive (e={e}) with Sen nonempty: the model is a finite truncation, so no "
            "contradiction arises; sensitivity here reflects the infinite limit"
        )
    layer_of = system.meta.get("layer")
    layers = {}
    if layer_of is not None:
        for x in sen.sensitive:
            layers[layer_of[x]] = layers.get(layer_of[x], 0) + 1
    return AppendixReport(
        all_periodic,
        tuple(system.labels[x] for x in sorted(sen.sensitive)),
        inside,
        exp,
        layers,
        sen.mode,
    )
