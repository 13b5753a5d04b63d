"""Deterministic generators for the finite example systems."""

from __future__ import annotations

from fractions import Fraction
from math import cos, pi, sin, sqrt

import numpy as np

from .core import FiniteMetricSystem
from .symbolic import SymbolicPoint, format_point, full_shift, golden_mean, truncation


def _euclidean(coords) -> np.ndarray:
    xy = np.asarray(coords, dtype=float)
    diff = xy[:, None, :] - xy[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def cantor_value(x: SymbolicPoint) -> Fraction:
    """Ternary Cantor coding of a periodic binary sequence.

    Digits are read in the order ``x_0, x_1, x_-1, x_2, x_-2, ...`` and
    placed as ``0``/``2`` ternary digits; the tail is periodic with period
    ``2p``, so the value is an exact geometric sum.
    """
    if not x.is_periodic:
        raise ValueError("only periodic points have a finite coding here")
    p = x.period
    head = Fraction(2 * x.at(0), 3)
    block = []
    for k in range(1, p + 1):
        block += [x.at(k), x.at(-k)]
    tail = sum(Fraction(2 * d, 3 ** (t + 2)) for t, d in enumerate(block))
    return head + tail / (1 - Fraction(1, 3 ** (2 * p)))


def cantor_fan(N: int, P: int) -> tuple[FiniteMetricSystem, frozenset]:
    """Origin plus fibers ``{(1/n, c(w)/n)}`` for ``2 <= n <= N`` over all
    binary words ``w`` of least period ``<= P``; returns ``(system, Λ)``
    with ``Λ = {origin}``."""
    if N < 2 or P < 1:
        raise ValueError("need N >= 2 and P >= 1")
    pts = full_shift(2).periodic_points(P)
    index = {x: i for i, x in enumerate(pts)}
    coords = [(Fraction(0), Fraction(0))]
    labels = ["origin"]
    perm = [0]
    layer = ["origin"]
    blocks = []
    for n in range(2, N + 1):
        base = len(coords)
        states = []
        for x in pts:
            coords.append((Fraction(1, n), cantor_value(x) / n))
            labels.append(f"fiber {n} {format_point(x)}")
            perm.append(base + index[x.shift(1)])
            layer.append(f"fiber {n}")
            states.append(len(coords) - 1)
        blocks.append({"name": f"fiber {n}", "states": states, "subshift": full_shift(2)})
    system = FiniteMetricSystem(
        _euclidean(coords),
        perm,
        labels,
        name=f"cantor_fan(N={N},P={P})",
        meta={
            "generator": ("cantor_fan", {"N": N, "P": P}),
            "coords": coords,
            "layer": layer,
            "blocks": blocks,
            "resolution": sqrt(2) / N,
        },
    )
    return system, frozenset({0})


def circle_accumulation(N: int) -> FiniteMetricSystem:
    """Fixed circle samples at angles ``k/2^(N-1)`` plus rotating orbits
    ``z(n,k) = (1 - 1/n) e^{2πik/2^(n-1)}`` for ``1 <= n <= N``."""
    if N < 2:
        raise ValueError("need N >= 2")
    coords, labels, perm, layer = [], [], [], []
    m = 2 ** (N - 1)
    for k in range(m):
        t = 2 * pi * k / m
        coords.append((cos(t), sin(t)))
        labels.append(f"circle {Fraction(k, m)}")
        perm.append(len(perm))
        layer.append("circle")
    for n in range(1, N + 1):
        q = 2 ** (n - 1)
        base = len(coords)
        rad = 1 - 1 / n
        for k in range(q):
            t = 2 * pi * k / q
            coords.append((rad * cos(t), rad * sin(t)))
            labels.append(f"z({n},{k})")
            perm.append(base + (k + 1) % q)
            layer.append(f"z{n}")
    return FiniteMetricSystem(
        _euclidean(coords),
        perm,
        labels,
        name=f"circle_accumulation(N={N})",
        meta={"generator": ("circle_accumulation", {"N": N}), "refine_key": "N", "layer": layer, "coords": coords},
    )


def shift_truncation(P: int, shift: str = "full") -> FiniteMetricSystem:
    S = {"full": full_shift(2), "golden": golden_mean()}[shift]
    return truncation(S, P)


def fixed_points(k: int, gap: float = 1.0) -> FiniteMetricSystem:
    """``k`` fixed points on a line, ``gap`` apart."""
    coords = [(i * gap, 0.0) for i in range(k)]
    return FiniteMetricSystem(
        _euclidean(coords), list(range(k)), [f"p{i}" for i in range(k)],
        name=f"fixed_points({k})", meta={"generator": ("fixed_points", {"k": k, "gap": gap}), "discrete": True},
    )


def periodic_orbits(periods, gap: float = 1.0) -> FiniteMetricSystem:
    """Disjoint rotations on circles of radius ``gap/4`` centred ``gap`` apart."""
    coords, perm, labels = [], [], []
    for j, p in enumerate(periods):
        base = len(coords)
        for k in range(p):
            t = 2 * pi * k / p
            coords.append((j * gap + gap / 4 * cos(t), gap / 4 * sin(t)))
            perm.append(base + (k + 1) % p)
            labels.append(f"o{j}.{k}")
    return FiniteMetricSystem(
        _euclidean(coords), perm, labels, name=f"periodic_orbits({list(periods)})",
        meta={"generator": ("periodic_orbits", {"periods": list(periods), "gap": gap}), "discrete": True},
    )


GENERATORS = {
    "cantor_fan": lambda N, P: cantor_fan(N, P)[0],
    "circle_accumulation": circle_accumulation,
    "shift_truncation": shift_truncation,
    "fixed_points": fixed_points,
    "periodic_orbits": periodic_orbits,
}


def generate(name: str, **params):
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}") from None
    return gen(**params)


def refine(system: FiniteMetricSystem, steps: int = 1) -> FiniteMetricSystem:
    """The member ``steps`` levels finer in the system's generator family."""
    name, params = system.meta["generator"]
    key = system.meta.get("refine_key")
    if key is None:
        raise ValueError(f"{system.name} has no refinement parameter")
    params = dict(params)
    params[key] += steps
    return generate(name, **params)
