"""Synthetic stand-in for a public orbital catalog.

Draws element sets from a mixture of orbit classes whose proportions and
shapes follow the broad structure of the tracked-object population: most
objects in low Earth orbit clustered in a few altitude shells, navigation
constellations in medium orbit, a geostationary ring, and transfer and
Molniya-type orbits with high eccentricity. Output is TLE text, so it runs
through the same parser as real data.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import OrbitalElements
from .ingest import format_tle

R_EARTH = 6378137.0

# (weight, mean altitude km, sd km) for LEO shells
_LEO_SHELLS = [
    (0.18, 500.0, 90.0),
    (0.22, 780.0, 50.0),
    (0.20, 850.0, 60.0),
    (0.18, 1000.0, 120.0),
    (0.10, 1450.0, 90.0),
    (0.12, 650.0, 250.0),
]
_LEO_INC = [(51.6, 0.2), (65.0, 0.15), (74.0, 0.15), (82.5, 0.15), (86.4, 0.1), (98.5, 0.25)]

_CLASSES = [
    ("leo", 0.74),
    ("meo", 0.04),
    ("geo", 0.09),
    ("gto", 0.10),
    ("molniya", 0.03),
]

# the three objects docked at a station share one element set
_STATION = OrbitalElements(R_EARTH + 408e3, 0.0004, math.radians(51.64), 1.2, 2.1, 0.7)


def _leo(rng: np.random.Generator) -> OrbitalElements:
    w = np.array([s[0] for s in _LEO_SHELLS])
    shell = _LEO_SHELLS[rng.choice(len(_LEO_SHELLS), p=w / w.sum())]
    alt = max(180.0, rng.normal(shell[1], shell[2])) * 1e3
    e = min(rng.exponential(0.004), 0.08)
    a = R_EARTH + alt
    # keep perigee above 150 km
    e = min(e, max(0.0, 1.0 - (R_EARTH + 150e3) / a))
    iw = np.array([s[1] for s in _LEO_INC])
    mode = _LEO_INC[rng.choice(len(_LEO_INC), p=iw / iw.sum())]
    inc = math.radians(min(max(rng.normal(mode[0], 1.5), 0.0), 180.0))
    return OrbitalElements(a, e, inc, *rng.uniform(0.0, 2 * math.pi, 3))


def _meo(rng: np.random.Generator) -> OrbitalElements:
    a, inc = [(26560e3, 55.0), (25510e3, 64.8), (29600e3, 56.0), (27900e3, 55.0)][rng.integers(4)]
    return OrbitalElements(a + rng.normal(0.0, 60e3), rng.exponential(0.004),
                           math.radians(inc + rng.normal(0.0, 1.0)), *rng.uniform(0.0, 2 * math.pi, 3))


def _geo(rng: np.random.Generator) -> OrbitalElements:
    a = 42164e3 + rng.normal(0.0, 150e3)
    inc = math.radians(abs(rng.normal(0.0, 5.0)))
    return OrbitalElements(a, rng.exponential(0.0008), inc, *rng.uniform(0.0, 2 * math.pi, 3))


def _gto(rng: np.random.Generator) -> OrbitalElements:
    rp = R_EARTH + rng.uniform(180e3, 700e3)
    ra = R_EARTH + rng.uniform(15000e3, 36500e3)
    a = 0.5 * (rp + ra)
    inc = math.radians(rng.choice([7.0, 20.0, 28.5, 47.0]) + rng.normal(0.0, 1.0))
    return OrbitalElements(a, (ra - rp) / (ra + rp), abs(inc), *rng.uniform(0.0, 2 * math.pi, 3))


def _molniya(rng: np.random.Generator) -> OrbitalElements:
    a = 26560e3 + rng.normal(0.0, 200e3)
    e = min(max(rng.normal(0.72, 0.02), 0.6), 0.74)
    return OrbitalElements(a, e, math.radians(63.4 + rng.normal(0.0, 0.5)),
                           rng.uniform(0.0, 2 * math.pi), math.radians(270.0 + rng.normal(0.0, 3.0)),
                           rng.uniform(0.0, 2 * math.pi))


_MAKERS = {"leo": _leo, "meo": _meo, "geo": _geo, "gto": _gto, "molniya": _molniya}


def synth_elements(n: int, seed: int = 0, docked: int = 3) -> list[OrbitalElements]:
    """``n`` element sets, the first ``docked`` of which are identical."""
    rng = np.random.default_rng(seed)
    names = [c[0] for c in _CLASSES]
    p = np.array([c[1] for c in _CLASSES])
    kinds = rng.choice(len(names), size=max(n - docked, 0), p=p / p.sum())
    out = [_STATION] * min(docked, n)
    out += [_MAKERS[names[k]](rng) for k in kinds]
    return out


def synth_tle_text(n: int, seed: int = 0, docked: int = 3) -> str:
    """TLE text for a synthetic catalog of ``n`` objects, numbered from 10000."""
    parts = []
    for k, el in enumerate(synth_elements(n, seed, docked)):
        name = "STATION" if k < docked else f"SYNTH {k}"
        parts.append(format_tle(10000 + k, el, name=name))
    return "".join(parts)
