"""Named testbeds, their capability tags, and a geometry cache.

Hypothesis tags form a chain: AnyRiemannian < Kahler < Einstein <
EinsteinNegative.  A case tagged T runs on a bed whose capability set
contains T; Einstein-only identities refuse to run on the perturbed tori.
"""

from __future__ import annotations

from typing import Optional

from .charts import ChartError, Geometry, build_ball_chart, build_torus_chart

TAG_ORDER = ("AnyRiemannian", "Kahler", "Einstein", "EinsteinNegative")

TESTBEDS = {
    "torus": {
        "m": 1, "builder": "torus", "capabilities":
            ("AnyRiemannian", "Kahler", "Einstein"),
        "default_resolution": 32, "spectral": True,
    },
    "torus4": {
        "m": 2, "builder": "torus", "capabilities":
            ("AnyRiemannian", "Kahler", "Einstein"),
        "default_resolution": 16, "spectral": True,
    },
    "ptorus": {
        "m": 1, "builder": "ptorus", "capabilities": ("AnyRiemannian", "Kahler"),
        "default_resolution": 64, "spectral": True,
    },
    "ptorus4": {
        "m": 2, "builder": "ptorus", "capabilities": ("AnyRiemannian", "Kahler"),
        "default_resolution": 16, "spectral": True,
    },
    "disk": {
        "m": 1, "builder": "ball", "capabilities":
            ("AnyRiemannian", "Kahler", "Einstein", "EinsteinNegative"),
        "default_resolution": 128, "spectral": False,
    },
    "ch2": {
        "m": 2, "builder": "ball", "capabilities":
            ("AnyRiemannian", "Kahler", "Einstein", "EinsteinNegative"),
        "default_resolution": 20, "spectral": False,
    },
}

_PERTURBATION_SEED = 7
_PERTURBATION_AMPLITUDE = 0.02

_cache: dict = {}


def clear_cache() -> None:
    _cache.clear()


def build_testbed(name: str, resolution: Optional[int] = None,
                  deriv_order: int = 6) -> Geometry:
    if name not in TESTBEDS:
        raise ChartError(f"unknown testbed {name!r}; choose from {sorted(TESTBEDS)}")
    info = TESTBEDS[name]
    res = resolution or info["default_resolution"]
    key = (name, res, deriv_order)
    if key in _cache:
        return _cache[key]
    m = info["m"]
    if info["builder"] == "torus":
        geo = build_torus_chart(m, res)
    elif info["builder"] == "ptorus":
        geo = build_torus_chart(m, res, potential_seed=_PERTURBATION_SEED,
                                potential_amplitude=_PERTURBATION_AMPLITUDE)
    else:
        geo = build_ball_chart(m, res, deriv_order)
    _cache[key] = geo
    return geo


def capabilities(name: str) -> tuple:
    return TESTBEDS[name]["capabilities"]


def supports(name: str, tags) -> bool:
    caps = set(capabilities(name))
    return all(t in caps for t in tags)
