"""Experiment configuration: JSON documents with nested descriptors.

A config file is a single JSON object.  Required keys depend on the
experiment kind; shared descriptors:

    lattice      {topology, n_space, dx | extent, dt | dt_factor, n_time, guard?}
    interaction  {name, mass? , coupling?}
    algebra      {generators, orders}
    profiles     {profile: zero|constant|gaussian|bump|cosine|sine|kink|
                  random_fourier|array, ...parameters}

Spacetime smearings are separable:  {space: <profile>, time: <profile>}.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .. import dynamics as dyn
from .. import lattice as lt
from ..weil import WeilAlgebra

EXPERIMENTS = (
    "solve", "conserve", "bracket", "jacobi", "convergence", "roundtrip", "oracle_pj",
)

DEFAULT_TOLERANCES = {
    "solve_residual": None,      # None: scaled from the grid at run time
    "omega_drift": 1e-3,
    "closedness_order_band": 0.3,
    "order_band": 0.3,
    "bracket_oracle": 1e-3,
    "axiom_defect": 1e-9,
    "roundtrip_phi": 1e-12,
    "comb_defect": 1e-9,
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _profile_array(desc: dict, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    kind = desc.get("profile", "zero")
    amp = float(desc.get("amplitude", 1.0))
    if kind == "zero":
        return np.zeros_like(x)
    if kind == "constant":
        return np.full_like(x, amp)
    if kind == "gaussian":
        c = float(desc.get("center", 0.0))
        w = float(desc.get("width", 1.0))
        return amp * np.exp(-0.5 * ((x - c) / w) ** 2)
    if kind == "bump":
        c = float(desc.get("center", 0.0))
        w = float(desc.get("width", 1.0))
        s = (x - c) / w
        out = np.zeros_like(x)
        inside = np.abs(s) < 1.0
        out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out
    if kind == "cosine":
        k = float(desc.get("wavenumber", 1.0))
        ph = float(desc.get("phase", 0.0))
        return amp * np.cos(k * x + ph)
    if kind == "sine":
        k = float(desc.get("wavenumber", 1.0))
        ph = float(desc.get("phase", 0.0))
        return amp * np.sin(k * x + ph)
    if kind == "kink":
        c = float(desc.get("center", 0.0))
        return 4.0 * np.arctan(np.exp(x - c))
    if kind == "random_fourier":
        kmax = int(desc.get("kmax", 4))
        coeffs = rng.standard_normal((2, kmax + 1)) / np.arange(1, kmax + 2) ** 2
        span = x[-1] - x[0] + (x[1] - x[0])
        out = np.zeros_like(x)
        for k in range(kmax + 1):
            w = 2 * np.pi * k / span
            out += coeffs[0, k] * np.cos(w * x) + coeffs[1, k] * np.sin(w * x)
        return amp * out
    if kind == "array":
        arr = np.asarray(desc["values"], dtype=np.float64)
        if arr.shape != x.shape:
            raise ConfigError("array profile length must match n_space")
        return arr
    raise ConfigError(f"unknown profile {kind!r}")


def spatial_profile(desc: dict, lat: lt.LatticeSpacetime,
                    rng: np.random.Generator) -> np.ndarray:
    return _profile_array(desc, lat.x, rng)


def time_profile(desc: dict, lat: lt.LatticeSpacetime,
                 rng: np.random.Generator) -> np.ndarray:
    return _profile_array(desc, lat.t, rng)


def spacetime_profile(desc: dict, lat: lt.LatticeSpacetime,
                      rng: np.random.Generator) -> np.ndarray:
    """Separable smearing g(t, x) = time_profile(t) * space_profile(x)."""
    g_t = time_profile(desc.get("time", {"profile": "constant"}), lat, rng)
    g_x = spatial_profile(desc.get("space", {"profile": "zero"}), lat, rng)
    return np.outer(g_t, g_x)


def _lattice_from(desc: dict) -> lt.LatticeSpacetime:
    d = dict(desc)
    n_space = int(d["n_space"])
    if "dx" in d and "extent" in d:
        raise ConfigError("give dx or extent, not both")
    if "extent" in d:
        dx = float(d["extent"]) / n_space
    elif "dx" in d:
        dx = float(d["dx"])
    else:
        raise ConfigError("lattice needs dx or extent")
    if "dt" in d and "dt_factor" in d:
        raise ConfigError("give dt or dt_factor, not both")
    if "dt_factor" in d:
        dt = float(d["dt_factor"]) * dx
    elif "dt" in d:
        dt = float(d["dt"])
    else:
        raise ConfigError("lattice needs dt or dt_factor")
    try:
        return lt.LatticeSpacetime(
            topology=d.get("topology", "circle"),
            n_space=n_space,
            dx=dx,
            dt=dt,
            n_time=int(d["n_time"]),
            guard=int(d.get("guard", 2)),
        )
    except lt.LatticeError as exc:
        raise ConfigError(str(exc)) from exc


def _interaction_from(desc: dict) -> dyn.Interaction:
    d = dict(desc)
    name = d.pop("name")
    try:
        return dyn.interaction(name, **d)
    except (dyn.SolverError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description plus the raw document for hashing."""

    experiment: str
    lattice: lt.LatticeSpacetime
    interaction: dyn.Interaction
    algebra: WeilAlgebra
    initial_data: dict
    tangents: tuple[dict, ...]
    observables: tuple[dict, ...]
    tolerances: dict
    seed: int
    ladder: tuple[int, ...]
    study: str
    options: dict
    raw: dict = field(repr=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        experiment = doc.get("experiment")
        if experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, got {experiment!r}"
            )
        if "lattice" not in doc:
            raise ConfigError("config needs a lattice descriptor")
        lattice = _lattice_from(doc["lattice"])
        inter = _interaction_from(doc.get("interaction", {"name": "free"}))
        algebra = WeilAlgebra.from_descriptor(
            doc.get("algebra", {"generators": 0, "orders": []})
        )
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(doc.get("tolerances", {}))
        return cls(
            experiment=experiment,
            lattice=lattice,
            interaction=inter,
            algebra=algebra,
            initial_data=doc.get("initial_data",
                                 {"phi": {"profile": "zero"}, "pi": {"profile": "zero"}}),
            tangents=tuple(doc.get("tangents", ())),
            observables=tuple(doc.get("observables", ())),
            tolerances=tolerances,
            seed=int(doc.get("seed", 0)),
            ladder=tuple(int(n) for n in doc.get("ladder", ())),
            study=doc.get("study", "solution_error"),
            options=doc.get("options", {}),
            raw=doc,
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def with_overrides(self, seed: int | None = None,
                       tol: float | None = None) -> "ExperimentConfig":
        doc = dict(self.raw)
        if seed is not None:
            doc["seed"] = int(seed)
        if tol is not None:
            tols = dict(doc.get("tolerances", {}))
            tols[_primary_tolerance_key(self.experiment)] = tol
            doc["tolerances"] = tols
        return ExperimentConfig.from_dict(doc)


def _primary_tolerance_key(experiment: str) -> str:
    return {
        "solve": "solve_residual",
        "conserve": "omega_drift",
        "bracket": "bracket_oracle",
        "jacobi": "axiom_defect",
        "convergence": "order_band",
        "roundtrip": "roundtrip_phi",
        "oracle_pj": "comb_defect",
    }[experiment]
