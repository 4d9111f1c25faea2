"""Semilinear wave dynamics: d_t^2 phi - d_x^2 phi + rho(phi) = 0.

The Cauchy solver is an explicit leapfrog (standard three-level scheme),
second order in space and time, stable under the CFL bound dt <= dx.  Every
step is either linear (hence Weil-coefficientwise) or a lifted smooth map,
so the solver runs verbatim over any Weil algebra: dual-number initial data
yield the solution together with its exact directional derivative, the
linearized solution, in the eps component.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import lattice as lt
from .weil import (
    SmoothMap,
    WeilAlgebra,
    WeilValue,
    append_dual,
    apply_smooth,
    constant_map,
    embed,
    extract_top,
    monomial_map,
    sin_map,
)


class SolverError(ValueError):
    """Invalid solver input."""


class ConeEscapeError(SolverError):
    """On the line, the causal cone of the data would reach the guard band."""


@dataclass(frozen=True)
class Interaction:
    """The nonlinearity rho in the field equation, with exact derivatives."""

    name: str
    rho: SmoothMap

    @cached_property
    def rho_prime(self) -> SmoothMap:
        return self.rho.derivative()


def interaction(name: str, **params) -> Interaction:
    """Factory for the registered interactions.

    free          rho(x) = 0
    mass          rho(x) = mass^2 * x          (param mass, default 1)
    phi4          rho(x) = coupling * x^3      (param coupling, default 1)
    sine_gordon   rho(x) = sin(x)
    """
    if name == "free":
        return Interaction("free", constant_map(0.0))
    if name == "mass":
        m = float(params.get("mass", 1.0))
        return Interaction("mass", monomial_map(m * m, 1, name=f"{m * m:g}*x"))
    if name == "phi4":
        lam = float(params.get("coupling", 1.0))
        return Interaction("phi4", monomial_map(lam, 3, name=f"{lam:g}*x^3"))
    if name == "sine_gordon":
        return Interaction("sine_gordon", sin_map())
    raise SolverError(f"unknown interaction {name!r}")


def custom_interaction(name: str, rho: SmoothMap) -> Interaction:
    return Interaction(name, rho)


@dataclass(frozen=True)
class FieldHistory:
    """A Weil-valued field over the full (time x space) grid.

    values has shape (n_time+1, *batch, n_space) in Weil-value terms; extra
    batch axes carry independent runs through the same grid.
    """

    values: WeilValue
    lattice: lt.LatticeSpacetime

    def __post_init__(self) -> None:
        shape = self.values.shape
        if len(shape) < 2 or shape[0] != self.lattice.n_slices \
                or shape[-1] != self.lattice.n_space:
            raise SolverError(
                f"history shape {shape} does not match lattice "
                f"({self.lattice.n_slices} x ... x {self.lattice.n_space})"
            )

    @property
    def algebra(self) -> WeilAlgebra:
        return self.values.algebra

    def slice(self, j: int) -> WeilValue:
        if not 0 <= j <= self.lattice.n_time:
            raise SolverError(f"slice {j} out of range")
        return self.values[j]


@dataclass(frozen=True)
class CauchyData:
    """Initial position phi and initial velocity pi = d_t phi on a slice."""

    phi: WeilValue
    pi: WeilValue
    slice_index: int = 0

    def __post_init__(self) -> None:
        if self.phi.algebra != self.pi.algebra:
            raise SolverError("phi and pi must share an algebra")
        if self.phi.shape != self.pi.shape:
            raise SolverError("phi and pi must share a shape")

    @property
    def algebra(self) -> WeilAlgebra:
        return self.phi.algebra

    @property
    def n_space(self) -> int:
        return self.phi.shape[-1]

    def __add__(self, other: "CauchyData") -> "CauchyData":
        return CauchyData(self.phi + other.phi, self.pi + other.pi, self.slice_index)

    def __sub__(self, other: "CauchyData") -> "CauchyData":
        return CauchyData(self.phi - other.phi, self.pi - other.pi, self.slice_index)

    def __mul__(self, c) -> "CauchyData":
        return CauchyData(self.phi * c, self.pi * c, self.slice_index)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(self.phi.max_abs(), self.pi.max_abs())


def zero_data(algebra: WeilAlgebra, lat: lt.LatticeSpacetime,
              batch: tuple[int, ...] = ()) -> CauchyData:
    shape = tuple(batch) + (lat.n_space,)
    return CauchyData(WeilValue.zeros(algebra, shape), WeilValue.zeros(algebra, shape))


def data_from_arrays(phi: np.ndarray, pi: np.ndarray,
                     algebra: WeilAlgebra | None = None) -> CauchyData:
    algebra = algebra or WeilAlgebra.real()
    return CauchyData(
        WeilValue.from_scalar(algebra, phi), WeilValue.from_scalar(algebra, pi)
    )


# -- residuals ----------------------------------------------------------------


def eom_residual(history: FieldHistory, inter: Interaction) -> WeilValue:
    """P(phi) = box(phi) + rho(phi) on the interior time slices 1..n_time-1."""
    lat = history.lattice
    box = lt.d2_dt2_interior(history.values, lat) - \
        lt.d2_dx2(history.values, lat)[1:-1]
    return box + apply_smooth(inter.rho, history.values[1:-1])


def linearize_residual(base: FieldHistory, fiber: FieldHistory,
                       inter: Interaction) -> WeilValue:
    """box(psi) + rho'(phi) * psi on the interior time slices."""
    if base.lattice != fiber.lattice:
        raise SolverError("base and fiber must share a lattice")
    lat = base.lattice
    box = lt.d2_dt2_interior(fiber.values, lat) - lt.d2_dx2(fiber.values, lat)[1:-1]
    mass_term = apply_smooth(inter.rho_prime, base.values[1:-1]) * fiber.values[1:-1]
    return box + mass_term


def max_residual(history: FieldHistory, inter: Interaction) -> float:
    return eom_residual(history, inter).max_abs()


# -- the Cauchy solver ---------------------------------------------------------


def _check_line_support(data: CauchyData, lat: lt.LatticeSpacetime) -> None:
    band = np.zeros(lat.n_space, dtype=bool)
    band[: lat.guard] = True
    band[lat.n_space - lat.guard:] = True
    for name, v in (("phi", data.phi), ("pi", data.pi)):
        if np.any(np.abs(v.coeffs[..., band, :]) > 0):
            raise SolverError(f"line topology: initial {name} must vanish on the guard band")
    mask = np.any(np.abs(data.phi.coeffs) > 0, axis=-1) | \
        np.any(np.abs(data.pi.coeffs) > 0, axis=-1)
    mask = mask.reshape(-1, lat.n_space).any(axis=0)
    window = lt.SupportWindow.from_mask(mask, lat)
    cone = lt.causal_cone(window, lat.n_time, lat)
    if not cone.is_empty:
        if cone.lo < lat.guard or cone.lo + cone.width > lat.n_space - lat.guard:
            raise ConeEscapeError(
                "causal cone of the initial data reaches the guard band "
                f"within {lat.n_time} steps"
            )


def _leapfrog_slices(data: CauchyData, inter: Interaction, lat: lt.LatticeSpacetime,
                     check_support: bool):
    """Yield (slice index, field slice) marching the leapfrog forward.

    The first step is a Taylor start carried to third order,
    phi^1 = phi + dt*pi + (dt^2/2)(d_x^2 phi - rho(phi))
                 + (dt^3/6)(d_x^2 pi - rho'(phi) pi),
    so that the start-up error stays invisible to twice-differenced
    diagnostics (the conserved-current divergence) while global accuracy
    remains O(dx^2 + dt^2).  Consumers must not mutate the yielded slices.
    """
    if data.n_space != lat.n_space:
        raise SolverError("data length does not match the lattice")
    if lat.topology == lt.LINE and check_support:
        _check_line_support(data, lat)

    def accel(u: WeilValue) -> WeilValue:
        return lt.d2_dx2(u, lat) - apply_smooth(inter.rho, u)

    phi0, pi0 = data.phi, data.pi
    # line boundary: edge sites frozen at their initial values, which
    # stands in for a static vacuum outside the slab
    edge_left = phi0.coeffs[..., 0, :].copy()
    edge_right = phi0.coeffs[..., -1, :].copy()

    def clamp_guard(value: WeilValue) -> WeilValue:
        if lat.topology == lt.LINE:
            value.coeffs[..., 0, :] = edge_left
            value.coeffs[..., -1, :] = edge_right
        return value

    yield 0, phi0
    jerk = lt.d2_dx2(pi0, lat) - apply_smooth(inter.rho_prime, phi0) * pi0
    cur = clamp_guard(
        phi0 + lat.dt * pi0 + (0.5 * lat.dt**2) * accel(phi0)
        + (lat.dt**3 / 6.0) * jerk
    )
    yield 1, cur
    prev = phi0
    dt2 = lat.dt**2
    for j in range(2, lat.n_time + 1):
        nxt = clamp_guard(2.0 * cur - prev + dt2 * accel(cur))
        yield j, nxt
        prev, cur = cur, nxt


def solve_cauchy(data: CauchyData, inter: Interaction,
                 lat: lt.LatticeSpacetime, *, check_support: bool = True) -> FieldHistory:
    """March the field equation forward with an explicit leapfrog.

    Weil-valued data propagate through unchanged code, so the eps part of a
    dual-number run solves the linearized equation around the scalar part,
    exactly to scheme rounding; extracting any coefficient of the result
    equals solving that coefficient's own system directly.
    """
    algebra = data.algebra
    batch = data.phi.shape[:-1]
    out = np.zeros((lat.n_slices,) + batch + (lat.n_space, algebra.dim))
    for j, value in _leapfrog_slices(data, inter, lat, check_support):
        out[j] = np.broadcast_to(value.coeffs, out[j].shape)
    return FieldHistory(WeilValue(algebra, out), lat)


def solve_smeared(data: CauchyData, inter: Interaction, lat: lt.LatticeSpacetime,
                  weights: np.ndarray, *, check_support: bool = True) -> WeilValue:
    """The grid sum of weights * solution * dx * dt without storing the history.

    Memory stays at three slices regardless of batch size, which lets
    callers batch many initial-data directions through one pass.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (lat.n_slices, lat.n_space):
        raise SolverError("weights must cover the full grid")
    acc: WeilValue | None = None
    for j, value in _leapfrog_slices(data, inter, lat, check_support):
        term = (value * weights[j]).sum(axis=-1)
        acc = term if acc is None else acc + term
    assert acc is not None
    return acc * (lat.dx * lat.dt)


def restrict_data(history: FieldHistory, j: int) -> CauchyData:
    """Read off (phi, pi) on slice j; pi is the second-order time-derivative stencil."""
    lat = history.lattice
    if not 0 <= j <= lat.n_time:
        raise SolverError(f"slice {j} out of range")
    phi = history.values[j].copy()
    pi = lt.time_derivative_at(history.values, j, lat)
    return CauchyData(phi, pi, slice_index=j)


# -- tangent lifts --------------------------------------------------------------


def lift_data(data: CauchyData, direction: CauchyData) -> CauchyData:
    """Initial data over W (x) R[eps]: data + eps * direction."""
    big = append_dual(data.algebra)
    eps = WeilValue.generator(big, big.num_generators - 1)
    return CauchyData(
        embed(data.phi, big) + eps * embed(direction.phi, big),
        embed(data.pi, big) + eps * embed(direction.pi, big),
        data.slice_index,
    )


def tangent_lift(data: CauchyData, direction: CauchyData, inter: Interaction,
                 lat: lt.LatticeSpacetime, *, check_support: bool = True) -> FieldHistory:
    """Solve over W (x) R[eps] with data + eps*direction in one pass."""
    if data.algebra != direction.algebra:
        raise SolverError("data and direction must share an algebra")
    return solve_cauchy(lift_data(data, direction), inter, lat,
                        check_support=check_support)


def base_history(lifted: FieldHistory) -> FieldHistory:
    """The eps^0 part of a dual-lifted history."""
    return FieldHistory(extract_top(lifted.values, 0), lifted.lattice)


def fiber_history(lifted: FieldHistory) -> FieldHistory:
    """The eps^1 part of a dual-lifted history: the linearized solution."""
    return FieldHistory(extract_top(lifted.values, 1), lifted.lattice)
