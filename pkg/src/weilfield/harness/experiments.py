"""Experiment drivers: build the objects a config describes, measure, report.

Each driver returns a Report whose verdicts cite the tolerance they used;
``run`` optionally persists it.  Runs are deterministic for a fixed config
and seed (the only randomness is the config's seeded generator).
"""

from __future__ import annotations

import io
import os

import numpy as np

from .. import __version__
from .. import dynamics as dyn
from .. import lattice as lt
from .. import poisson as ps
from .. import zuckerman as zk
from ..weil import WeilValue
from .config import ConfigError, ExperimentConfig, spacetime_profile, spatial_profile
from .oracle import OracleError, PauliJordanOracle
from .report import Report, atomic_write_bytes, check, check_window, write_report


def run(config: ExperimentConfig, outdir: str | None = None) -> Report:
    """Dispatch a validated config to its driver and optionally persist."""
    driver = {
        "solve": _run_solve,
        "conserve": _run_conserve,
        "bracket": _run_bracket,
        "jacobi": _run_jacobi,
        "convergence": _run_convergence,
        "roundtrip": _run_roundtrip,
        "oracle_pj": _run_oracle_pj,
    }[config.experiment]
    report = driver(config, outdir)
    report.provenance = {
        "config_sha256": config.config_hash(),
        "version": __version__,
        "numpy": np.__version__,
        "seed": config.seed,
    }
    if outdir is not None:
        write_report(report, outdir)
    return report


# -- shared builders -----------------------------------------------------------


def _build_data(config: ExperimentConfig, rng: np.random.Generator,
                lat: lt.LatticeSpacetime | None = None) -> dyn.CauchyData:
    lat = lat or config.lattice
    phi = spatial_profile(config.initial_data.get("phi", {"profile": "zero"}), lat, rng)
    pi = spatial_profile(config.initial_data.get("pi", {"profile": "zero"}), lat, rng)
    return dyn.CauchyData(
        WeilValue.from_scalar(config.algebra, phi),
        WeilValue.from_scalar(config.algebra, pi),
    )


def _build_tangent(desc: dict, config: ExperimentConfig, rng: np.random.Generator,
                   lat: lt.LatticeSpacetime | None = None) -> dyn.CauchyData:
    lat = lat or config.lattice
    phi = spatial_profile(desc.get("phi", {"profile": "zero"}), lat, rng)
    pi = spatial_profile(desc.get("pi", {"profile": "zero"}), lat, rng)
    return dyn.CauchyData(
        WeilValue.from_scalar(config.algebra, phi),
        WeilValue.from_scalar(config.algebra, pi),
    )


def _build_observable(desc: dict, config: ExperimentConfig,
                      rng: np.random.Generator) -> tuple[ps.Observable, dict]:
    """Build an observable from its descriptor; aux carries smearing grids."""
    kind = desc.get("kind")
    lat = config.lattice
    if kind == "slice_phi":
        f = spatial_profile(desc.get("smearing", {}), lat, rng)
        return ps.slice_phi_observable(f, lat, name=desc.get("name", "")), {"profile": f}
    if kind == "slice_pi":
        g = spatial_profile(desc.get("smearing", {}), lat, rng)
        return ps.slice_pi_observable(g, lat, name=desc.get("name", "")), {"profile": g}
    if kind == "spacetime":
        g = spacetime_profile(desc.get("smearing", {}), lat, rng)
        obs = ps.spacetime_observable(g, config.interaction, lat,
                                      name=desc.get("name", ""))
        return obs, {"grid": g}
    if kind == "poly_composite":
        factors = desc.get("factors", [])
        if not factors:
            raise ConfigError("poly_composite needs a nonempty factors list")
        built = [_build_observable(f, config, rng)[0] for f in factors]
        obs = built[0]
        for extra in built[1:]:
            obs = ps.observable_product(obs, extra)
        power = int(desc.get("power", 1))
        if power != 1:
            obs = ps.observable_power(obs, power)
        return obs, {}
    raise ConfigError(f"unknown observable kind {kind!r}")


def _scaled_lattice(lat: lt.LatticeSpacetime, n: int) -> lt.LatticeSpacetime:
    """Same extent, anisotropy, and total time on an n-site grid."""
    extent = lat.n_space * lat.dx
    ratio = lat.dt / lat.dx
    total_t = lat.n_time * lat.dt
    dx = extent / n
    dt = ratio * dx
    return lt.LatticeSpacetime(lat.topology, n, dx, dt,
                               max(2, round(total_t / dt)), lat.guard)


def _fit_order(dxs, errs) -> float:
    """Least-squares slope of log error against log dx."""
    return float(np.polyfit(np.log(np.asarray(dxs)), np.log(np.asarray(errs)), 1)[0])


def _tangent_solutions(config: ExperimentConfig, rng: np.random.Generator,
                       lat: lt.LatticeSpacetime) -> list[zk.TangentSolution]:
    if len(config.tangents) < 2:
        raise ConfigError("this experiment needs at least two tangent descriptors")
    base = _build_data(config, rng, lat)
    out = []
    shared_base = None
    for desc in config.tangents:
        direction = _build_tangent(desc, config, rng, lat)
        lifted = dyn.tangent_lift(base, direction, config.interaction, lat)
        if shared_base is None:
            shared_base = dyn.base_history(lifted)
        fiber = dyn.fiber_history(lifted)
        window = None
        if lat.topology == lt.LINE:
            mask = np.any(np.abs(direction.phi.coeffs) > 0, axis=-1) | \
                np.any(np.abs(direction.pi.coeffs) > 0, axis=-1)
            window = lt.SupportWindow.from_mask(np.atleast_2d(mask).any(axis=0), lat)
        out.append(zk.tangent_solution_from_histories(shared_base, fiber, window))
    return out


# -- drivers --------------------------------------------------------------------


def _run_solve(config: ExperimentConfig, outdir: str | None) -> Report:
    rng = config.rng()
    lat = config.lattice
    data = _build_data(config, rng)
    hist = dyn.solve_cauchy(data, config.interaction, lat)
    res = dyn.eom_residual(hist, config.interaction)
    per_slice = np.max(np.abs(res.coeffs), axis=tuple(range(1, res.coeffs.ndim)))
    rows = [[j + 1, lat.t[j + 1], float(per_slice[j])] for j in range(len(per_slice))]
    report = Report("solve")
    report.add_table("residuals", ["slice", "t", "max_residual"], rows)
    tol = config.tolerances.get("solve_residual")
    if tol is None:
        tol = 100.0 * (lat.dx**2 + lat.dt**2)
    report.add_verdict(check("eom_residual_max", float(per_slice.max()), tol,
                             note="scheme-order consistency"))
    if outdir is not None:
        buf = io.BytesIO()
        lt.save_grid(buf, hist.values, lat)
        atomic_write_bytes(os.path.join(outdir, "history.bin"), buf.getvalue())
    return report


def _run_conserve(config: ExperimentConfig, outdir: str | None) -> Report:
    rng = config.rng()
    lat = config.lattice
    v, vp = _tangent_solutions(config, rng, lat)[:2]
    series = zk.presymplectic_series(v, vp)
    ref = float(series[0])
    scale = max(abs(ref), 1e-300)
    rows = [
        [j, lat.t[j], float(series[j]), abs(float(series[j]) - ref) / scale]
        for j in range(lat.n_slices)
    ]
    report = Report("conserve")
    report.add_table("omega_series", ["slice", "t", "omega", "relative_drift"], rows)
    drift = zk.slice_drift(v, vp)
    closed = zk.closedness_residual(v, vp)
    report.add_table("closedness", ["max_divergence"], [[closed]])
    report.add_verdict(check("omega_slice_drift", drift,
                             config.tolerances["omega_drift"],
                             note="relative to omega at slice 0"))
    return report


def _run_bracket(config: ExperimentConfig, outdir: str | None) -> Report:
    rng = config.rng()
    lat = config.lattice
    if len(config.observables) < 2:
        raise ConfigError("bracket experiment needs at least two observables")
    built = [_build_observable(d, config, rng) for d in config.observables]
    base = _build_data(config, rng)
    pairs = [ps.make_pair(obs, lat, samples=[base]) for obs, _ in built]

    compare = bool(config.options.get("compare_oracle", False))
    oracle = None
    if compare:
        if config.interaction.name not in ("mass", "free"):
            raise ConfigError("oracle comparison needs the free or mass interaction")
        mass = float(config.raw.get("interaction", {}).get("mass", 1.0)) \
            if config.interaction.name == "mass" else 0.0
        oracle = PauliJordanOracle(lat, mass)

    header = ["i", "j", "name_i", "name_j", "bracket", "pair_residual"]
    if oracle is not None:
        header += ["oracle", "relative_error"]
    rows = []
    worst = 0.0
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            b = ps.bracket(pairs[i], pairs[j], lat, samples=())
            value = float(b.F.evaluate(base).scalar_part)
            row = [i, j, built[i][0].name, built[j][0].name, value, b.residual]
            if oracle is not None:
                gi = built[i][1].get("grid")
                gj = built[j][1].get("grid")
                if gi is None or gj is None:
                    raise ConfigError("oracle comparison needs spacetime observables")
                ref = oracle.smeared_bracket(gi, gj)
                rel = abs(value - ref) / max(abs(ref), 1e-300)
                row += [ref, rel]
                worst = max(worst, rel)
            rows.append(row)
    report = Report("bracket")
    report.add_table("brackets", header, rows)
    if oracle is not None:
        report.add_verdict(check("bracket_vs_oracle", worst,
                                 config.tolerances["bracket_oracle"],
                                 note="max relative error over pairs"))
    else:
        worst_res = max(p.residual for p in pairs)
        report.add_verdict(check("pair_residual_max", worst_res,
                                 ps.DEFAULT_ADMISSIBILITY_TOL,
                                 note="admissibility of the input pairs"))
    return report


def _run_jacobi(config: ExperimentConfig, outdir: str | None) -> Report:
    rng = config.rng()
    lat = config.lattice
    if len(config.observables) < 3:
        raise ConfigError("jacobi experiment needs three observables")
    built = [_build_observable(d, config, rng)[0] for d in config.observables[:3]]
    n_samples = int(config.options.get("n_samples", 5))
    amp = float(config.options.get("sample_amplitude", 0.5))
    samples = []
    for _ in range(n_samples):
        phi = spatial_profile({"profile": "random_fourier", "amplitude": amp}, lat, rng)
        pi = spatial_profile({"profile": "random_fourier", "amplitude": amp}, lat, rng)
        samples.append(dyn.data_from_arrays(phi, pi))
    pairs = [ps.make_pair(F, lat, samples=samples) for F in built]
    rep = ps.verify_axioms(pairs[0], pairs[1], pairs[2], samples, lat)

    reval = ps.bracket(pairs[0], pairs[1], lat, samples=samples)
    closure_bound = max(p.residual for p in pairs) + 10.0 * lat.dx**2

    report = Report("jacobi")
    report.add_table(
        "axiom_defects",
        ["axiom", "relative_defect"],
        [
            ["antisymmetry_f", rep.antisymmetry_f],
            ["antisymmetry_v", rep.antisymmetry_v],
            ["jacobi_f", rep.jacobi_f],
            ["jacobi_v", rep.jacobi_v],
            ["leibniz_f", rep.leibniz_f],
            ["leibniz_v", rep.leibniz_v],
        ],
    )
    tol = config.tolerances["axiom_defect"]
    report.add_verdict(check("antisymmetry", max(rep.antisymmetry_f, rep.antisymmetry_v), tol))
    report.add_verdict(check("jacobi", max(rep.jacobi_f, rep.jacobi_v), tol))
    report.add_verdict(check("leibniz", max(rep.leibniz_f, rep.leibniz_v), tol))
    report.add_verdict(check("bracket_revalidation", reval.residual, closure_bound,
                             note="max(input residuals) + 10*dx^2"))
    return report


def _run_convergence(config: ExperimentConfig, outdir: str | None) -> Report:
    lat0 = config.lattice
    ladder = config.ladder or (64, 128, 256)
    study = config.study
    rows = []
    errs, dxs = [], []
    for n in ladder:
        lat = _scaled_lattice(lat0, n)
        rng = config.rng()  # same seed per rung: identical continuum problem
        if study == "solution_error":
            if lat.topology != lt.CIRCLE or config.interaction.name != "free":
                raise ConfigError("solution_error study needs a free field on the circle")
            k = 2 * np.pi / lat.circumference
            data = dyn.data_from_arrays(np.cos(k * lat.x), np.zeros(lat.n_space))
            hist = dyn.solve_cauchy(data, config.interaction, lat)
            exact = np.cos(k * lat.t)[:, None] * np.cos(k * lat.x)[None, :]
            err = float(np.max(np.abs(hist.values.scalar_part - exact)))
        elif study == "omega_drift":
            v, vp = _tangent_solutions(config, rng, lat)[:2]
            series = zk.presymplectic_series(v, vp)
            scale = max(abs(float(series[0])), 1e-300)
            err = float(np.max(np.abs(series - series[0]))) / scale
        elif study == "closedness":
            v, vp = _tangent_solutions(config, rng, lat)[:2]
            err = zk.closedness_residual(v, vp)
        else:
            raise ConfigError(f"unknown convergence study {study!r}")
        rows.append([n, lat.dx, err])
        errs.append(err)
        dxs.append(lat.dx)
    order = _fit_order(dxs, errs)
    report = Report("convergence")
    report.add_table("ladder", ["n_space", "dx", "error"], rows)
    report.add_table("order", ["study", "measured_order"], [[study, order]])
    report.add_verdict(check_window(f"{study}_order", order, 2.0,
                                    config.tolerances["order_band"]))
    return report


def _run_roundtrip(config: ExperimentConfig, outdir: str | None) -> Report:
    lat0 = config.lattice
    ladder = config.ladder or (lat0.n_space,)
    rows = []
    errs_pi, dts = [], []
    worst_phi = 0.0
    for n in ladder:
        lat = _scaled_lattice(lat0, n)
        rng = config.rng()
        phi = spatial_profile({"profile": "random_fourier", "amplitude": 1.0}, lat, rng)
        pi = spatial_profile({"profile": "random_fourier", "amplitude": 1.0}, lat, rng)
        data = dyn.data_from_arrays(phi, pi, config.algebra)
        hist = dyn.solve_cauchy(data, config.interaction, lat)
        back = dyn.restrict_data(hist, 0)
        err_phi = (back.phi - data.phi).max_abs()
        err_pi = (back.pi - data.pi).max_abs()
        rows.append([n, lat.dt, err_phi, err_pi])
        worst_phi = max(worst_phi, err_phi)
        errs_pi.append(err_pi)
        dts.append(lat.dt)
    report = Report("roundtrip")
    report.add_table("roundtrip", ["n_space", "dt", "err_phi", "err_pi"], rows)
    report.add_verdict(check("phi_roundtrip", worst_phi,
                             config.tolerances["roundtrip_phi"],
                             note="phi restriction is a copy"))
    if len(ladder) >= 2:
        order = _fit_order(dts, errs_pi)
        report.add_table("order", ["quantity", "measured_order"], [["pi", order]])
        report.add_verdict(check_window("pi_order", order, 2.0,
                                        config.tolerances["order_band"]))
    return report


def _run_oracle_pj(config: ExperimentConfig, outdir: str | None) -> Report:
    lat = config.lattice
    if config.interaction.name not in ("mass", "free"):
        raise ConfigError("the mode-sum oracle needs the free or mass interaction")
    mass = float(config.raw.get("interaction", {}).get("mass", 1.0)) \
        if config.interaction.name == "mass" else 0.0
    try:
        oracle = PauliJordanOracle(lat, mass)
        rows = []
        for j in (0, lat.n_time // 2, lat.n_time):
            t = float(lat.t[j])
            g = oracle.commutator(t)
            for i in range(lat.n_space):
                rows.append([j, t, i, i * lat.dx, float(g[i])])
        comb_defect = float(np.max(np.abs(oracle.d_dt_commutator(0.0)
                                          - oracle.delta_comb())))
        zero_defect = float(np.max(np.abs(oracle.commutator(0.0))))
    except OracleError as exc:
        raise ConfigError(str(exc)) from exc
    report = Report("oracle_pj")
    report.add_table("commutator", ["slice", "t", "site", "separation", "G"], rows)
    tol = config.tolerances["comb_defect"]
    report.add_verdict(check("equal_time_commutator", zero_defect, tol,
                             note="G(0, .) = 0"))
    report.add_verdict(check("velocity_comb", comb_defect, tol,
                             note="d_t G(0, .) equals the discrete delta comb"))
    return report
