"""Command-line interface: ``qlangevin {response,kk,stability,simulate}``.

Exit codes: 0 success, 1 usage or configuration error, 2 stability refusal,
3 numerical divergence, 4 a requested consistency check exceeded its tolerance.

Every subcommand accepts ``--config FILE`` with a JSON object whose keys are
the long option names (dashes or underscores); explicit flags override it.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .core import (ComplexSpectrum, FrequencyGrid, MechanicalSystem, Scatterer, ThermalState, UNITS_NOTE,
                   parse_grid, spectrum_from_csv, spectrum_to_csv, spectrum_to_json)
from .errors import (ContourError, DivergenceError, InvalidArgumentError, QLangevinError, StabilityError,
                     UnsupportedContinuationError)
from .smatrix import SMatrixModel, Tabulated, load_tabulated, parse_model

EXIT_OK, EXIT_USAGE, EXIT_STABILITY, EXIT_DIVERGENCE, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p, grid_default="0.01:1000"):
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--model", help="S-matrix: 'perfect', 'resonance:<cutoff>' or 'tabulated:<r.csv>,<s.csv>'")
    p.add_argument("--temp", type=float, help="temperature (default 0)")
    p.add_argument("--grid", help=f"frequency grid 'delta:half_count' (default {grid_default})")
    p.add_argument("--out", help="output directory (default: current directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlangevin", description=f"Quantum Langevin toolkit ({UNITS_NOTE}).")
    parser.add_argument("--version", action="version", version=f"qlangevin {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("response", help="susceptibility, force commutator and force spectrum")
    _add_common(p)
    p.add_argument("--format", choices=["csv", "json", "both"], help="spectrum file format (default csv)")

    p = sub.add_parser("kk", help="dispersion, FDT and detailed-balance consistency checks")
    _add_common(p, "0.01:10000")
    p.add_argument("--subtractions", type=int, help="subtractions at w = 0 (default 3)")
    p.add_argument("--tol", type=float, help="tolerance for every residual (default 1e-4)")
    p.add_argument("--xi", help="CSV file (omega,re,im) replacing the computed force commutator")
    p.add_argument("--induced-mass", action="store_true", default=None, help="also compute mu_0 and mu_T")

    p = sub.add_parser("stability", help="classify a system as stable_causal or runaway")
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--abraham-lorentz", nargs="*", metavar="KEY=VALUE", help="renormalized charge: M=, e2=, K=")
    g.add_argument("--scatterer", metavar="MODEL", help="scatterer with S-matrix MODEL")
    g.add_argument("--charge", type=float, metavar="CUTOFF", help="regulated charge with model form factor")
    g.add_argument("--brownian", action="store_true", default=None, help="white-noise Brownian kernel")
    p.add_argument("--temp", type=float, help="temperature (default 0)")
    p.add_argument("--mass", type=float, help="quasistatic mass (scatterer: M_0; charge: M)")
    p.add_argument("--spring", type=float, help="spring constant K (default 0)")
    p.add_argument("--e2", type=float, help="charge squared for --charge (default 1)")
    p.add_argument("--diffusion", type=float, help="D for --brownian")
    p.add_argument("--out", help="write the classification JSON to this file")

    p = sub.add_parser("simulate", help="ensemble of Langevin trajectories")
    _add_common(p)
    p.add_argument("--abraham-lorentz", nargs="*", metavar="KEY=VALUE",
                   help="simulate the renormalized charge: M=, e2=, K=")
    p.add_argument("--mass", type=float, help="quasistatic mass (default 1)")
    p.add_argument("--spring", type=float, help="spring constant K (default 0, free particle)")
    p.add_argument("--classical", action="store_true", default=None,
                   help="Brownian limit: friction D/T with D from the model")
    p.add_argument("--n-traj", type=int, help="number of trajectories (default 200)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--dt", type=float, help="time step (default 0.3)")
    p.add_argument("--steps", type=int, help="samples per trajectory (default 16384)")
    p.add_argument("--workers", type=int, help="worker threads (default 1)")
    p.add_argument("--write-trajectories", action="store_true", default=None, help="write traj_<stream>.csv files")
    return parser


_DEFAULTS = {
    "temp": 0.0, "grid": "0.01:1000", "out": ".", "format": "csv",
    "subtractions": 3, "tol": 1e-4, "xi": None, "induced_mass": False,
    "mass": 1.0, "spring": 0.0, "e2": 1.0, "diffusion": None, "classical": False,
    "n_traj": 200, "seed": 0, "dt": 0.3, "steps": 16384, "workers": 1, "write_trajectories": False,
}


def _merge_config(args, command):
    config = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in raw.items()}
        known = set(vars(args))
        unknown = sorted(set(config) - known)
        if unknown:
            raise UsageError(f"unknown config keys for '{command}': {', '.join(unknown)}")
    for key in vars(args):
        if getattr(args, key) is None:
            if key in config:
                setattr(args, key, config[key])
            elif key in _DEFAULTS and not (command == "stability" and key == "out"):
                setattr(args, key, _DEFAULTS[key])
    if command == "kk" and getattr(args, "grid", None) == _DEFAULTS["grid"] and "grid" not in config:
        args.grid = "0.01:10000"
    return args


def _metadata(command, args, seed=None):
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    return {"tool": "qlangevin", "version": __version__, "command": command, "params": params,
            "units": UNITS_NOTE, "seed": seed, "backend": BACKEND}


def _parse_model_arg(text) -> SMatrixModel:
    if text is None:
        raise UsageError("--model is required")
    text = str(text)
    if text.lower().startswith("tabulated:"):
        paths = text.split(":", 1)[1].split(",")
        if len(paths) != 2:
            raise UsageError("tabulated model needs 'tabulated:<r.csv>,<s.csv>'")
        return load_tabulated(*paths)
    return parse_model(text)


def _grid(text) -> FrequencyGrid:
    return parse_grid(str(text))


def _kv_pairs(items, allowed):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in allowed:
            raise UsageError(f"expected KEY=VALUE with KEY in {sorted(allowed)}, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad number in {item!r}") from exc
    return out


def _al_system(items):
    from .linear_coupling import abraham_lorentz_system

    kv = _kv_pairs(items, {"M", "e2", "K"})
    return abraham_lorentz_system(kv.get("M", 1.0), kv.get("e2", 1.0), kv.get("K", 0.0)), kv


def _outdir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_spectrum(spec, stem, outdir, fmt, meta):
    paths = []
    if fmt in ("csv", "both"):
        paths.append(spectrum_to_csv(spec, outdir / f"{stem}.csv", {"quantity": stem, **_flat(meta)}))
    if fmt in ("json", "both"):
        paths.append(spectrum_to_json(spec, outdir / f"{stem}.json", {"quantity": stem, **meta}))
    return paths


def _flat(meta):
    return {k: (v if isinstance(v, str) else json.dumps(v, default=str)) for k, v in meta.items()}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# spectra of a model on a grid


def _model_spectra(model, T, grid: FrequencyGrid):
    """``chi_T``, ``xi_T`` and ``C_FF`` on ``grid`` (tabulated models use grid sums and a
    one-subtraction dispersion integral for ``chi``)."""
    from . import dispersion
    from . import radiation_pressure as rp

    if isinstance(model, Tabulated):
        n_out = grid.half_count
        n_in = model.grid.half_count - n_out
        if model.grid.delta != grid.delta or n_in < n_out:
            raise InvalidArgumentError("for tabulated models the grid must share the table step "
                                       "and use at most half of its half_count")
        band = FrequencyGrid(grid.delta, n_in)
        xi = rp.force_commutator_grid(model, T, band, n_out)
        cff = rp.force_spectrum_grid(model, T, band, n_out)
        chi = dispersion.kk_transform(xi, 1)
        return chi, xi, cff
    wpos = grid.positive_points
    chi = ComplexSpectrum.from_positive_half(grid, rp.thermal_susceptibility(model, T, wpos), "hermitian")
    xi = ComplexSpectrum.from_positive_half(grid, rp.force_commutator(model, T, wpos), "odd")
    cff = ComplexSpectrum(grid, rp.force_spectrum(model, T, grid.points))
    return chi, xi, cff


# ---------------------------------------------------------------------------
# subcommands


def cmd_response(args) -> int:
    from . import radiation_pressure as rp

    model = _parse_model_arg(args.model)
    T = float(args.temp)
    grid = _grid(args.grid)
    meta = _metadata("response", args)
    chi, xi, cff = _model_spectra(model, T, grid)
    outdir = _outdir(args)
    files = []
    files += _write_spectrum(chi, "chi_T", outdir, args.format, meta)
    files += _write_spectrum(xi, "xi_T", outdir, args.format, meta)
    files += _write_spectrum(cff, "c_ff", outdir, args.format, meta)
    summary = {"metadata": meta}
    if model.closed_form:
        q = rp.quasistatic_coefficients(model, T)
        summary["quasistatic"] = q.as_dict()
        summary["momentum_diffusion"] = rp.momentum_diffusion(model, T)
    else:
        summary["quasistatic"] = None
        summary["momentum_diffusion"] = None
    summary["files"] = [str(f) for f in files]
    (outdir / "summary.json").write_text(_dump(summary))
    print(_dump({k: v for k, v in summary.items() if k != "metadata"}))
    return EXIT_OK


def _kk_window(model, grid):
    scale = float(getattr(model, "cutoff", 1.0))
    lo, hi = 0.1 * scale, min(5.0 * scale, 0.5 * grid.max_frequency)
    w = grid.points
    return (w >= lo) & (w <= hi)


def cmd_kk(args) -> int:
    from . import dispersion
    from . import radiation_pressure as rp

    model = _parse_model_arg(args.model)
    T = float(args.temp)
    grid = _grid(args.grid)
    n = int(args.subtractions)
    tol = float(args.tol)
    meta = _metadata("kk", args)
    report = {"metadata": meta, "tolerance": tol, "residuals": {}}

    chi_direct, xi, cff = _model_spectra(model, T, grid)
    if args.xi:
        xi = spectrum_from_csv(args.xi)
        if xi.grid != grid:
            raise InvalidArgumentError(f"{args.xi}: grid {xi.grid.to_dict()} differs from --grid {grid.to_dict()}")
    if model.closed_form:
        q = rp.quasistatic_coefficients(model, T)
        taylor = [1j * q.friction, q.half_curvature][: max(n - 1, 0)]
    elif n != 1:
        raise InvalidArgumentError("tabulated models are reconstructed with --subtractions 1")
    else:
        taylor = []
    chi_kk = dispersion.kk_transform(xi, n, taylor)
    res = report["residuals"]
    if model.closed_form:
        sel = _kk_window(model, grid)
        ref = chi_direct.values[sel]
        res["kk_vs_direct"] = float(np.max(np.abs(chi_kk.values[sel] - ref) / np.abs(ref)))
    res["fdt"] = dispersion.fdt_residual(chi_direct if model.closed_form else chi_kk, xi)
    bal = dispersion.detailed_balance_residual(cff, xi, T)
    res["detailed_balance_" + bal.path] = bal.residual
    status = EXIT_OK
    if args.induced_mass:
        scale = float(getattr(model, "cutoff", 1.0))
        try:
            if not model.closed_form:
                xi0 = rp.force_commutator_grid(model, 0.0, FrequencyGrid(grid.delta, grid.half_count), grid.half_count)
                report["mu_0"] = dispersion.induced_mass_vacuum(xi0).value
            else:
                mu0 = dispersion.induced_mass_vacuum(lambda k: rp.vacuum_force_commutator(model, k), scale=scale)
                tm = dispersion.induced_mass_thermal(lambda k: rp.force_commutator(model, T, k), q.friction,
                                                     lambda k: rp.vacuum_force_commutator(model, k), scale=scale)
                report["mu_0"] = mu0.value
                report["mu_T"] = tm.mu_T
                report["half_curvature_from_masses"] = tm.half_curvature
                report["half_curvature_quasistatic"] = q.half_curvature
        except DivergenceError as exc:
            report["induced_mass_error"] = f"divergence-error: {exc}"
            status = EXIT_DIVERGENCE
    failed = sorted(k for k, v in res.items() if not v <= tol)
    report["failed"] = failed
    report["passed"] = not failed
    outdir = _outdir(args)
    (outdir / "kk_report.json").write_text(_dump(report))
    _write_spectrum(chi_kk, "chi_kk", outdir, "csv", meta)
    print(_dump({k: v for k, v in report.items() if k != "metadata"}))
    if failed:
        return EXIT_CHECK
    return status


def cmd_stability(args) -> int:
    from .core import BrownianKernel
    from .linear_coupling import LinearCoupling, ModelFormFactor, point_charge_system
    from .stability import classify_system

    spring = float(args.spring)
    if args.abraham_lorentz is not None:
        system, _ = _al_system(args.abraham_lorentz)
    elif args.scatterer:
        model = _parse_model_arg(args.scatterer)
        system = MechanicalSystem(float(args.mass), spring, Scatterer(model, ThermalState(float(args.temp))))
    elif args.charge is not None:
        system = point_charge_system(float(args.mass), LinearCoupling(float(args.e2), ModelFormFactor(args.charge)),
                                     spring, float(args.temp))
    elif args.brownian:
        if args.diffusion is None:
            raise UsageError("--brownian needs --diffusion")
        system = MechanicalSystem(float(args.mass), spring, BrownianKernel(float(args.diffusion), float(args.temp)))
    else:
        raise UsageError("choose one of --abraham-lorentz, --scatterer, --charge, --brownian")
    report = classify_system(system).to_dict()
    report["metadata"] = _metadata("stability", args)
    text = _dump(report)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from . import dynamics as dy
    from . import radiation_pressure as rp

    seed = int(args.seed)
    meta = _metadata("simulate", args, seed=seed)
    if args.abraham_lorentz is not None:
        system, _ = _al_system(args.abraham_lorentz)
        dy.simulate_ensemble(system, 0.0, 1, 4 * float(args.dt), float(args.dt), seed)
        return EXIT_OK  # unreachable: runaway kernels are refused
    model = _parse_model_arg(args.model)
    if not model.closed_form:
        raise UnsupportedContinuationError("simulate needs a closed-form S-matrix model")
    T = float(args.temp)
    dt, steps = float(args.dt), int(args.steps)
    mass, spring = float(args.mass), float(args.spring)
    # noise band: the symmetric spectrum on a grid reaching the Nyquist frequency
    half = 1000
    band = FrequencyGrid(np.pi / dt / half, half)
    c_sym = ComplexSpectrum.from_positive_half(
        band, rp.symmetrized_force_spectrum(model, T, band.positive_points), "even")
    analytic_d = rp.momentum_diffusion(model, T)
    if args.classical:
        if T <= 0:
            raise InvalidArgumentError("the classical (Brownian) limit needs T > 0")
        system = dy.classical_limit_system(mass, spring, analytic_d, T)
    else:
        system = MechanicalSystem(mass, spring, Scatterer(model, ThermalState(T)))
    ens = dy.simulate_ensemble(system, c_sym, int(args.n_traj), steps * dt, dt, seed,
                               max_workers=int(args.workers))
    results = {"analytic_momentum_diffusion": analytic_d}
    if spring == 0:
        results["momentum_diffusion"] = dy.estimate_diffusion(ens).as_dict()
    else:
        results["position_variance"] = dy.estimate_equilibrium_variance(ens).as_dict()
        results["variance_oracle"] = dy.equilibrium_variance_oracle(system, c_sym)
        results["variance_oracle_discrete"] = dy.discrete_variance_oracle(system, c_sym, steps, dt)
        if args.classical:
            results["classical_T_over_K"] = T / spring
    outdir = _outdir(args)
    dy.ensemble_to_json(ens, outdir / "ensemble.json", {"results": results, "metadata": meta}, __version__)
    if args.write_trajectories:
        dy.write_trajectories_csv(ens, outdir, _flat(meta))
    print(_dump(results))
    return EXIT_OK


_COMMANDS = {"response": cmd_response, "kk": cmd_kk, "stability": cmd_stability, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("missing subcommand (response, kk, stability, simulate)")
        args = _merge_config(args, args.command)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StabilityError as exc:
        print(f"stability-error: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(_dump(exc.report.to_dict()))
        return EXIT_STABILITY
    except (DivergenceError, ContourError) as exc:
        print(f"divergence-error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (InvalidArgumentError, UnsupportedContinuationError, QLangevinError, ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
