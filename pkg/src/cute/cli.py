"""Command-line front end.

Every subcommand reads a TOML/JSON run description (or a shipped preset),
writes its outputs into one directory and finishes with ``manifest.json``.
Exit status is 0 on success, 2 for configuration problems and 3 for numerical
failures.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config, load_preset, preset_names, validate_file
from .dynamics import (TimeGrid, fc_autocorrelation, initial_photonic_state, photon_autocorrelation,
                       propagate, spectrum, write_gnuplot_script)
from .exceptions import CuteError, NumericError
from .hamiltonian import build
from .observables import (PolaritonProjector, compute_populations, fc_statistical_yields,
                          statistical_yields)
from .oracle import compare_dynamics
from .rates import (DARK_FC_FAMILY, TRANSITIONS, UPPER_POLARITON, RateResult, SpectralDensitySpec,
                    fgr_rate, required_modes, simulate_decay, write_rate_table)
from .symbasis import enumerate_basis
from .vibronic import FIRST, ZEROTH

__all__ = ["main", "execute"]

LONG_TIME_FS = 1000.0

TASKS_BY_COMMAND = {
    "solve-vib": {"vib"},
    "build": {"basis", "hamiltonian"},
    "propagate": {"trajectory", "populations"},
    "spectrum": {"spectrum", "bare_spectra"},
    "populations": {"populations", "yields"},
    "rates": {"rates"},
}


class _Stage:
    """Tags errors with the pipeline stage they came from."""

    current = "setup"

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        _Stage.current = self.name

    def __exit__(self, *exc):
        return False


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _peaks(result, threshold: float) -> dict:
    pos, heights = result.peaks(threshold)
    return {"positions_eV": [float(x) for x in pos],
            "relative_heights": [float(h / np.max(result.intensities)) for h in heights],
            "count": int(pos.size), "bin_eV": result.bin_width}


# -- rate sweep ---------------------------------------------------------------

def _rate_point(args):
    N, order, initial, G, J0, n_min, omega = args
    g = G / math.sqrt(N)
    probe = SpectralDensitySpec.default_flat(J0, N, g, 2)
    channels = ["D<-+", "-<-+"] if initial == UPPER_POLARITON else ["-<-D"]
    expected = sum(fgr_rate(order, t, N, g, probe, 0.0).analytic_ev for t in channels)
    n_modes = max(n_min, required_modes(expected, 2.0 * G)) if expected > 0 else n_min
    bath = SpectralDensitySpec.default_flat(J0, N, g, n_modes)
    fit = simulate_decay(order, N, g, bath, initial, omega=omega)
    return {"N": N, "order": order, "initial": initial, "n_modes": n_modes,
            "channels": fit.channels, "residual": fit.residual}


def run_rates(rcfg: dict, jobs: int = 1) -> List[RateResult]:
    orders = [ZEROTH if o == "zeroth" else FIRST for o in rcfg["orders"]]
    points = []
    if rcfg["simulate"]:
        for N in rcfg["N"]:
            for order in orders:
                points.append((N, order, UPPER_POLARITON))
                if order == FIRST:
                    points.append((N, order, DARK_FC_FAMILY))
    args = [(N, o, i, rcfg["G"], rcfg["J0"], rcfg["n_modes"], rcfg["omega"]) for N, o, i in points]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fits = list(pool.map(_rate_point, args))
    else:
        fits = [_rate_point(a) for a in args]
    fitted = {}
    for f in fits:
        for label, rate in f["channels"].items():
            fitted[(f["N"], f["order"], label)] = (rate, f["residual"])
    results = []
    for N in rcfg["N"]:
        g = rcfg["G"] / math.sqrt(N)
        bath = SpectralDensitySpec.default_flat(rcfg["J0"], N, g, rcfg["n_modes"])
        for order in orders:
            for t in TRANSITIONS:
                r = fgr_rate(order, t, N, g, bath, rcfg["eta"])
                if (N, order, t) in fitted:
                    r.fitted, r.residual = fitted[(N, order, t)]
                results.append(r)
    return results


# -- main pipeline --------------------------------------------------------------

def execute(cfg: RunConfig, out: Path, tasks: Iterable[str], jobs: int = 1,
            plot: bool = False) -> dict:
    """Run the requested ``tasks`` and return the summary written to ``summary.json``."""
    tasks = set(tasks)
    out.mkdir(parents=True, exist_ok=True)
    summary: Dict[str, object] = {"name": cfg.data.get("name")}
    outputs: List[str] = []
    d = cfg.data
    system_tasks = tasks - {"rates"}
    if system_tasks and d.get("species"):
        with _Stage("preflight"):
            summary["dimension"] = cfg.preflight()
        with _Stage("vibsolver"):
            species, cavity = cfg.build_species()
            summary["omega_c"] = cavity.omega_c
            summary["fc_energy"] = {sp.label: sp.vib.fc_energy() for sp in species}
        if "vib" in tasks:
            for label, vib in cfg.vibrational_bases().items():
                vib.ground.to_csv(out / f"vib_{label}_ground.csv")
                vib.excited.to_csv(out / f"vib_{label}_excited.csv")
                np.savetxt(out / f"fc_{label}.csv", vib.fc, delimiter=",", fmt="%.17g")
                outputs += [f"vib_{label}_ground.csv", f"vib_{label}_excited.csv", f"fc_{label}.csv"]
        needs_h = system_tasks & {"basis", "hamiltonian", "trajectory", "populations",
                                  "spectrum", "yields"}
        if needs_h:
            with _Stage("symbasis"):
                basis = enumerate_basis(species, cfg.kappa, d["max_dimension"])
            if "basis" in tasks:
                basis.to_jsonl(out / "basis.jsonl")
                outputs.append("basis.jsonl")
            with _Stage("hamiltonian"):
                h = build(basis, cavity)
                if "hamiltonian" in tasks:
                    h.to_matrix_market(out / "hamiltonian.mtx")
                    outputs.append("hamiltonian.mtx")
                if system_tasks & {"trajectory", "populations", "spectrum", "yields"}:
                    h.eigh()
            v0 = initial_photonic_state(basis)
        tg = TimeGrid(d["time"]["t_max_fs"], d["time"]["n_steps"]) if "time" in d else None
        if needs_h and system_tasks & {"trajectory", "populations"}:
            with _Stage("dynamics"):
                traj = propagate(h, v0, tg)
                if "trajectory" in tasks:
                    traj.to_csv(out / "trajectory.csv")
                    outputs.append("trajectory.csv")
            with _Stage("observables"):
                projectors = None
                if cfg.kappa == 0 and len(species) == 1:
                    projectors = {"upper": PolaritonProjector.upper(), "lower": PolaritonProjector.lower()}
                pops = compute_populations(traj, projectors)
                pops.to_csv(out / "populations.csv")
                outputs.append("populations.csv")
                late = tg.times_fs >= LONG_TIME_FS
                if late.any():
                    summary["long_time_average"] = {k: float(v[late].mean())
                                                    for k, v in pops.species.items()}
                if plot:
                    cols = list(pops.columns())
                    write_gnuplot_script(out / "plot.gp", "populations.csv", cols,
                                         ylabel="population")
                    outputs.append("plot.gp")
        spec_cfg = d["spectrum"]
        if "spectrum" in tasks and needs_h:
            with _Stage("dynamics"):
                c = photon_autocorrelation(h, v0, tg)
                res = spectrum(c, tg, spec_cfg["gamma"], tuple(spec_cfg["window"]),
                               spec_cfg["n_points"])
                res.to_csv(out / "spectrum.csv")
                outputs.append("spectrum.csv")
                summary["spectrum"] = {"gamma_eV": res.gamma,
                                       "peaks": _peaks(res, spec_cfg["peak_threshold"])}
                if plot and "plot.gp" not in outputs:
                    write_gnuplot_script(out / "plot.gp", "spectrum.csv", ["intensity"],
                                         xlabel="omega (eV)", ylabel="sigma")
                    outputs.append("plot.gp")
        if "bare_spectra" in tasks:
            with _Stage("dynamics"):
                bare = {}
                for sp in species:
                    res = spectrum(fc_autocorrelation(sp.vib, tg), tg, spec_cfg["gamma"],
                                   tuple(spec_cfg["window"]), spec_cfg["n_points"])
                    name = f"spectrum_bare_{sp.label}.csv"
                    res.to_csv(out / name)
                    outputs.append(name)
                    bare[sp.label] = _peaks(res, spec_cfg["peak_threshold"])
                summary["bare_spectra"] = bare
        if "yields" in tasks and needs_h:
            with _Stage("observables"):
                summary["yields"] = statistical_yields(h)
                summary["yields_fc"] = fc_statistical_yields(species, cavity)
    if "rates" in tasks and "rates" in d:
        with _Stage("rates"):
            results = run_rates(d["rates"], jobs)
            write_rate_table(results, out / "rates.csv")
            outputs.append("rates.csv")
    _write_json(out / "summary.json", summary)
    outputs.append("summary.json")
    summary["_outputs"] = outputs
    return summary


def _manifest(out: Path, cfg: RunConfig, command: str, outputs: Sequence[str], wall: float) -> None:
    _write_json(out / "manifest.json", {
        "tool": "cute",
        "version": __version__,
        "command": command,
        "source": cfg.source,
        "config": cfg.data,
        "wall_time_s": wall,
        "outputs": {name: _sha256(out / name) for name in sorted(set(outputs))},
    })


def _tasks_for_run(cfg: RunConfig) -> set:
    tasks = set(cfg.data["observables"])
    if "rates" in cfg.data:
        tasks.add("rates")
    return tasks


def _load(args) -> RunConfig:
    if getattr(args, "preset", None):
        return load_preset(args.preset)
    if not args.config:
        raise argparse.ArgumentTypeError("give a config file or --preset")
    return load_config(args.config)


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out) if args.out else Path(cfg.data["output_dir"])


def _cmd_pipeline(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    tasks = _tasks_for_run(cfg) if args.command == "run" else TASKS_BY_COMMAND[args.command]
    t0 = time.perf_counter()
    summary = execute(cfg, out, tasks, jobs=args.jobs, plot=args.plot or cfg.data["plot"])
    outputs = summary.pop("_outputs")
    _manifest(out, cfg, args.command, outputs, time.perf_counter() - t0)
    print(f"wrote {len(outputs) + 1} files to {out}")
    return 0


def _cmd_validate(args) -> int:
    diag = validate_file(args.config)
    print(json.dumps(diag.to_dict(), indent=2, sort_keys=True))
    return 0 if diag.ok else 2


def _cmd_oracle(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    _Stage.current = "vibsolver"
    species, cavity = cfg.build_species()
    sp = species[0]
    N = args.n_molecules
    g = sp.g if sp.g is not None else sp.G / math.sqrt(N)
    kappa = N if args.kappa is None else args.kappa
    t_max = args.t_max_fs or cfg.data.get("time", {}).get("t_max_fs", 500.0)
    _Stage.current = "oracle"
    report = compare_dynamics(N, sp.vib, g, cavity.omega_c, kappa, TimeGrid(t_max, args.n_steps))
    report.to_json(out / "oracle_report.json")
    _manifest(out, cfg, "oracle-compare", ["oracle_report.json"], time.perf_counter() - t0)
    print(f"max distance {report.max_distance:.3e}, max leakage {report.max_leakage:.3e}")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cute", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cute {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, preset=False):
        sp.add_argument("config", nargs="?" if preset else None, help="TOML or JSON run config")
        if preset:
            sp.add_argument("--preset", choices=preset_names(), help="shipped configuration")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
        sp.add_argument("--plot", action="store_true", help="also write a gnuplot script")

    for name, helptext in (("solve-vib", "vibrational eigenstates and FC overlaps"),
                           ("build", "basis listing and Hamiltonian in Matrix Market form"),
                           ("propagate", "amplitude trajectory and populations"),
                           ("spectrum", "cavity and bare-molecule absorption spectra"),
                           ("populations", "population time series and statistical yields"),
                           ("rates", "golden-rule rate table")):
        common(sub.add_parser(name, help=helptext))
    common(sub.add_parser("run", help="everything the config asks for"), preset=True)

    v = sub.add_parser("validate", help="schema check and size estimate")
    v.add_argument("config")

    o = sub.add_parser("oracle-compare", help="explicit-molecule reference vs symmetric engine")
    common(o, preset=True)
    o.add_argument("--n-molecules", type=int, default=2)
    o.add_argument("--kappa", type=int, default=None, help="truncation order (default N)")
    o.add_argument("--t-max-fs", type=float, default=None)
    o.add_argument("--n-steps", type=int, default=501)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    handler = {"validate": _cmd_validate, "oracle-compare": _cmd_oracle}.get(args.command,
                                                                             _cmd_pipeline)
    _Stage.current = "setup"
    try:
        return handler(args)
    except NumericError as exc:
        print(f"numeric failure [{_Stage.current}]: {exc}", file=sys.stderr)
        return 3
    except (CuteError, argparse.ArgumentTypeError) as exc:
        print(f"configuration error [{_Stage.current}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"configuration error [{_Stage.current}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
