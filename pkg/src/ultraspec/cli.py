"""``ultraspec`` command line: spectrum, verify, simulate, sweep.

Settings resolve as flags > ``--config`` JSON file > built-in defaults; the
merged result is printed by ``--show-config``.  Domain failures exit 1 with
the error class name on stderr, usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import noisesim, oracle, spectra
from .errors import UltraspecError
from .hiermat import DEFAULT_DENSE_CAP, HierParams

DEFAULTS = {
    "p": 2,
    "r": 3,
    "coeffs": None,
    "form": "A",
    "boltzmann": None,
    "which": "Q",
    "seed": 0,
    "trials": 10000,
    "initial": None,
    "source": "mc",
    "frame": "lab",
    "output": None,
    "format": None,
    "dense_cap": DEFAULT_DENSE_CAP,
}


def _common(sub: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    sub.add_argument("-p", type=int, default=S, help="branching factor")
    sub.add_argument("-r", type=int, default=S, help="hierarchy depth")
    sub.add_argument("--coeffs", default=S, help="comma-separated r+1 coefficients")
    sub.add_argument("--form", choices=["A", "Q", "B", "C"], default=S,
                     help="coefficient form of --coeffs (default A)")
    sub.add_argument("--boltzmann", default=S,
                     help="beta, or start:stop:points[:log|linear] for sweep")
    sub.add_argument("--seed", type=int, default=S)
    sub.add_argument("--trials", type=int, default=S)
    sub.add_argument("--output", "-o", default=S, help="write here instead of stdout")
    sub.add_argument("--format", choices=["json", "csv"], default=S)
    sub.add_argument("--dense-cap", dest="dense_cap", type=int, default=S)
    sub.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    sub.add_argument("--show-config", action="store_true", default=False,
                     help="print the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ultraspec", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [("spectrum", "closed-form spectrum as JSON"),
                        ("verify", "check a spectrum against dense brute force")]:
        sub = subs.add_parser(name, help=help_)
        _common(sub)
        sub.add_argument("--which", choices=["Q", "Qr", "Qrect"], default=argparse.SUPPRESS)

    sim = subs.add_parser("simulate", help="full-cycle error moments")
    _common(sim)
    sim.add_argument("--initial", default=argparse.SUPPRESS,
                     help="initial disc content as a digit string (default all zeros)")
    sim.add_argument("--source", choices=["mc", "analytic", "asymptotic"],
                     default=argparse.SUPPRESS)
    sim.add_argument("--frame", choices=["lab", "disc"], default=argparse.SUPPRESS)

    sweep = subs.add_parser("sweep", help="Boltzmann beta sweep (CSV or JSON)")
    _common(sweep)
    sweep.add_argument("--initial", default=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        with open(path) as fh:
            from_file = json.load(fh)
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(from_file)
    for key in DEFAULTS:
        if hasattr(args, key):
            config[key] = getattr(args, key)
    config["command"] = args.command
    if config["format"] is None:
        config["format"] = "csv" if args.command == "sweep" else "json"
    return config


def _parse_floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def parse_beta_grid(text: str):
    parts = str(text).split(":")
    if len(parts) not in (3, 4):
        raise ValueError("beta grid must be start:stop:points[:log|linear]")
    spacing = parts[3] if len(parts) == 4 else "log"
    start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    if not 0 < start < stop:
        raise ValueError("beta grid must be strictly increasing and positive")
    return noisesim.beta_grid(start, stop, points, spacing)


def _initial(cfg) -> tuple:
    if cfg["initial"] is None:
        return (0,) * cfg["r"]
    word = tuple(int(ch) for ch in str(cfg["initial"]))
    if len(word) != cfg["r"]:
        raise ValueError(f"--initial needs {cfg['r']} digits")
    return word


def _params(cfg) -> HierParams:
    if cfg["coeffs"] is not None and cfg["boltzmann"] is not None:
        raise ValueError("give either --coeffs or --boltzmann, not both")
    if cfg["boltzmann"] is not None:
        model = noisesim.boltzmann_model(cfg["p"], cfg["r"], float(cfg["boltzmann"]))
        return model.params
    if cfg["coeffs"] is None:
        raise ValueError("one of --coeffs or --boltzmann is required")
    return HierParams(cfg["p"], cfg["r"], _parse_floats(cfg["coeffs"]), cfg["form"])


def _model(cfg) -> noisesim.NoiseModel:
    if cfg["boltzmann"] is not None and cfg["coeffs"] is None:
        return noisesim.boltzmann_model(cfg["p"], cfg["r"], float(cfg["boltzmann"]))
    params = _params(cfg)
    return noisesim.NoiseModel(params.p, params.r, tuple(params.a))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("APP_THREADS", "1")))
    except ValueError:
        return 1


def _emit(text: str, cfg):
    if not text.endswith("\n"):
        text += "\n"
    if cfg["output"]:
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: dict) -> int:
    command = cfg["command"]
    if command == "spectrum":
        params = _params(cfg)
        lines = spectra.spectrum(params, cfg["which"])
        _emit(spectra.spectrum_to_json(params, lines, indent=2), cfg)
        return 0

    if command == "verify":
        params = _params(cfg)
        report = oracle.verify_spectrum(params, cfg["which"], dense_cap=cfg["dense_cap"])
        _emit(report.to_json(indent=2), cfg)
        return 0 if report.passed else 1

    if command == "simulate":
        model = _model(cfg)
        if cfg["source"] == "analytic":
            rep = noisesim.analytic_moments(model)
        elif cfg["source"] == "asymptotic":
            rep = noisesim.asymptotic_moments(model)
        else:
            rep = noisesim.simulate_full_cycle(model, _initial(cfg), cfg["seed"], cfg["trials"],
                                               frame=cfg["frame"], workers=_workers())
        _emit(json.dumps(rep.to_dict(), indent=2), cfg)
        return 0

    if command == "sweep":
        if cfg["boltzmann"] is None:
            raise ValueError("sweep needs --boltzmann start:stop:points[:spacing]")
        betas = parse_beta_grid(cfg["boltzmann"])
        p, r = cfg["p"], cfg["r"]
        exact = p == 2 and p ** r <= cfg["dense_cap"]
        rows = noisesim.sweep_rows(p, r, betas, cfg["trials"], cfg["seed"], _initial(cfg),
                                   exact=exact, workers=_workers())
        text = noisesim.rows_to_csv(rows) if cfg["format"] == "csv" else noisesim.rows_to_json(rows)
        _emit(text, cfg)
        return 0

    raise ValueError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    if args.show_config:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return 0
    try:
        return run(cfg)
    except UltraspecError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
