"""Command-line front end: ``slitdec <command> ...``.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .constants import HBAR
from .decoherence import (
    DEFAULT_BRACKET,
    Axis,
    GridSpec,
    ModelInconsistencyError,
    tdec_surface,
    visibility_surface,
)
from .montecarlo import MIN_STATISTICAL_SAMPLES, McConfig, compare_to_closed_form, estimate_pattern
from .numerics import QuadratureError
from .spectrum import (
    DEFAULT_RTOL,
    EmissionSpectrum,
    MoleculeParams,
    emission_rate_density,
    get_preset,
    thermal_frequency,
    total_rate_quadrature,
    total_rate_series,
)
from .visibility import (
    DEFAULT_SLIT_WIDTH,
    ExperimentConfig,
    action_exchange_check,
    far_field_check,
    fringe_pattern,
    fringe_spacing,
    visibility_closed_form,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

DEFAULT_MC_POINTS = (
    (1500.0, 1e-6, 5e-3),
    (1500.0, 1e-6, 20e-3),
    (1800.0, 1e-6, 3e-3),
    (1800.0, 3e-7, 10e-3),
    (2000.0, 1e-6, 2e-3),
    (2000.0, 1e-6, 5e-3),
    (2000.0, 3e-7, 5e-3),
    (2000.0, 1e-7, 10e-3),
    (2500.0, 1e-7, 3e-3),
    (2500.0, 3e-7, 1e-3),
    (3000.0, 1e-7, 1e-3),
    (3000.0, 5e-8, 2e-3),
)

_UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9},
    "temperature": {"K": 1.0, "mK": 1e-3},
}
_AXIS_KIND = {"T": "temperature", "d": "length", "t": "time"}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\d\s.+-][^\s]*)?\s*$")


class UsageError(ValueError):
    pass


def parse_quantity(text: str, kind: str) -> float:
    """'1um' -> 1e-6, '10ms' -> 0.01, '2500K' -> 2500.0; bare numbers are SI."""
    m = _NUMBER.match(str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a {kind}")
    value, unit = float(m.group(1)), m.group(2)
    if unit is None:
        return value
    try:
        return value * _UNITS[kind][unit]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown {kind} unit {unit!r} in {text!r}") from None


def _length(s):
    return parse_quantity(s, "length")


def _time(s):
    return parse_quantity(s, "time")


def _temperature(s):
    return parse_quantity(s, "temperature")


def parse_axis(text: str) -> Axis:
    """``name:min:max:count[:log]``."""
    parts = text.split(":")
    if len(parts) not in (4, 5) or parts[0] not in _AXIS_KIND:
        raise argparse.ArgumentTypeError(f"bad grid axis {text!r}; expected name:min:max:count[:log]")
    if len(parts) == 5 and parts[4] not in ("log", "linear"):
        raise argparse.ArgumentTypeError(f"bad spacing {parts[4]!r} in {text!r}")
    kind = _AXIS_KIND[parts[0]]
    try:
        return Axis(
            parts[0],
            parse_quantity(parts[1], kind),
            parse_quantity(parts[2], kind),
            int(parts[3]),
            parts[4] if len(parts) == 5 else "linear",
        )
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_point(text: str) -> tuple[float, float, float]:
    """``T,d,t`` triple for mc-verify."""
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"bad point {text!r}; expected T,d,t")
    return _temperature(parts[0]), _length(parts[1]), _time(parts[2])


# -- config files and manifests ------------------------------------------------


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files(__package__).joinpath("presets").iterdir() if p.name.endswith(".cfg"))


def read_config(ref: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``ref`` is a path or a shipped preset name."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        res = resources.files(__package__).joinpath("presets", f"{ref}.cfg")
        if not res.is_file():
            raise UsageError(f"config {ref!r} is neither a file nor a preset ({', '.join(preset_names())})")
        text = res.read_text(encoding="utf-8")
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{ref}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def merge_config(parser: argparse.ArgumentParser, args: argparse.Namespace, cfg: dict[str, str]) -> None:
    """Fill options not given on the command line from the config; flags win."""
    actions = {a.dest: a for a in parser._actions}
    for key, raw in cfg.items():
        if key == "command":
            if raw != args.command:
                raise UsageError(f"config is for command {raw!r}, not {args.command!r}")
            continue
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) != action.default:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            conv = action.type or str
            try:
                if action.nargs in ("+", "*") or isinstance(action.nargs, int):
                    value = [conv(tok) for tok in raw.split()]
                else:
                    value = conv(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        setattr(args, key, value)


def _jsonable(value):
    if isinstance(value, Axis):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def write_manifest(output: Path, args: argparse.Namespace) -> Path:
    params = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    manifest = {
        "command": args.command,
        "params": params,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def args_from_manifest(path: Path) -> argparse.Namespace:
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    params = dict(manifest["params"])
    for key in ("grid",):
        if params.get(key):
            params[key] = [parse_axis(a) for a in params[key]]
    if params.get("points"):
        if isinstance(params["points"], list) and params["points"] and isinstance(params["points"][0], list):
            params["points"] = [tuple(p) for p in params["points"]]
    if params.get("bracket"):
        params["bracket"] = tuple(params["bracket"])
    ns = argparse.Namespace(**params)
    ns.command = manifest["command"]
    ns.config = None
    return ns


# -- output helpers -----------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _warn(msg: str) -> None:
    prefix = "warning:"
    if sys.stderr.isatty() and "NO_COLOR" not in os.environ:
        prefix = "\033[33mwarning:\033[0m"
    print(f"{prefix} {msg}", file=sys.stderr)


def resolve_molecule(args) -> MoleculeParams:
    if args.molecule:
        base = get_preset(args.molecule)
    else:
        base = None
    fields = {
        "n_modes": args.n_modes,
        "ell": args.ell,
        "a_ell": args.a_ell,
        "mass": args.mass,
    }
    if base is None:
        missing = [k for k, v in fields.items() if v is None]
        if missing:
            raise UsageError(
                "give --molecule or all of --n-modes --ell --a-ell --mass (missing: "
                + ", ".join("--" + k.replace("_", "-") for k in missing) + ")"
            )
        return MoleculeParams("custom", **fields)
    overrides = {k: v for k, v in fields.items() if v is not None}
    if not overrides:
        return base
    merged = {"n_modes": base.n_modes, "ell": base.ell, "a_ell": base.a_ell, "mass": base.mass, **overrides}
    return MoleculeParams(base.name + "*", **merged)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required " + ", ".join(f"--{n.replace('_', '-')}" for n in missing))


def _experiment(args) -> ExperimentConfig:
    _require(args, "T", "d", "t")
    return ExperimentConfig(
        resolve_molecule(args), args.T, args.d, args.t, HBAR / (2.0 * args.slit_width)
    )


# -- commands -------------------------------------------------------------------


def cmd_visibility(args) -> int:
    cfg = _experiment(args)
    vis = visibility_closed_form(cfg, args.tol)
    ff = far_field_check(cfg)
    action = action_exchange_check(cfg, args.tol)
    print(
        f"V={vis.visibility:.6g} phi={vis.phase:.6g} Lambda={vis.rate:.6g}/s G={vis.g_factor:.6g}/s "
        f"zeta={vis.zeta:.6g} far_field={ff:.4g} action_ratio={action.action_ratio:.4g} "
        f"thermal_ratio={action.thermal_ratio:.4g}"
    )
    if ff < 10:
        _warn(f"far-field ratio t/(m d^2/hbar) = {ff:.3g} < 10")
    if action.action_ratio > 1:
        _warn(f"exchanged action {action.action_ratio:.3g} hbar exceeds hbar")
    if args.json:
        report = {
            "visibility": vis.visibility,
            "phase": vis.phase,
            "lambda": vis.rate,
            "g_factor": vis.g_factor,
            "zeta": vis.zeta,
            "far_field_ratio": _jsonable(ff),
            "dp_total": action.dp_total,
            "action_ratio": action.action_ratio,
            "thermal_ratio": action.thermal_ratio,
        }
        out = Path(args.json)
        out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        write_manifest(out, args)
    return EXIT_OK


def cmd_surface(args) -> int:
    _require(args, "quantity", "grid", "out")
    if len(args.grid) != 2:
        raise UsageError("--grid takes exactly two axes")
    a1, a2 = args.grid
    fixed = {k: getattr(args, k) for k in ("T", "d", "t") if k not in (a1.name, a2.name)}
    if args.quantity == "visibility":
        missing = [k for k, v in fixed.items() if v is None]
        if missing:
            raise UsageError("missing fixed value for " + ", ".join(f"--{k}" for k in missing))
    try:
        grid = GridSpec(a1, a2, {k: v for k, v in fixed.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mol = resolve_molecule(args)
    if args.quantity == "visibility":
        surf = visibility_surface(mol, grid, args.tol, args.threads)
    else:
        if {a1.name, a2.name} != {"d", "t"}:
            raise UsageError("--quantity tdec needs d and t grid axes")
        surf = tdec_surface(mol, grid, tuple(args.bracket), args.tol_T, args.threshold, args.tol, args.threads)
    if surf.failures and not args.allow_partial:
        print(f"error: {surf.failures} grid nodes failed (use --allow-partial to keep them as nan)", file=sys.stderr)
        return EXIT_NUMERIC
    out = Path(args.out)
    write_csv(out, [a1.name, a2.name, "value"], surf.rows())
    write_manifest(out, args)
    defined = int(np.isfinite(surf.values).sum())
    print(f"wrote {surf.values.size} nodes ({defined} defined) to {out}")
    return EXIT_OK


def cmd_mc_verify(args) -> int:
    if args.n < MIN_STATISTICAL_SAMPLES:
        raise UsageError(f"--n must be at least {MIN_STATISTICAL_SAMPLES} for a statistical check")
    mol = resolve_molecule(args)
    points = args.points or list(DEFAULT_MC_POINTS)
    mc = McConfig(args.n, args.seed, args.batch_size)
    rows = []
    for T, d, t in points:
        cmp = compare_to_closed_form(ExperimentConfig(mol, T, d, t), mc, args.threads, args.tol)
        rows.append(
            {
                "T": T, "d": d, "t": t,
                "v_mc": cmp.v_mc, "v_exact": cmp.v_exact, "std_error": cmp.std_error,
                "pull": _jsonable(cmp.pull), "f_imag": cmp.f_imag, "std_error_imag": cmp.std_error_imag,
            }
        )
    print(f"{'T[K]':>8} {'d[m]':>10} {'t[s]':>10} {'V_mc':>10} {'V_exact':>10} {'SE':>9} {'pull':>7}")
    for r in rows:
        pull = float(r["pull"])
        print(
            f"{r['T']:8.1f} {r['d']:10.3g} {r['t']:10.3g} {r['v_mc']:10.6f} {r['v_exact']:10.6f} "
            f"{r['std_error']:9.2e} {pull:7.2f}"
        )
    worst = max(abs(float(r["pull"])) for r in rows)
    ok = worst <= 4.0
    print(f"max |pull| = {worst:.2f} -> {'PASS' if ok else 'FAIL'}")
    if args.json:
        doc = {
            "molecule": mol.name,
            "n_samples": args.n,
            "seed": args.seed,
            "batch_size": mc.batch_size,
            "points": rows,
            "max_abs_pull": worst,
            "pass": ok,
        }
        out = Path(args.json)
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        write_manifest(out, args)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_spectrum(args) -> int:
    _require(args, "T")
    mol = resolve_molecule(args)
    T = args.T
    if T <= 0:
        raise UsageError("--T must be positive")
    lam_q = total_rate_quadrature(mol, T, args.tol)
    series = total_rate_series(mol, T)
    rel = abs(series.value - lam_q) / lam_q if lam_q > 0 else 0.0
    print(
        f"Lambda_quadrature={lam_q:.10g}/s Lambda_series={series.value:.10g}/s rel_diff={rel:.3e} "
        f"series_terms={series.last_index + 1} photons_in_{args.window:g}s={lam_q * args.window:.4g}"
    )
    if args.out:
        spec = EmissionSpectrum(mol, T, lam_q)
        omega_max = args.omega_max if args.omega_max else 40.0 * thermal_frequency(T)
        omega = np.linspace(0.0, omega_max, args.points)
        write_csv(Path(args.out), ["omega", "rate_density"], zip(omega, emission_rate_density(spec, omega)))
        write_manifest(Path(args.out), args)
    return EXIT_OK


def cmd_intensity(args) -> int:
    cfg = _experiment(args)
    if cfg.flight_time <= 0:
        raise UsageError("--t must be positive for a screen pattern")
    spacing = fringe_spacing(cfg) if cfg.slit_separation > 0 else None
    x_min = args.x_min if args.x_min is not None else (-3 * spacing if spacing else None)
    x_max = args.x_max if args.x_max is not None else (3 * spacing if spacing else None)
    if x_min is None or x_max is None or not x_min < x_max:
        raise UsageError("give --x-min < --x-max")
    x = np.linspace(x_min, x_max, args.points)
    header = ["x", "I_exact", "I0"]
    columns = []
    vis = visibility_closed_form(cfg, args.tol)
    exact = fringe_pattern(cfg, vis, x)
    columns += [exact.intensity, exact.envelope]
    if args.mode in ("mc", "both"):
        if args.n < MIN_STATISTICAL_SAMPLES:
            raise UsageError(f"--n must be at least {MIN_STATISTICAL_SAMPLES}")
        emp = estimate_pattern(cfg, McConfig(args.n, args.seed, args.batch_size), x, args.threads, args.tol)
        header += ["I_mc", "I_mc_se"]
        columns += [emp.intensity, emp.std_error]
    if args.mode == "mc":
        header = [header[0]] + header[2:]
        columns = columns[1:]
    out = Path(args.out)
    write_csv(out, header, zip(x, *columns))
    write_manifest(out, args)
    print(f"wrote {len(x)} screen points to {out} (V={vis.visibility:.6g})")
    return EXIT_OK


def cmd_replay(args) -> int:
    ns = args_from_manifest(Path(args.manifest))
    if args.out:
        key = "json" if ns.command in ("visibility", "mc-verify") else "out"
        setattr(ns, key, args.out)
    return _run(ns)


COMMANDS = {
    "visibility": cmd_visibility,
    "surface": cmd_surface,
    "mc-verify": cmd_mc_verify,
    "spectrum": cmd_spectrum,
    "intensity": cmd_intensity,
    "replay": cmd_replay,
}


# -- parser -------------------------------------------------------------------


def _add_molecule(p):
    g = p.add_argument_group("molecule")
    g.add_argument("--molecule", help="preset name (C60, C70)")
    g.add_argument("--n-modes", type=float, help="number of vibrational modes N")
    g.add_argument("--ell", type=int, help="cross-section exponent")
    g.add_argument("--a-ell", type=float, help="cross-section coefficient, m^2 s^ell")
    g.add_argument("--mass", type=float, help="mass in kg")


def _add_experiment(p, need=("T", "d", "t")):
    if "T" in need:
        p.add_argument("--T", type=_temperature, metavar="KELVIN", help="internal temperature (K; '2500K')")
    if "d" in need:
        p.add_argument("--d", type=_length, metavar="METRES", help="slit separation (m; '1um')")
    if "t" in need:
        p.add_argument("--t", type=_time, metavar="SECONDS", help="time of flight (s; '10ms')")
    p.add_argument("--tol", type=float, default=DEFAULT_RTOL, help="relative quadrature tolerance")


def _add_mc(p, default_n):
    p.add_argument("--n", type=int, default=default_n, help="Monte Carlo samples")
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--batch-size", type=int, default=10_000)
    p.add_argument("--threads", type=int, default=1, help="worker cap; output does not depend on it")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="slitdec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value file or preset name; flags win")
        subs[name] = p
        return p

    p = add("visibility", "closed-form visibility and diagnostics for one configuration")
    _add_molecule(p)
    _add_experiment(p)
    p.add_argument("--slit-width", type=_length, default=DEFAULT_SLIT_WIDTH)
    p.add_argument("--json", help="also write a JSON report here")

    p = add("surface", "visibility or decoherence-temperature surface as CSV")
    _add_molecule(p)
    _add_experiment(p)
    p.add_argument("--quantity", choices=("visibility", "tdec"))
    p.add_argument("--grid", type=parse_axis, nargs="+", metavar="AXIS", help="two axes name:min:max:count[:log]")
    p.add_argument("--out", help="CSV path")
    p.add_argument("--allow-partial", action="store_true", help="write nan for failed nodes")
    p.add_argument("--bracket", type=_temperature, nargs=2, default=list(DEFAULT_BRACKET), metavar=("T_LO", "T_HI"))
    p.add_argument("--tol-T", dest="tol_T", type=float, default=1e-3, help="root tolerance in K")
    p.add_argument("--threshold", type=float, default=0.5, help="visibility level defining T_dec")
    p.add_argument("--threads", type=int, default=1)

    p = add("mc-verify", "Monte Carlo vs closed-form visibility table")
    _add_molecule(p)
    p.add_argument("--tol", type=float, default=DEFAULT_RTOL)
    _add_mc(p, 100_000)
    p.add_argument("--point", dest="points", type=parse_point, action="append", metavar="T,d,t")
    p.add_argument("--json", help="write the comparison as JSON here")
    p.set_defaults(molecule="C70")

    p = add("spectrum", "emission spectrum CSV and total rate by quadrature and series")
    _add_molecule(p)
    _add_experiment(p, need=("T",))
    p.add_argument("--omega-max", type=float, help="rad/s; default 40 k_B T / hbar")
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--window", type=_time, default=2e-3, help="report photons emitted in this time")
    p.add_argument("--out", help="CSV path")

    p = add("intensity", "screen intensity, closed form and/or Monte Carlo")
    _add_molecule(p)
    _add_experiment(p)
    p.add_argument("--slit-width", type=_length, default=DEFAULT_SLIT_WIDTH)
    p.add_argument("--x-min", type=_length)
    p.add_argument("--x-max", type=_length)
    p.add_argument("--points", type=int, default=301)
    p.add_argument("--mode", choices=("exact", "mc", "both"), default="exact")
    _add_mc(p, 20_000)
    p.add_argument("--out", required=False, help="CSV path")

    p = add("replay", "re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write to this path instead of the recorded one")
    return parser, subs


def _run(args) -> int:
    if args.command == "intensity" and not getattr(args, "out", None):
        raise UsageError("missing required --out")
    return COMMANDS[args.command](args)


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    sub = subs[args.command]
    try:
        if getattr(args, "config", None):
            merge_config(sub, args, read_config(args.config))
        return _run(args)
    except UsageError as exc:
        sub.print_usage(sys.stderr)
        print(f"{sub.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ModelInconsistencyError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        sub.print_usage(sys.stderr)
        print(f"{sub.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
