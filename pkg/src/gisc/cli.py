"""Command-line front end.

One INI file describes one system (sections ``[base]``, ``[vsc]``,
``[grid]``); every subcommand writes its results into ``--out`` together
with ``manifest.json``.  Data files are byte-identical across re-runs of
the same command and configuration.

Exit status: 0 success, 1 analysis error, 2 usage or configuration error.
In both error cases a JSON object ``{"error": ..., "kind": ...}`` is
printed to stderr and, when possible, written to ``<out>/error.json``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .criterion import (
    MarginalError,
    StationaryFrequencyPair,
    assess_system,
    build_system,
    closed_loop_roots,
    is_rhp,
)
from .grid import CALIBRATED_C_F_PU, GridParams
from .sim import Event, Scenario, assemble_model, dominant_frequency, eigenvalues, linearize_numeric, simulate
from .vsc import VscParams

COMMANDS = ("nyquist", "roots", "verify", "sweep-pll", "sweep-line", "simulate", "eig")


class ConfigError(ValueError):
    def __init__(self, msg: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{msg} ({', '.join(where)})" if where else msg)
        self.key = key
        self.line = line


class AnalysisFailure(RuntimeError):
    """An analysis ran to completion but its checks did not pass."""

    def __init__(self, msg: str, files):
        super().__init__(msg)
        self.files = list(files)


@dataclass(frozen=True)
class BaseParams:
    f0_hz: float = 50.0
    s_base_va: float = 500e3
    u_base_v: float = 690.0


@dataclass(frozen=True)
class VscSection:
    lf_pu: float = 0.2
    kp_i: float = 0.6
    ki_i: float = 15.0
    kp_pll: float = 2.5
    ki_pll: float = 3020.0
    id_ref: float = 1.0
    iq_ref: float = 0.0


@dataclass(frozen=True)
class GridSection:
    l_line_pu: float = 0.26
    c_f_pu: float = CALIBRATED_C_F_PU
    u_grid_pu: float = 1.0


# (predicate, description) per constrained key
_CHECKS = {
    ("base", "f0_hz"): (lambda v: v > 0, "> 0"),
    ("base", "s_base_va"): (lambda v: v > 0, "> 0"),
    ("base", "u_base_v"): (lambda v: v > 0, "> 0"),
    ("vsc", "lf_pu"): (lambda v: v > 0, "> 0"),
    ("vsc", "kp_i"): (lambda v: v >= 0, ">= 0"),
    ("vsc", "ki_i"): (lambda v: v >= 0, ">= 0"),
    ("vsc", "kp_pll"): (lambda v: v >= 0, ">= 0"),
    ("vsc", "ki_pll"): (lambda v: v >= 0, ">= 0"),
    ("grid", "l_line_pu"): (lambda v: v > 0, "> 0"),
    ("grid", "c_f_pu"): (lambda v: v >= 0, ">= 0"),
    ("grid", "u_grid_pu"): (lambda v: v > 0, "> 0"),
}

_SECTIONS = {"base": BaseParams, "vsc": VscSection, "grid": GridSection}


@dataclass(frozen=True)
class Config:
    base: BaseParams = field(default_factory=BaseParams)
    vsc: VscSection = field(default_factory=VscSection)
    grid: GridSection = field(default_factory=GridSection)

    def to_dict(self) -> dict:
        return {"base": asdict(self.base), "vsc": asdict(self.vsc), "grid": asdict(self.grid)}

    def sha256(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def vsc_params(self) -> VscParams:
        return VscParams(f0_hz=self.base.f0_hz, **asdict(self.vsc))

    def grid_params(self) -> GridParams:
        return GridParams(f0_hz=self.base.f0_hz, **asdict(self.grid))


def _line_index(text: str):
    """Map (section, key) and section names to 1-based line numbers."""
    where: dict = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]*)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault(section, n)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), n)
    return where


def parse_config(text: str) -> Config:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", exc.option, exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", None, exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", None, exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc.message}") from None

    lines = _line_index(text)
    parts = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", None, lines.get(name))
    for name, cls in _SECTIONS.items():
        values = {}
        known = {f.name for f in fields(cls)}
        if parser.has_section(name):
            for key, raw in parser.items(name):
                line = lines.get((name, key))
                if key not in known:
                    raise ConfigError(f"unknown key in [{name}]", key, line)
                try:
                    val = float(raw)
                except ValueError:
                    raise ConfigError(f"expected a number, got {raw!r}", key, line) from None
                if not math.isfinite(val):
                    raise ConfigError(f"value must be finite, got {raw!r}", key, line)
                check = _CHECKS.get((name, key))
                if check and not check[0](val):
                    raise ConfigError(f"value {val!r} violates {key} {check[1]}", key, line)
                values[key] = val
        parts[name] = cls(**values)
    cfg = Config(**parts)
    # cross-field condition: the operating point must exist
    if cfg.grid.l_line_pu * abs(cfg.vsc.id_ref) >= cfg.grid.u_grid_pu:
        raise ConfigError("l_line_pu * id_ref must be below u_grid_pu for a steady state to exist",
                          "l_line_pu", lines.get(("grid", "l_line_pu")))
    return cfg


def load_config(path) -> Config:
    """Read an INI file; missing keys take the built-in defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file: {exc.strerror}") from None
    return parse_config(text)


# ---------------------------------------------------------------- output helpers


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _parse_values(args) -> list[float]:
    if args.values and args.range:
        raise ConfigError("give either --values or --range, not both")
    if args.values:
        try:
            return [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if args.range:
        try:
            start, stop, num = args.range.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
        except ValueError:
            raise ConfigError(f"--range must be START:STOP:NUM, got {args.range!r}") from None
    return []


# ------------------------------------------------------------------ commands


def cmd_nyquist(cfg: Config, args, out: Path) -> list[str]:
    sys_ = build_system(cfg.vsc_params(), cfg.grid_params())
    rep = assess_system(sys_)
    curve = rep.samples
    _write_csv(out / "nyquist.csv", ("omega_rad_s", "re", "im"),
               zip(curve.omega, curve.values.real, curve.values.imag))
    verdict = rep.to_dict()
    verdict["l_line_pu"] = cfg.grid.l_line_pu
    verdict["c_f_pu"] = cfg.grid.c_f_pu
    _write_json(out / "verdict.json", verdict)
    files = ["nyquist.csv", "verdict.json"]
    if not args.no_plots:
        from .plotting import plot_nyquist

        plot_nyquist(curve.values, out / "nyquist.svg",
                     title=f"L_line = {cfg.grid.l_line_pu:g} pu: {rep.verdict}")
        files.append("nyquist.svg")
    print(f"verdict={rep.verdict} winding={rep.winding_number} margin={rep.margin:.6g} rhp={rep.rhp_pole_count}")
    return files


def cmd_roots(cfg: Config, args, out: Path) -> list[str]:
    sys_ = build_system(cfg.vsc_params(), cfg.grid_params())
    roots, pairs = closed_loop_roots(sys_.loop_gain, cfg.base.f0_hz)
    rows = []
    for z in roots:
        p = StationaryFrequencyPair.from_mode(z.imag, cfg.base.f0_hz)
        rows.append((z.real, z.imag, z.imag / (2 * math.pi), p.f_sub, p.f_super))
    _write_csv(out / "roots.csv", ("re", "im", "f_sync_hz", "f_sub_hz", "f_super_hz"), rows)
    summary = {
        "rhp_count": sum(1 for z in roots if is_rhp(z)),
        "rhp_pairs": [{"f_sync_hz": p.f_sync, "f_sub_hz": p.f_sub, "f_super_hz": p.f_super} for p in pairs],
        "degree": len(roots),
    }
    _write_json(out / "roots.json", summary)
    for p in pairs:
        print(f"RHP mode {p.f_sync:.4f} Hz -> {p.f_sub:.4f} / {p.f_super:.4f} Hz")
    print(f"rhp_count={summary['rhp_count']}")
    return ["roots.csv", "roots.json"]


def cmd_verify(cfg: Config, args, out: Path) -> list[str]:
    from .oracles import run_all

    res = run_all(cfg.vsc_params(), cfg.grid_params())
    _write_json(out / "verify.json", res)
    for name, chk in res["checks"].items():
        print(f"{'PASS' if chk['passed'] else 'FAIL'} {name}: residual={chk['residual']:.3e} threshold={chk['threshold']:.1e}")
    if not res["passed"]:
        raise AnalysisFailure("one or more oracle checks failed", ["verify.json"])
    return ["verify.json"]


def _sweep(cfg: Config, args, out: Path, param: str) -> list[str]:
    values = _parse_values(args)
    if not values:
        raise ConfigError("a sweep needs --values or --range")
    vsc, grid = cfg.vsc_params(), cfg.grid_params()

    def point(v):
        if param in VscSection.__dataclass_fields__:
            return assess_system(build_system(replace(vsc, **{param: v}), grid))
        return assess_system(build_system(vsc, replace(grid, **{param: v})))

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(point, values))
    rows = [(v, r.margin, r.signed_margin, r.verdict, str(r.winding_number), str(r.rhp_pole_count))
            for v, r in zip(values, reports)]
    _write_csv(out / "sweep.csv", (param, "margin", "signed_margin", "verdict", "winding_number", "rhp_pole_count"), rows)
    files = ["sweep.csv"]
    if not args.no_plots:
        from .plotting import plot_sweep

        plot_sweep(param, values, [r.signed_margin for r in reports], [r.verdict for r in reports], out / "sweep.svg")
        files.append("sweep.svg")
    for v, r in zip(values, reports):
        print(f"{param}={v:g} verdict={r.verdict} margin={r.margin:.6g}")
    return files


def cmd_sweep_pll(cfg: Config, args, out: Path) -> list[str]:
    if args.param not in ("kp_pll", "ki_pll"):
        raise ConfigError(f"--param must be kp_pll or ki_pll, got {args.param!r}")
    return _sweep(cfg, args, out, args.param)


def cmd_sweep_line(cfg: Config, args, out: Path) -> list[str]:
    return _sweep(cfg, args, out, "l_line_pu")


def _dominant_eigen(vsc: VscParams, grid: GridParams) -> complex:
    eig = eigenvalues(linearize_numeric(assemble_model(vsc, grid)))
    osc = [z for z in eig if z.imag > 0]
    return max(osc, key=lambda z: z.real) if osc else complex(eig[0])


def cmd_simulate(cfg: Config, args, out: Path) -> list[str]:
    vsc, grid = cfg.vsc_params(), cfg.grid_params()
    if args.t_end <= 0:
        raise ConfigError("--t-end must be positive")
    if not 0 < args.dt <= 1e-4:
        raise ConfigError("--dt must be in (0, 1e-4]")
    if args.decimate < 1:
        raise ConfigError("--decimate must be >= 1")
    events = ()
    final_grid = grid
    if args.step_l_line is not None:
        if not 0 <= args.event_time < args.t_end:
            raise ConfigError("--event-time must lie inside [0, t_end)")
        events = (Event(args.event_time, "l_line_pu", args.step_l_line),)
        final_grid = replace(grid, l_line_pu=args.step_l_line)
    model = assemble_model(vsc, grid)
    trace = simulate(model, Scenario(t_end=args.t_end, dt=args.dt, events=events))
    trace.write_csv(out / "trace.csv", every=args.decimate)

    t_start = (args.event_time if events else 0.0) + 1.0
    window = (min(t_start, trace.time[-1]), float(trace.time[-1]))
    lam = _dominant_eigen(vsc, final_grid)
    report = {
        "diverged": trace.diverged,
        "divergence_time_s": trace.divergence_time,
        "events": [{"time_s": t, "what": w} for t, w in trace.events],
        "window_s": list(window),
        "signal": "u_mag",
        "eigen_prediction": {
            "re": lam.real,
            "im": lam.imag,
            "f_sync_hz": abs(lam.imag) / (2 * math.pi),
            "f_sub_hz": StationaryFrequencyPair.from_mode(lam.imag, cfg.base.f0_hz).f_sub,
            "f_super_hz": StationaryFrequencyPair.from_mode(lam.imag, cfg.base.f0_hz).f_super,
        },
    }
    try:
        f, amp, growth = dominant_frequency(trace, "u_mag", window=window)
        report.update({"f_hz": f, "amplitude": amp, "growth_rate": growth,
                       "f_error_hz": f - abs(lam.imag) / (2 * math.pi)})
    except ValueError as exc:
        report.update({"f_hz": None, "amplitude": None, "growth_rate": None, "note": str(exc)})
    _write_json(out / "frequency.json", report)
    files = ["trace.csv", "frequency.json"]
    if not args.no_plots:
        from .plotting import plot_trace

        plot_trace(trace.time, trace.signals["u_mag"], out / "trace.svg", [e.time for e in events])
        files.append("trace.svg")
    if report["f_hz"] is not None:
        print(f"dominant {report['f_hz']:.4f} Hz growth {report['growth_rate']:.4f} 1/s "
              f"(eigenvalue {lam.real:.4f} +/- {abs(lam.imag):.4f}j)")
    return files


def cmd_eig(cfg: Config, args, out: Path) -> list[str]:
    model = assemble_model(cfg.vsc_params(), cfg.grid_params())
    eig = eigenvalues(linearize_numeric(model))
    _write_csv(out / "eigenvalues.csv", ("re", "im", "f_hz"),
               [(z.real, z.imag, z.imag / (2 * math.pi)) for z in eig])
    rhp = sum(1 for z in eig if is_rhp(z))
    _write_json(out / "eig.json", {"n_states": model.n_states, "state_names": list(model.state_names),
                                  "rhp_count": rhp})
    print(f"n_states={model.n_states} rhp_count={rhp}")
    return ["eigenvalues.csv", "eig.json"]


_HANDLERS = {
    "nyquist": cmd_nyquist,
    "roots": cmd_roots,
    "verify": cmd_verify,
    "sweep-pll": cmd_sweep_pll,
    "sweep-line": cmd_sweep_line,
    "simulate": cmd_simulate,
    "eig": cmd_eig,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [base], [vsc], [grid] sections (default: built-in values)")
    common.add_argument("--out", default="out", help="output directory (created if missing)")
    common.add_argument("--no-plots", action="store_true", help="skip SVG rendering")

    p = argparse.ArgumentParser(prog="gisc", description="Generalized-impedance stability analysis of a grid-tied VSC.")
    p.add_argument("--version", action="version", version=f"gisc {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("nyquist", parents=[common], help="Nyquist curve and stability verdict")
    sub.add_parser("roots", parents=[common], help="closed-loop roots of 1 + L")
    sub.add_parser("verify", parents=[common], help="run the numeric cross-checks")
    sub.add_parser("eig", parents=[common], help="eigenvalues of the linearized full model")
    for name, hlp in (("sweep-pll", "margin over a PLL gain"), ("sweep-line", "margin over the line reactance")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--values", help="comma-separated parameter values")
        sp.add_argument("--range", help="START:STOP:NUM, evenly spaced")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads")
        if name == "sweep-pll":
            sp.add_argument("--param", default="kp_pll", choices=("kp_pll", "ki_pll"))
    sp = sub.add_parser("simulate", parents=[common], help="nonlinear time-domain run")
    sp.add_argument("--t-end", type=float, default=10.0, help="simulated time in s (default 10)")
    sp.add_argument("--dt", type=float, default=2e-5, help="RK4 step in s (default 2e-5)")
    sp.add_argument("--step-l-line", type=float, default=None, help="new l_line_pu applied at --event-time")
    sp.add_argument("--event-time", type=float, default=2.0, help="event time in s (default 2)")
    sp.add_argument("--decimate", type=int, default=10, help="write every N-th sample to trace.csv")
    return p


def _error(kind: str, exc: Exception, out: Path | None) -> None:
    payload = {"error": str(exc), "kind": kind, "type": type(exc).__name__}
    if isinstance(exc, ConfigError):
        payload["key"] = exc.key
        payload["line"] = exc.line
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config) if args.config else Config()
    except ConfigError as exc:
        _error("config", exc, out)
        return 2
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _error("output", exc, None)
        return 1
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config", "out")}
    manifest = {
        "tool": "gisc",
        "version": __version__,
        "command": args.command,
        "flags": flags,
        "config_sha256": cfg.sha256(),
        "config": cfg.to_dict(),
    }
    status = 0
    try:
        files = _HANDLERS[args.command](cfg, args, out)
    except ConfigError as exc:
        _error("usage", exc, out)
        return 2
    except AnalysisFailure as exc:
        _error("analysis", exc, out)
        files, status = exc.files, 1
    except (ValueError, ArithmeticError, MarginalError) as exc:
        _error("analysis", exc, out)
        return 1
    except OSError as exc:
        _error("output", exc, out)
        return 1
    manifest["outputs"] = sorted(files)
    _write_json(out / "manifest.json", manifest)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
