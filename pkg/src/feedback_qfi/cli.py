"""Command-line front end.

    feedback-qfi qfi         --family direction-field --B 1 --T 1 --x 1
    feedback-qfi bound       --n 100
    feedback-qfi sweep       --m 5 --beta-min -2 --beta-max 2 --beta-steps 401
    feedback-qfi noisy-sweep --eta 0.9563525
    feedback-qfi scaling     --m-values 1,2,5,10,50,200

Defaults are B=1, T=1, m=5, x=1, dx=1e-5, with
eta=0.8**(1/5) for ``noisy-sweep``.  Output is CSV unless ``--format json``;
JSON output embeds the resolved configuration, so it can be fed back with
``--config`` to reproduce the run.

Exit codes: 0 success, 1 numerical or domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import feedback, noisy
from .constants import DEFAULT_DX, DEFAULT_ETA
from .errors import InvalidMatrixError, QfiError
from .hamfam import HamiltonianFamily, direction_field_qfi_closed_form, universal_qfi
from .qfi import channel_qfi_generator, precision_bound

log = logging.getLogger("feedback_qfi")

COMMANDS = ("qfi", "sweep", "noisy-sweep", "scaling", "bound")
FAMILY_FLAGS = {"direction-field": "direction_field", "multiplicative": "multiplicative", "trig-matrix": "trig_matrix"}


@dataclass
class RunConfig:
    command: str
    family: dict = field(default_factory=lambda: {"kind": "direction_field", "B": 1.0})
    x: float = 1.0
    T: float = 1.0
    m: int = 5
    dx: float = DEFAULT_DX
    n: int = 1
    J: float | None = None
    beta: float = 0.0
    eta: float | None = None
    beta_min: float = -3.0
    beta_max: float = 3.0
    beta_steps: int = 121
    search_min: float = -3.0
    search_max: float = 3.0
    m_values: list[int] = field(default_factory=lambda: [1, 2, 5, 10, 20, 50, 100, 200])
    grid_points: int = 64
    refine_iters: int = 3
    workers: int = 1
    out: str = "-"
    format: str = "csv"

    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_min, self.beta_max, self.beta_steps)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# dest -> flag spelling used in messages
FLAG_NAMES = {
    "x": "--x", "T": "--T", "m": "--m", "dx": "--dx", "n": "--n", "J": "--J", "beta": "--beta",
    "eta": "--eta", "beta_min": "--beta-min", "beta_max": "--beta-max", "beta_steps": "--beta-steps",
    "search_min": "--search-min", "search_max": "--search-max", "m_values": "--m-values",
    "grid_points": "--grid-points", "refine_iters": "--refine-iters", "workers": "--workers",
    "out": "--out", "format": "--format", "family": "--family", "B": "--B",
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedback-qfi",
        description="Maximal quantum Fisher information with and without coherent feedback controls.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the run configuration")
    common.add_argument("--family", choices=sorted(FAMILY_FLAGS), help="Hamiltonian family (default direction-field)")
    common.add_argument("--B", type=float, help="field strength of the direction-field family")
    common.add_argument("--x", type=float, help="true parameter value")
    common.add_argument("--T", type=float, help="total evolution time")
    common.add_argument("--dx", type=float, help="finite-difference step")
    common.add_argument("--workers", type=int, help="processes for sweep points")
    common.add_argument("--out", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("-v", "--verbose", action="store_true")

    controlled = argparse.ArgumentParser(add_help=False)
    controlled.add_argument("--m", type=int, help="number of segments / controls")

    betas = argparse.ArgumentParser(add_help=False)
    betas.add_argument("--beta-min", type=float)
    betas.add_argument("--beta-max", type=float)
    betas.add_argument("--beta-steps", type=int)
    betas.add_argument("--search-min", type=float, help="lower end of the gain-interval search")
    betas.add_argument("--search-max", type=float, help="upper end of the gain-interval search")

    p = sub.add_parser("qfi", parents=[common, controlled], help="single-point QFI values")
    p.add_argument("--beta", type=float, help="mis-estimation used for the feedback value")
    p = sub.add_parser("bound", parents=[common, controlled], help="precision bound 1/sqrt(nJ)")
    p.add_argument("--n", type=int, help="number of repetitions")
    p.add_argument("--J", type=float, help="use this Fisher information instead of computing it")
    p.add_argument("--beta", type=float)
    sub.add_parser("sweep", parents=[common, controlled, betas], help="unitary beta sweep (CSV)")
    p = sub.add_parser("noisy-sweep", parents=[common, controlled, betas], help="dephasing beta sweep (CSV)")
    p.add_argument("--eta", type=float, help="per-segment coherence factor in [0, 1]")
    p.add_argument("--grid-points", type=int, help="probe grid points per angle")
    p.add_argument("--refine-iters", type=int, help="probe refinement rounds")
    p = sub.add_parser("scaling", parents=[common], help="controlled QFI against m")
    p.add_argument("--m-values", type=_int_list)
    return parser


def _load_config_file(path: str) -> dict[str, Any]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: {path} is not valid JSON: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError("--config: expected a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise UsageError(f"--config: unknown key(s) {', '.join(unknown)}")
    return data


def parse_and_validate(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse argv (plus optional config file) into a validated RunConfig.

    Raises:
        SystemExit: code 2 on any usage or validation error.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _resolve(args)
    except UsageError as exc:
        parser.error(str(exc))


def _resolve(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config:
        values.update(_load_config_file(args.config))
    values.pop("command", None)
    flags = vars(args)
    for name in FLAG_NAMES:
        if name in ("family", "B"):
            continue
        if flags.get(name) is not None:
            values[name] = flags[name]
    family = dict(values.get("family") or {"kind": "direction_field", "B": 1.0})
    if flags.get("family"):
        kind = FAMILY_FLAGS[flags["family"]]
        if kind != family.get("kind"):
            family = {"kind": kind}
    if flags.get("B") is not None:
        if family.get("kind") != "direction_field":
            raise UsageError("--B only applies to --family direction-field")
        family["B"] = flags["B"]
    values["family"] = family
    if args.command == "noisy-sweep" and values.get("eta") is None:
        values["eta"] = DEFAULT_ETA
    cfg = RunConfig(command=args.command, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    def bad(name: str, why: str):
        raise UsageError(f"{FLAG_NAMES[name]} {why}")

    for name in ("x", "T", "dx", "beta", "beta_min", "beta_max", "search_min", "search_max"):
        v = getattr(cfg, name)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            bad(name, f"must be a finite number, got {v!r}")
    for name in ("m", "n", "beta_steps", "grid_points", "refine_iters", "workers"):
        v = getattr(cfg, name)
        if isinstance(v, bool) or not isinstance(v, int):
            bad(name, f"must be an integer, got {v!r}")
    if cfg.T <= 0:
        bad("T", "must be > 0")
    if cfg.dx <= 0:
        bad("dx", "must be > 0")
    if cfg.m < 1:
        bad("m", "must be >= 1")
    if cfg.n < 1:
        bad("n", "must be >= 1")
    if cfg.J is not None and not (math.isfinite(cfg.J) and cfg.J >= 0):
        bad("J", "must be a finite number >= 0")
    if cfg.eta is not None and not 0.0 <= cfg.eta <= 1.0:
        bad("eta", f"must lie in [0, 1], got {cfg.eta}")
    if cfg.beta_steps < 2:
        bad("beta_steps", "must be >= 2")
    if cfg.beta_min >= cfg.beta_max:
        bad("beta_min", "must be smaller than --beta-max")
    if not cfg.search_min < 0 < cfg.search_max:
        bad("search_min", "and --search-max must bracket 0")
    if cfg.grid_points < 2:
        bad("grid_points", "must be >= 2")
    if cfg.refine_iters < 0:
        bad("refine_iters", "must be >= 0")
    if cfg.workers < 1:
        bad("workers", "must be >= 1")
    if not cfg.m_values or any(not isinstance(m, int) or m < 1 for m in cfg.m_values):
        bad("m_values", "must be a non-empty list of integers >= 1")
    if cfg.format not in ("csv", "json"):
        bad("format", "must be csv or json")
    try:
        make_family(cfg)
    except (InvalidMatrixError, ValueError, KeyError, TypeError) as exc:
        bad("family", f"is invalid: {exc}")


def make_family(cfg: RunConfig) -> HamiltonianFamily:
    return HamiltonianFamily.from_spec(cfg.family)


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if v is None:
        return ""
    return str(v)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_safe(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_json_safe(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _interval_record(gi: feedback.GainInterval | None) -> dict | None:
    if gi is None:
        return None
    return dataclasses.asdict(gi)


def compute(cfg: RunConfig) -> tuple[list[str], list[list[Any]], dict[str, Any]]:
    """Run the configured experiment; returns CSV header, rows and a JSON result."""
    fam = make_family(cfg)
    if cfg.command in ("qfi", "bound"):
        base = feedback.uncontrolled_qfi(fam, cfg.x, 1, cfg.T, cfg.dx).value
        sched = feedback.optimal_schedule(fam, (1.0 + cfg.beta) * cfg.x, cfg.m, cfg.T)
        fb = feedback.controlled_qfi(fam, cfg.x, sched, cfg.dx).value
        if cfg.command == "qfi":
            gen = channel_qfi_generator(lambda y: fam.unitary_at(y, cfg.T), cfg.x, cfg.dx).value
            closed = (
                direction_field_qfi_closed_form(fam.field_strength, cfg.T)
                if fam.kind == "direction_field"
                else None
            )
            rec = {
                "x": cfg.x, "T": cfg.T, "m": cfg.m, "beta": cfg.beta, "dx": cfg.dx,
                "qfi": base, "qfi_generator": gen, "qfi_feedback": fb,
                "universal_qfi": universal_qfi(fam, cfg.x, cfg.T), "closed_form": closed,
            }
        else:
            j = cfg.J if cfg.J is not None else base
            rec = {
                "J": j, "n": cfg.n, "bound": precision_bound(j, cfg.n),
                "J_feedback": fb, "bound_feedback": precision_bound(fb, cfg.n),
            }
        return list(rec), [list(rec.values())], rec
    if cfg.command == "sweep":
        res = feedback.beta_sweep(fam, cfg.x, cfg.m, cfg.T, cfg.betas(), cfg.dx, workers=cfg.workers, interval=False)
        gi = _sweep_interval(
            lambda b: feedback._qfi_at_beta(b, fam, cfg.x, cfg.m, cfg.T, cfg.dx) - res.qfi_uncontrolled, cfg
        )
        return _sweep_output(res, gi)
    if cfg.command == "noisy-sweep":
        ncfg = noisy.NoisySweepConfig(
            eta=cfg.eta, m=cfg.m, T=cfg.T, x_true=cfg.x, beta_grid=tuple(cfg.betas()), dx=cfg.dx,
            probe_search=noisy.ProbeSearch(cfg.grid_points, cfg.refine_iters),
            search_range=(cfg.search_min, cfg.search_max),
        )
        res = noisy.noisy_beta_sweep(ncfg, fam, workers=cfg.workers, interval=False)
        gi = _sweep_interval(lambda b: noisy._noisy_point(b, fam, ncfg) - res.qfi_uncontrolled, cfg)
        return _sweep_output(res, gi)
    if cfg.command == "scaling":
        limit = universal_qfi(fam, cfg.x, cfg.T)
        curve = feedback.scaling_curve(fam, cfg.x, cfg.T, cfg.m_values, cfg.dx)
        rows = [[m, q, limit] for m, q in curve]
        return ["m", "qfi", "limit"], rows, {"limit": limit, "curve": [{"m": m, "qfi": q} for m, q in curve]}
    raise UsageError(f"unknown command {cfg.command!r}")


def _sweep_interval(g, cfg: RunConfig) -> feedback.GainInterval | None:
    if g(0.0) <= 0:
        return None
    return feedback.find_gain_interval(g, (cfg.search_min, cfg.search_max))


def _sweep_output(res: feedback.SweepResult, gi):
    rows = [[b, q, res.qfi_uncontrolled, q - res.qfi_uncontrolled] for b, q in zip(res.betas, res.qfi_controlled)]
    result = {
        "meta": res.meta,
        "qfi_uncontrolled": res.qfi_uncontrolled,
        "gain_interval": _interval_record(gi),
        "rows": [dict(zip(("beta", "qfi_controlled", "qfi_uncontrolled", "gain"), r)) for r in rows],
    }
    if gi is not None:
        log.info("gain interval: (%.4f, %.4f)%s", gi.lo, gi.hi, " [open]" if gi.is_open else "")
    return ["beta", "qfi_controlled", "qfi_uncontrolled", "gain"], rows, result


def render(cfg: RunConfig, header, rows, result) -> str:
    if cfg.format == "json":
        doc = {"command": cfg.command, "config": cfg.to_dict(), "result": result}
        return json.dumps(_json_safe(doc), indent=2, allow_nan=False) + "\n"
    return _csv_text(header, rows)


def run(cfg: RunConfig) -> int:
    """Execute a validated config and write its output; returns the exit code."""
    try:
        text = render(cfg, *compute(cfg))
    except QfiError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if cfg.out in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
    except UsageError as exc:
        parser.error(str(exc))
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
