"""Command-line front end.

Exit codes: 0 success (EQUAL for ``decide``), 2 parse or validation error,
3 STRICT, 4 BOUNDARY.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .decide import Verdict, decide, rho_bar
from .fileio import ParseError, read_matrix
from .matcore import ValidationError, as_density, eigh
from .measures import FUNCTIONALS, BlochVector, c_l1, c_r, qubit_cr, qubit_cr_roof
from .roof import roof_upper

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STRICT = 3
EXIT_BOUNDARY = 4

VERDICT_EXIT = {Verdict.EQUAL: EXIT_OK, Verdict.STRICT: EXIT_STRICT, Verdict.BOUNDARY: EXIT_BOUNDARY}

DEFAULT_TOLERANCES = {"roof": 1e-12, "trace": 1e-10, "psd": 1e-10, "hermitian": 1e-10}


@dataclass
class RunConfig:
    seed: int = 0
    restarts: int = 8
    ensemble_size: int | None = None
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_format: str = "text"

    def __post_init__(self):
        for name, value in self.tolerances.items():
            if not value > 0:
                raise ValidationError("config", f"tolerance {name} must be positive, got {value}")
        if self.restarts < 1:
            raise ValidationError("config", "restarts must be at least 1")
        if self.output_format not in ("text", "json", "csv"):
            raise ValidationError("config", f"unknown output format {self.output_format!r}")


@dataclass
class Outcome:
    payload: dict
    text: str
    header: list[str]
    rows: list[list]
    code: int = EXIT_OK


def _load_state(path, cfg: RunConfig, renormalize: bool) -> tuple[np.ndarray, str]:
    m, digest = read_matrix(path)
    rho = as_density(m, renormalize=renormalize, trace_tol=cfg.tolerances["trace"],
                     psd_tol=cfg.tolerances["psd"], hermitian_tol=cfg.tolerances["hermitian"])
    return np.array(rho), digest


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# -- commands -------------------------------------------------------------------

def cmd_measure(rho: np.ndarray, cfg: RunConfig) -> Outcome:
    spec = eigh(rho)
    vals = {"dim": int(rho.shape[0]), "c_l1": c_l1(rho), "c_r": c_r(rho),
            "eigenvalues": [float(v) for v in spec.eigenvalues]}
    text = "\n".join([
        f"dim          {vals['dim']}",
        f"C_l1         {_fmt(vals['c_l1'])}",
        f"C_r          {_fmt(vals['c_r'])}",
        "eigenvalues  " + " ".join(_fmt(v) for v in vals["eigenvalues"]),
    ])
    return Outcome(vals, text, ["dim", "c_l1", "c_r", "eigenvalues"],
                   [[vals["dim"], vals["c_l1"], vals["c_r"], " ".join(repr(v) for v in vals["eigenvalues"])]])


def _ensemble_text(e) -> list[str]:
    lines = []
    for w, psi in zip(e.weights, e.states):
        amps = ", ".join(f"{a.real:+.9f}{a.imag:+.9f}j" for a in psi)
        lines.append(f"  p = {w:.12f}  psi = ({amps})")
    return lines


def cmd_decide(rho: np.ndarray, cfg: RunConfig) -> Outcome:
    d = rho.shape[0]
    if d > 3:
        raise ValidationError("dimension", f"exact decision supports d <= 3, got d = {d}; "
                                           "use the 'roof' command for an upper bound")
    report = decide(rho)
    payload = report.to_dict()
    payload["c_l1"] = c_l1(rho)
    lines = [f"verdict      {report.verdict.value}", f"situation    {report.situation}",
             f"C_l1         {_fmt(payload['c_l1'])}"]
    if report.witness is not None:
        lines.append(f"witness ({len(report.witness)} states):")
        lines += _ensemble_text(report.witness)
    if report.certificate is not None:
        c = report.certificate
        lines.append(f"certificate  x1* = {_fmt(c.x1_star)}  max det = {_fmt(c.max_det)}"
                     + (f"  failing minor {c.failing_minor}" if c.failing_minor else ""))
    lines.append("steps:")
    lines += [f"  - {s}" for s in report.trace]
    cert = report.certificate
    row = [report.verdict.value, report.situation, payload["c_l1"],
           cert.x1_star if cert else "", cert.max_det if cert else "",
           len(report.witness) if report.witness is not None else ""]
    return Outcome(payload, "\n".join(lines),
                   ["verdict", "situation", "c_l1", "x1_star", "max_det", "witness_size"], [row],
                   VERDICT_EXIT[report.verdict])


def cmd_roof(rho: np.ndarray, cfg: RunConfig, functional: str = "l1", max_iters: int = 2000,
             workers: int = 1) -> Outcome:
    f = FUNCTIONALS[functional]
    res = roof_upper(rho, f, ensemble_size=cfg.ensemble_size, restarts=cfg.restarts,
                     seed=cfg.seed, max_iters=max_iters, tol=cfg.tolerances["roof"],
                     workers=workers)
    measure = c_l1(rho) if functional == "l1" else c_r(rho)
    payload = {
        "functional": functional,
        "value": res.value,
        "measure": measure,
        "gap": res.value - measure,
        "ensemble": res.ensemble.to_dict(),
        "restarts_used": res.restarts_used,
        "converged": list(res.converged),
        "restart_values": list(res.restart_values),
    }
    lines = [f"functional   {functional}", f"roof upper   {_fmt(res.value)}",
             f"measure      {_fmt(measure)}", f"gap          {_fmt(res.value - measure)}",
             f"restarts     {res.restarts_used} ({sum(res.converged)} converged)",
             f"ensemble ({len(res.ensemble)} states):"] + _ensemble_text(res.ensemble)
    return Outcome(payload, "\n".join(lines),
                   ["functional", "value", "measure", "gap", "restarts", "converged"],
                   [[functional, res.value, measure, res.value - measure, res.restarts_used,
                     sum(res.converged)]])


def figure1_rows(grid: int = 101) -> list[list[float]]:
    """Rows ``(r, z, cr, cr_roof, diff)`` over ``0 <= z <= r <= 1``.

    The surfaces are symmetric under ``z -> -z``, so only ``z >= 0`` is listed.
    """
    rows = []
    step = 1.0 / (grid - 1)
    for i in range(grid):
        r = i * step
        for j in range(i + 1):
            z = j * step
            b = BlochVector(float(np.sqrt(max(r * r - z * z, 0.0))), 0.0, z)
            cr, roof = qubit_cr(b), qubit_cr_roof(b)
            rows.append([r, z, cr, roof, roof - cr])
    return rows


def cmd_figure1(cfg: RunConfig, grid: int = 101) -> Outcome:
    if grid < 2:
        raise ValidationError("config", "grid must be at least 2")
    rows = figure1_rows(grid)
    header = ["r", "z", "cr", "cr_roof", "diff"]
    diffs = [row[4] for row in rows]
    payload = {"columns": header, "rows": rows, "min_diff": min(diffs), "max_diff": max(diffs)}
    text = (f"{len(rows)} grid points over 0 <= z <= r <= 1\n"
            f"min(diff) = {_fmt(min(diffs))}\nmax(diff) = {_fmt(max(diffs))}")
    return Outcome(payload, text, header, rows)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt random state ``G G^H / tr`` with complex Gaussian ``G``."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _spot_check(rho: np.ndarray, report) -> bool:
    if report.witness is not None:
        return (report.witness.reconstruction_error(rho) <= 1e-8
                and abs(float(np.dot(report.witness.weights,
                                     FUNCTIONALS["l1"].unnormalized(report.witness.states))) - c_l1(rho)) <= 1e-9)
    cert = report.certificate
    th = np.angle(rho)
    u = np.exp(1j * np.array([0.0, th[0, 1], th[0, 2]]))
    aligned = u[:, None] * rho * u.conj()[None, :]
    return abs(float(np.linalg.det(rho_bar(aligned, cert.x1_star)).real) - cert.max_det) <= 1e-12


def cmd_sample(cfg: RunConfig, count: int = 1000, dim: int = 3, ensemble: str = "HS",
               workers: int = 1) -> Outcome:
    if dim != 3:
        raise ValidationError("dimension", "sampling supports dim = 3 only")
    if ensemble != "HS":
        raise ValidationError("config", f"unknown ensemble {ensemble!r}")
    rng = np.random.default_rng(cfg.seed)
    states = [random_density(dim, rng) for _ in range(count)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            reports = list(ex.map(decide, states))
    else:
        reports = [decide(s) for s in states]
    header = ["index", "situation", "verdict", "c_l1", "max_det", "spot_checked"]
    rows = []
    tally = {v.value: 0 for v in Verdict}
    for i, (rho, rep) in enumerate(zip(states, reports)):
        tally[rep.verdict.value] += 1
        spot = ""
        if i % 100 == 0:
            if not _spot_check(rho, rep):
                raise ArithmeticError(f"spot check failed for sample {i}")
            spot = "ok"
        rows.append([i, rep.situation, rep.verdict.value, c_l1(rho),
                     rep.certificate.max_det if rep.certificate else "", spot])
    payload = {"count": count, "dim": dim, "ensemble": ensemble, "tally": tally,
               "columns": header, "rows": rows}
    text = f"{count} {ensemble} states, dim {dim}\n" + "\n".join(f"{k:9s} {v}" for k, v in tally.items())
    return Outcome(payload, text, header, rows)


# -- plumbing -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", type=Path, help="JSON file with default run configuration")
    g.add_argument("--seed", type=int)
    g.add_argument("--restarts", type=int)
    g.add_argument("--ensemble-size", type=int)
    for name in DEFAULT_TOLERANCES:
        g.add_argument(f"--tol.{name}", dest=f"tol_{name}", type=float, metavar="X",
                       help=f"tolerance '{name}' (default {DEFAULT_TOLERANCES[name]:g})")
    g.add_argument("--format", choices=["text", "json", "csv"])
    g.add_argument("--output", type=Path, help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coherence-roof",
                                 description="l1 / relative-entropy coherence and their convex roofs")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="C_l1, C_r and spectrum of a state")
    p.add_argument("file", type=Path)
    p.add_argument("--renormalize", action="store_true", help="rescale to unit trace")
    _common(p)

    p = sub.add_parser("decide", help="exact test of C_l1 == roof(C_l1) for d <= 3")
    p.add_argument("file", type=Path)
    p.add_argument("--renormalize", action="store_true")
    _common(p)

    p = sub.add_parser("roof", help="numerical upper bound on a convex roof")
    p.add_argument("file", type=Path)
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--functional", choices=sorted(FUNCTIONALS), default="l1")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("figure1", help="CSV surfaces of C_r and its roof for qubits")
    p.add_argument("--grid", type=int, default=101)
    _common(p)

    p = sub.add_parser("sample", help="decide random qutrit states")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--ensemble", default="HS")
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    return ap


def config_from_args(args) -> RunConfig:
    base: dict = {}
    if args.config is not None:
        try:
            base = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise ParseError("config file must hold a JSON object")
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(base.get("tolerances", {}))
    for name in DEFAULT_TOLERANCES:
        value = getattr(args, f"tol_{name}")
        if value is not None:
            tolerances[name] = value
    pick = lambda key, attr: getattr(args, attr) if getattr(args, attr) is not None else base.get(key)  # noqa: E731
    kwargs = {k: v for k, v in {
        "seed": pick("seed", "seed"),
        "restarts": pick("restarts", "restarts"),
        "ensemble_size": pick("ensemble_size", "ensemble_size"),
        "output_format": pick("output_format", "format"),
    }.items() if v is not None}
    return RunConfig(tolerances=tolerances, **kwargs)


def render(outcome: Outcome, command: str, cfg: RunConfig, digest: str | None) -> str:
    if cfg.output_format == "json":
        env = {"command": command, "input_digest": digest, "config": asdict(cfg),
               "result": outcome.payload}
        return json.dumps(env, indent=2) + "\n"
    if cfg.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(outcome.header)
        w.writerows(outcome.rows)
        return buf.getvalue()
    return outcome.text + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    digest = None
    try:
        cfg = config_from_args(args)
        if args.command == "figure1":
            outcome = cmd_figure1(cfg, args.grid)
        elif args.command == "sample":
            outcome = cmd_sample(cfg, args.count, args.dim, args.ensemble, args.workers)
        else:
            rho, digest = _load_state(args.file, cfg, args.renormalize)
            if args.command == "measure":
                outcome = cmd_measure(rho, cfg)
            elif args.command == "decide":
                outcome = cmd_decide(rho, cfg)
            else:
                outcome = cmd_roof(rho, cfg, args.functional, args.max_iters, args.workers)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"parse error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = render(outcome, args.command, cfg, digest)
    if args.output is not None:
        args.output.write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    if args.command == "sample" and cfg.output_format == "csv":
        tally = outcome.payload["tally"]
        print("tally " + " ".join(f"{k}={v}" for k, v in tally.items()), file=sys.stderr)
    return outcome.code


if __name__ == "__main__":
    raise SystemExit(main())
