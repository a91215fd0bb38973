"""Batch front end.

Each subcommand reads one INI section of the same name from ``--config``
(the section may be omitted to use defaults) and writes
``<out-dir>/<command>.json`` and/or ``<out-dir>/<command>.csv``.  Every
artifact embeds a run manifest; CSV files start with ``# manifest:`` and
``# columns:`` comment lines, the latter tagging each column as an input, an
analytic value or a brute-force value.

Exit codes: 0 success, 2 configuration error, 3 tolerance failure.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import hashlib
import io
import json
import math
import operator
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .cavity import confusion_matrix, detuned_confusion_oracle, discriminate
from .dynamics import (
    RevivalSpec,
    generalized_coherent,
    reconstruct_1d,
    reconstruction_norm_1d,
    revival_coeffs_1d,
)
from .fock_core import DensityOperator, ModeSpec, coherent_norm_deficit, default_cutoff, fidelity
from .optics import (
    BeamSplitterParams,
    bell_beam_splitters,
    chi_coefficients,
    herald_pipeline,
    herald_probabilities,
    success_probability,
)
from .protocols import ProtocolConfig, run_protocol
from .states import optical_bell

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE = 0, 2, 3
SIG = 12


class ConfigError(ValueError):
    pass


# --- config parsing -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_number(text: str) -> complex:
    """Evaluate a numeric literal allowing ``pi``, ``j`` and ``+ - * /``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _real(text: str) -> float:
    v = _eval_number(text)
    if isinstance(v, complex):
        if v.imag != 0:
            raise ConfigError(f"expected a real number, got {text!r}")
        v = v.real
    return float(v)


def _int(text: str) -> int:
    v = _real(text)
    if v != int(v):
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(v)


def _complex(text: str) -> complex:
    return complex(_eval_number(text))


def _real_list(text: str) -> list[float]:
    return [_real(t) for t in text.split(",") if t.strip()]


def _grid(text: str) -> list[tuple[int, int, int]]:
    rows = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = [p for p in chunk.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"grid entries are 'K,N,M' triples, got {chunk.strip()!r}")
        rows.append(tuple(_int(p) for p in parts))
    return rows


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ConfigError(f"expected one of {options}, got {t!r}")
        return t

    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: str
    help: str


SCHEMA: dict[str, dict[str, Key]] = {
    "revival": {
        "grid": Key(_grid, "1,4,1", "';'-separated K,N,M triples (may be empty)"),
        "alpha": Key(_complex, "1.0", "condensate coherent amplitude"),
        "cutoff": Key(_int, "0", "Fock cutoff (0 = default policy)"),
        "tolerance": Key(_real, "1e-7", "maximum allowed infidelity"),
    },
    "herald": {
        "q": Key(_real_list, "0.05, 0.1, 0.2", "comma-separated squeezing parameters"),
        "eta": Key(_real_list, "0.3, 0.7, 1.0", "comma-separated detector efficiencies"),
        "sign": Key(_choice("+", "-"), "+", "target Bell sign"),
        "model": Key(_choice("amplitude", "povm"), "amplitude", "detector/source model"),
        "tolerance": Key(_real, "1e-6", "maximum allowed Bell infidelity"),
    },
    "protocol": {
        "scheme": Key(_choice("single_photon", "multiphoton"), "single_photon", "protocol"),
        "alpha1": Key(_complex, "1.0", "condensate 1 amplitude"),
        "alpha2": Key(_complex, "1.0", "condensate 2 amplitude"),
        "beta": Key(_complex, "1.0", "quasi-Bell probe amplitude"),
        "theta": Key(_real, "pi/4", "single-photon channel angle"),
        "phi": Key(_real, "0", "single-photon channel phase"),
        "K": Key(_real, "1", "effective interaction parameter"),
        "M": Key(_int, "1", "revival numerator"),
        "N": Key(_int, "4", "revival denominator"),
        "measurement": Key(
            _choice("", "bell", "cavity", "physical", "ideal", "unambiguous"),
            "",
            "probe readout (empty = scheme default)",
        ),
        "cutoff_bec1": Key(_int, "0", "condensate 1 cutoff (0 = default)"),
        "cutoff_bec2": Key(_int, "0", "condensate 2 cutoff (0 = default)"),
        "cutoff_probe": Key(_int, "0", "probe cutoff for the multiphoton scheme (0 = default)"),
        "tolerance": Key(_real, "0", "maximum allowed infidelity (0 = no check)"),
    },
    "bell-discriminate": {
        "omega_t": Key(_real_list, "pi", "comma-separated pulse areas"),
        "rotation": Key(_choice("conjugate", "ry"), "conjugate", "atomic readout rotation"),
        "tolerance": Key(_real, "1e-9", "maximum deviation from identity at pulse area pi"),
    },
}


def load_section(path: str | None, command: str) -> tuple[dict[str, Any], str]:
    """Parse the ``command`` section; returns (values, sha256 of the file)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    digest = hashlib.sha256(b"").hexdigest()
    if path is not None:
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        digest = hashlib.sha256(raw).hexdigest()
        try:
            parser.read_string(raw.decode("utf-8"))
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        unknown_sections = set(parser.sections()) - set(SCHEMA)
        if unknown_sections:
            raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
    schema = SCHEMA[command]
    given = dict(parser[command]) if parser.has_section(command) else {}
    unknown = set(given) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys in [{command}]: {sorted(unknown)}")
    values = {}
    for name, key in schema.items():
        try:
            values[name] = key.parse(given.get(name, key.default))
        except ConfigError as exc:
            raise ConfigError(f"[{command}] {name}: {exc}") from exc
    return values, digest


# --- output -------------------------------------------------------------------


def _fmt(x: Any) -> Any:
    """Round to 12 significant digits; NaN becomes ``None``."""
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _fmt(float(x.real)), "im": _fmt(float(x.imag))}
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG}g}")
    if isinstance(x, dict):
        return {str(k): _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_fmt(v) for v in x]
    return str(x)


def _csv_cell(x: Any) -> str:
    v = _fmt(x)
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{SIG}g}"
    return str(v)


@dataclass
class Result:
    payload: dict[str, Any]
    columns: list[tuple[str, str]]
    rows: list[list[Any]]
    failed: list[str]
    cutoffs: dict[str, Any]
    truncation: dict[str, Any]


def _write(args, command: str, digest: str, res: Result, timings: dict[str, float]) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_sha256": digest,
        "version": __version__,
        "cutoffs": res.cutoffs,
        "truncation_estimates": res.truncation,
        "timing": {"wall_clock_s": sum(timings.values()), "stages": timings},
    }
    if args.format in ("json", "both"):
        doc = {"manifest": manifest, "results": res.payload}
        (out / f"{command}.json").write_text(
            json.dumps(_fmt(doc), indent=2, sort_keys=True) + "\n"
        )
    if args.format in ("csv", "both"):
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(_fmt(manifest), sort_keys=True) + "\n")
        buf.write("# columns: " + ", ".join(f"{n}={tag}" for n, tag in res.columns) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([n for n, _ in res.columns])
        for row in res.rows:
            w.writerow([_csv_cell(v) for v in row])
        (out / f"{command}.csv").write_text(buf.getvalue())


# --- subcommands ----------------------------------------------------------------


def _revival_row(entry, alpha: complex, cutoff: int, tol: float):
    K, N, M = entry
    if N < 1:
        return [K, N, M, None, None, None, "skipped: N<1"], None
    if math.gcd(M, N) != 1:
        return [K, N, M, None, None, None, "skipped: gcd(M,N)≠1"], None
    spec = RevivalSpec(M, N, K)
    cc = revival_coeffs_1d(spec)
    fids, norms = [], []
    for coeffs, n in ((cc.c, 0), (cc.c_prime, 1)):
        brute = generalized_coherent(alpha, spec.tau, K, n, cutoff)
        fids.append(fidelity(brute, reconstruct_1d(coeffs, alpha, spec, cutoff)))
        norms.append(abs(reconstruction_norm_1d(coeffs, alpha, spec) - 1.0))
    fid = min(fids)
    status = "ok" if fid >= 1.0 - tol else "tolerance"
    coeff = {"K": K, "N": N, "M": M, "c": list(cc.c), "c_prime": list(cc.c_prime)}
    return [K, N, M, spec.tau, fid, max(norms), status], coeff


def cmd_revival(cfg: dict[str, Any], pool: ThreadPoolExecutor, timings) -> Result:
    alpha = cfg["alpha"]
    cutoff = cfg["cutoff"] or default_cutoff(alpha)
    t0 = time.perf_counter()
    results = list(pool.map(lambda e: _revival_row(e, alpha, cutoff, cfg["tolerance"]), cfg["grid"]))
    timings["grid"] = time.perf_counter() - t0
    rows = [r for r, _ in results]
    cols = [
        ("K", "input"),
        ("N", "input"),
        ("M", "input"),
        ("tau", "input"),
        ("fidelity", "bruteforce_vs_analytic"),
        ("norm_error", "analytic"),
        ("status", "derived"),
    ]
    failed = [f"K={r[0]} N={r[1]} M={r[2]}" for r in rows if r[6] == "tolerance"]
    payload = {
        "alpha": alpha,
        "rows": [dict(zip([c for c, _ in cols], r)) for r in rows],
        "coefficients": [c for _, c in results if c is not None],
    }
    trunc = {"bec": coherent_norm_deficit(alpha, cutoff)}
    return Result(payload, cols, rows, failed, {"bec": cutoff}, trunc)


def _herald_splitters(q: float, sign: str):
    if q == 0.0:
        return BeamSplitterParams(0.0, 1.0), BeamSplitterParams(1.0, 0.0)
    return bell_beam_splitters(q, 1 if sign == "+" else -1)


def _herald_row(q: float, eta: float, sign: str, model: str):
    bs1, bs2 = _herald_splitters(q, sign)
    if q == 0.0:
        # every chi vanishes with r1; the weights tend to the pure-psi limit
        analytic = {"psi": 1.0, "10": 0.0, "00": 0.0, "01": 0.0}
    else:
        analytic = herald_probabilities(q, chi_coefficients(bs1, bs2, eta))
    target = optical_bell(1 if sign == "+" else -1)
    rep = herald_pipeline(q, bs1, bs2, eta, model=model)
    fid_bell = float("nan")
    if not rep.degenerate and rep.psi_component is not None:
        fid_bell = fidelity(
            rep.psi_component, target.with_cutoffs({m.label: m.cutoff for m in rep.psi_component.modes})
        )
    return analytic, rep, fid_bell


def cmd_herald(cfg: dict[str, Any], pool: ThreadPoolExecutor, timings) -> Result:
    for q in cfg["q"]:
        if not 0.0 <= q < 1.0:
            raise ConfigError(f"[herald] q must lie in [0, 1), got {q}")
    for eta in cfg["eta"]:
        if not 0.0 < eta <= 1.0:
            raise ConfigError(f"[herald] eta must lie in (0, 1], got {eta}")
    jobs = [(q, eta) for q in cfg["q"] for eta in cfg["eta"]]
    t0 = time.perf_counter()
    out = list(pool.map(lambda j: _herald_row(j[0], j[1], cfg["sign"], cfg["model"]), jobs))
    timings["pipeline"] = time.perf_counter() - t0

    # pairwise fidelity of heralded states across eta at fixed q
    indep: dict[float, float] = {}
    for q in cfg["q"]:
        states = [rep.heralded_state for (qq, _), (_, rep, _) in zip(jobs, out) if qq == q]
        states = [s for s in states if s is not None]
        indep[q] = (
            min(fidelity(a, b) for a in states for b in states) if len(states) > 1 else float("nan")
        )
    rows, failed, detail = [], [], []
    tol = cfg["tolerance"]
    for (q, eta), (analytic, rep, fid_bell) in zip(jobs, out):
        rows.append(
            [
                q,
                eta,
                analytic["psi"],
                success_probability(q, eta)[0],
                rep.p_psi,
                "degenerate" if rep.degenerate else fid_bell,
                indep[q],
            ]
        )
        detail.append(
            {
                "q": q,
                "eta": eta,
                "analytic": analytic,
                "bruteforce": None if rep.degenerate else rep.probabilities(),
                "fidelity_to_bell": fid_bell,
                "degenerate": rep.degenerate,
            }
        )
        if not rep.degenerate and cfg["model"] == "amplitude" and not fid_bell >= 1.0 - tol:
            failed.append(f"q={q} eta={eta}")
    cols = [
        ("q", "input"),
        ("eta", "input"),
        ("P_psi_analytic", "analytic"),
        ("P_psi_closed_form", "analytic"),
        ("P_psi_bruteforce", "bruteforce"),
        ("fidelity_to_bell", "bruteforce"),
        ("heralded_eta_independence_check", "bruteforce"),
    ]
    payload = {"model": cfg["model"], "sign": cfg["sign"], "rows": detail}
    source = "second order" if cfg["model"] == "amplitude" else "auto"
    return Result(payload, cols, rows, failed, {"source": source}, {})


def cmd_protocol(cfg: dict[str, Any], pool: ThreadPoolExecutor, timings) -> Result:
    cutoffs = {
        k: cfg[f"cutoff_{k}"] for k in ("bec1", "bec2", "probe") if cfg[f"cutoff_{k}"] > 0
    }
    try:
        pc = ProtocolConfig(
            scheme=cfg["scheme"],
            alpha1=cfg["alpha1"],
            alpha2=cfg["alpha2"],
            beta=cfg["beta"],
            theta=cfg["theta"],
            phi=cfg["phi"],
            K=cfg["K"],
            M=cfg["M"],
            N=cfg["N"],
            cutoffs=cutoffs,
            measurement=cfg["measurement"] or None,
        )
    except ValueError as exc:
        raise ConfigError(f"[protocol] {exc}") from exc
    t0 = time.perf_counter()
    rep = run_protocol(pc)
    timings["protocol"] = time.perf_counter() - t0
    rows = []
    for o in rep.outcomes:
        rows.append(
            [
                o.label,
                o.probability,
                rep.fidelities.get(o.label, float("nan")),
                rep.entanglement.get(o.label, float("nan")),
                o.purity,
            ]
        )
    cols = [
        ("label", "bruteforce"),
        ("probability", "bruteforce"),
        ("fidelity_to_target", "bruteforce_vs_analytic"),
        ("entanglement_entropy", "bruteforce"),
        ("purity", "bruteforce"),
    ]
    tol = cfg["tolerance"]
    failed = []
    if tol > 0:
        failed = [k for k, f in rep.fidelities.items() if not f >= 1.0 - tol]
    meta = dict(rep.metadata)
    stage = meta.pop("timings", {})
    timings.update({f"protocol.{k}": v for k, v in stage.items()})
    payload = {
        "config": {k: v for k, v in cfg.items()},
        "metadata": meta,
        "outcomes": [dict(zip([c for c, _ in cols], r)) for r in rows],
        "fidelity_details": rep.fidelity_details,
        "total_probability": rep.total_probability,
    }
    return Result(payload, cols, rows, failed, meta["cutoffs"], meta["truncation"])


def cmd_bell_discriminate(cfg: dict[str, Any], pool: ThreadPoolExecutor, timings) -> Result:
    t0 = time.perf_counter()
    entries, rows, failed = [], [], []
    for w in cfg["omega_t"]:
        if w < 0:
            raise ConfigError("[bell-discriminate] pulse areas must be non-negative")
        cm = confusion_matrix(w, cfg["rotation"])
        entry = {"omega_t": w, "confusion": cm.tolist()}
        if cfg["rotation"] == "conjugate":
            oracle = detuned_confusion_oracle(w)
            entry["oracle"] = oracle.tolist()
            entry["max_deviation_from_oracle"] = float(np.max(np.abs(cm - oracle)))
        if abs(w - math.pi) < 1e-12:
            dev = float(np.max(np.abs(cm - np.eye(2))))
            entry["max_deviation_from_identity"] = dev
            if dev > cfg["tolerance"]:
                failed.append(f"omega_t={w}")
        entries.append(entry)
        for label, row in zip(("B+", "B-"), cm):
            rows.append([w, label, row[0], row[1]])
    # equal mixture of the two Bell inputs
    bp, bm = optical_bell(1).vector, optical_bell(-1).vector
    modes = (ModeSpec("probe1", 1), ModeSpec("probe2", 1))
    mix = DensityOperator(modes, 0.5 * (np.outer(bp, bp.conj()) + np.outer(bm, bm.conj())))
    res = discriminate(mix, math.pi, cfg["rotation"])
    timings["discriminate"] = time.perf_counter() - t0
    payload = {
        "rotation": cfg["rotation"],
        "entries": entries,
        "mixed_input": {"p_plus": res.p_plus, "p_minus": res.p_minus},
    }
    cols = [("omega_t", "input"), ("input", "input"), ("p_plus", "bruteforce"), ("p_minus", "bruteforce")]
    return Result(payload, cols, rows, failed, {"cavity": 1, "atom": 1}, {})


COMMANDS = {
    "revival": cmd_revival,
    "herald": cmd_herald,
    "protocol": cmd_protocol,
    "bell-discriminate": cmd_bell_discriminate,
}


def _section_help(command: str) -> str:
    lines = [f"config keys for [{command}]:"]
    for name, key in SCHEMA[command].items():
        lines.append(f"  {name} (default {key.default!r}): {key.help}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bec-ecs",
        description="Entangled coherent states of two condensates: batch experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(
            name,
            epilog=_section_help(name),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", help="INI file with a [%s] section" % name)
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
        p.add_argument("--threads", type=int, default=1, help="worker threads for grid rows")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    timings: dict[str, float] = {}
    try:
        t0 = time.perf_counter()
        cfg, digest = load_section(args.config, args.command)
        timings["config"] = time.perf_counter() - t0
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            res = COMMANDS[args.command](cfg, pool, timings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write(args, args.command, digest, res, timings)
    if res.failed:
        print("tolerance failure: " + "; ".join(res.failed), file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
