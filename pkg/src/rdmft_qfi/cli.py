"""Command-line interface: functional sweeps, condensate maps, checks, ground states, witnesses.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import __version__
from .bec import BecExpansion
from .checks import CHECKS, FAULTS, CheckContext, run_checks
from .fock import FockBasis, StateVector, op_onsite_interaction, spin_coherent_state
from .groundstate import ground_state
from .qfim import QfimMatrix, qfim_from_state, qfim_functional_with_result, witness_depth
from .rdm import OneBodyRDM, RepresentabilityError
from .search import STRATEGIES, SearchOptions, functional_surface, numeric_search_dual

COMMANDS = ("sweep", "bec-map", "verify", "groundstate", "witness")
FORMATS = ("csv", "json")
SCHEMA_VERSION = "1"
THREADS_ENV = "RDMFT_QFI_THREADS"

SWEEP_COLUMNS = ("gamma_x", "gamma_z", "F", "M_xx", "M_yy", "M_zz", "M_xz", "converged")
BEC_COLUMNS = ("theta", "phi", "delta", "Mzz_expansion", "Mzz_numeric", "exceeds_sql")


class UsageError(Exception):
    """Bad command line or configuration (exit code 1)."""


class NumericalFailure(Exception):
    """A computation finished but did not meet its requirements (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    command: str
    n_particles: int = 2
    sign_or_u: float = 1.0
    grid: int = 50
    strategy: str = "auto"
    seed: int = 0
    output_path: str = "-"
    format: str = "csv"
    strict: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.grid < 2:
            raise UsageError("grid must be at least 2")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}")
        if self.strategy not in STRATEGIES:
            raise UsageError(f"strategy must be one of {STRATEGIES}")
        if self.n_particles < 0:
            raise UsageError("particle number must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")


_CONFIG_KEYS = {
    # key in the config file -> (argparse dest, converter)
    "n": ("n", int),
    "sign": ("sign", float),
    "u": ("u", float),
    "grid": ("grid", int),
    "strategy": ("strategy", str),
    "seed": ("seed", int),
    "out": ("out", str),
    "format": ("format", str),
    "strict": ("strict", lambda v: v.strip().lower() in ("1", "true", "yes", "on")),
    "t": ("t", float),
    "theta_points": ("theta_points", int),
    "phi_points": ("phi_points", int),
    "delta": ("delta", str),
    "only": ("only", str),
    "inject_fault": ("inject_fault", str),
}


def read_config_file(path: str) -> dict:
    """``key = value`` lines (an optional ``[run]`` header is allowed); ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path!r}: {exc}") from None
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            norm = key.replace("-", "_")
            if norm not in _CONFIG_KEYS:
                raise UsageError(f"unknown config key {key!r} in {path!r}")
            dest, conv = _CONFIG_KEYS[norm]
            try:
                out[dest] = conv(raw)
            except ValueError:
                raise UsageError(f"bad value {raw!r} for config key {key!r}") from None
    return out


_DEFAULTS = {
    "n": 2,
    "sign": 1.0,
    "grid": 50,
    "strategy": "auto",
    "seed": 0,
    "out": "-",
    "format": "csv",
    "strict": False,
    "t": 1.0,
    "theta_points": 19,
    "phi_points": 37,
    "delta": "0.1",
    "only": None,
    "inject_fault": None,
}

_COMMAND_DEFAULTS = {
    "verify": {"format": "json", "grid": 20},
    "groundstate": {"format": "json", "u": 1.0},
    "witness": {"format": "json"},
    "bec-map": {"n": 1000},
}


def _merge(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides the defaults."""
    merged = dict(_DEFAULTS)
    merged.update(_COMMAND_DEFAULTS.get(args.command, {}))
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            merged[key] = value
    # config-file values bypass argparse, so validate the enumerated ones here
    if merged["format"] not in FORMATS:
        raise UsageError(f"format must be one of {', '.join(FORMATS)}")
    if merged["strategy"] not in STRATEGIES:
        raise UsageError(f"strategy must be one of {', '.join(STRATEGIES)}")
    return merged


def _parse_sign(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected +1, -1 or a real interaction strength, got {text!r}") from None
    if not math.isfinite(v) or v == 0:
        raise argparse.ArgumentTypeError("interaction strength must be finite and nonzero")
    return v


def _parse_vector(text: str) -> tuple[float, float, float]:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(parts)


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rdmft-qfi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid=True):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--out", help="output path ('-' for stdout)")
        sp.add_argument("--format", choices=FORMATS)
        sp.add_argument("--seed", type=_u64)
        if grid:
            sp.add_argument("--grid", type=int, help="grid points per axis (>= 2)")

    sp = sub.add_parser("sweep", help="F and QFIM over the gamma_y = 0 disk")
    common(sp)
    sp.add_argument("--n", type=int, help="particle number")
    sp.add_argument("--sign", type=_parse_sign, help="+1, -1 or an interaction strength u")
    sp.add_argument("--strategy", choices=STRATEGIES)
    sp.add_argument("--strict", action="store_true", default=None, help="exit 2 if any point fails to converge")

    sp = sub.add_parser("bec-map", help="small-depletion Mzz over the (theta, phi) sphere")
    common(sp, grid=False)
    sp.add_argument("--n", type=int)
    sp.add_argument("--theta-points", type=int, dest="theta_points")
    sp.add_argument("--phi-points", type=int, dest="phi_points")
    sp.add_argument("--delta", help="comma-separated depletions")
    sp.add_argument("--numeric", action="store_true", default=None, help="also compute Mzz by constrained search")

    sp = sub.add_parser("verify", help="run the self-consistency checks")
    common(sp)
    sp.add_argument("--only", help=f"comma-separated subset of: {', '.join(CHECKS)}")
    sp.add_argument("--inject-fault", dest="inject_fault", choices=FAULTS, help="deliberately break one formula")

    sp = sub.add_parser("groundstate", help="exact ground state of the two-site model")
    common(sp, grid=False)
    sp.add_argument("--n", type=int)
    sp.add_argument("--t", type=float, help="hopping")
    sp.add_argument("--u", type=float, help="on-site interaction")

    sp = sub.add_parser("witness", help="entanglement depth certified by a QFIM")
    common(sp, grid=False)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--qfim-file", dest="qfim_file", help="JSON file with a 3x3 'qfim' matrix and 'n_particles'")
    src.add_argument("--state", choices=("noon", "coherent"), help="built-in test state")
    src.add_argument("--gamma", type=_parse_vector, help="1-RDM target gx,gy,gz; QFIM of its minimizer")
    sp.add_argument("--n", type=int)
    sp.add_argument("--sign", type=_parse_sign, help="interaction for --gamma")
    sp.add_argument("--direction", type=_parse_vector, action="append", help="unit vector; repeatable")
    return p


# ---------------------------------------------------------------------------
# serialization


def _fmt_json_number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if all(c not in s for c in ".eEn"):
        s += ".0"
    return s


def dumps_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_json_number(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return dumps_json(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.floating, np.integer)) for v in obj):
            return "[" + ", ".join(dumps_json(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt_csv(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v if math.isfinite(v) else ""
    return str(v)


def render(config: dict, columns: Sequence[str], rows: list[dict], fmt: str, checks=None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt_csv(row[c]) for c in columns])
        return buf.getvalue()
    doc = {"schema_version": SCHEMA_VERSION, "config": config, "rows": rows}
    if checks is not None:
        doc["checks"] = checks
    return dumps_json(doc) + "\n"


def _write(text: str, path: str):
    if path in ("-", ""):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path!r}: {exc.strerror}") from None


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _options(cfg: dict) -> SearchOptions:
    return SearchOptions(seed=cfg["seed"])


def _public_config(command: str, cfg: dict, keys: Sequence[str]) -> dict:
    out = {"command": command}
    for k in keys:
        out[k] = cfg.get(k)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_sweep(cfg: dict) -> int:
    rc = RunConfig("sweep", cfg["n"], cfg["sign"], cfg["grid"], cfg["strategy"], cfg["seed"], cfg["out"], cfg["format"], cfg["strict"])
    if rc.strategy == "closed_form" and rc.n_particles != 2:
        raise UsageError("the closed form exists only for N = 2")
    table = functional_surface(rc.n_particles, rc.sign_or_u, rc.grid, rc.strategy, _options(cfg), thread_count())
    rows = []
    for x, z, res in zip(table.gamma_x, table.gamma_z, table.results):
        m = qfim_from_state(res.minimizer).entries
        rows.append(
            {
                "gamma_x": float(x),
                "gamma_z": float(z),
                "F": res.f_value,
                "M_xx": float(m[0, 0]),
                "M_yy": float(m[1, 1]),
                "M_zz": float(m[2, 2]),
                "M_xz": float(m[0, 2]),
                "converged": bool(res.converged),
            }
        )
    conf = _public_config("sweep", cfg, ("n", "sign", "grid", "strategy", "seed", "strict"))
    _write(render(conf, SWEEP_COLUMNS, rows, rc.format), rc.output_path)
    if rc.strict and not all(r["converged"] for r in rows):
        raise NumericalFailure(f"{sum(not r['converged'] for r in rows)} grid point(s) did not converge")
    return 0


def _parse_deltas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad depletion list {text!r}") from None
    if not vals or any(v < 0 or not math.isfinite(v) for v in vals):
        raise UsageError("depletions must be finite and non-negative")
    return vals


def cmd_bec_map(cfg: dict) -> int:
    N = cfg["n"]
    if N < 2:
        raise UsageError("bec-map needs N >= 2")
    nt, nphi = cfg["theta_points"], cfg["phi_points"]
    if nt < 2 or nphi < 1:
        raise UsageError("need at least 2 theta points and 1 phi point")
    deltas = _parse_deltas(cfg["delta"])
    if any(d > N / 2.0 for d in deltas):
        raise UsageError("depletion cannot exceed N/2")
    numeric = bool(cfg.get("numeric"))
    thetas = np.linspace(0.0, math.pi, nt)
    phis = np.arange(nphi) * (2 * math.pi / nphi)
    w = op_onsite_interaction(FockBasis(N), 1.0) if numeric else None
    opts = _options(cfg)
    numeric_cache = {}
    rows = []
    for delta in deltas:
        for th in thetas:
            for ph in phis:
                mexp = BecExpansion.at(N, float(th), float(ph)).mzz(delta)
                mnum = math.nan
                if numeric:
                    # the on-site functional does not depend on phi, so one search per (theta, delta)
                    key = (delta, float(th))
                    if key not in numeric_cache:
                        target = OneBodyRDM.from_spherical(N, N / 2.0 - delta, float(th), 0.0)
                        res = numeric_search_dual(N, target, w, opts)
                        numeric_cache[key] = qfim_from_state(res.minimizer).zz if res.converged else math.nan
                    mnum = numeric_cache[key]
                rows.append(
                    {
                        "theta": float(th),
                        "phi": float(ph),
                        "delta": float(delta),
                        "Mzz_expansion": float(mexp),
                        "Mzz_numeric": mnum,
                        "exceeds_sql": bool(mexp > N),
                    }
                )
    conf = _public_config("bec-map", cfg, ("n", "theta_points", "phi_points", "delta", "numeric", "seed"))
    _write(render(conf, BEC_COLUMNS, rows, cfg["format"]), cfg["out"])
    return 0


def cmd_verify(cfg: dict) -> int:
    names = [s.strip() for s in cfg["only"].split(",") if s.strip()] if cfg.get("only") else None
    if names:
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise UsageError(f"unknown check(s): {', '.join(unknown)}; available: {', '.join(CHECKS)}")
    if cfg["grid"] < 2:
        raise UsageError("grid must be at least 2")
    fault = cfg.get("inject_fault")
    if fault is not None and fault not in FAULTS:
        raise UsageError(f"unknown fault {fault!r}; available: {', '.join(FAULTS)}")
    ctx = CheckContext(_options(cfg), cfg["grid"], fault)
    results = run_checks(names, ctx)
    checks = [asdict(r) for r in results]
    conf = _public_config("verify", cfg, ("grid", "seed", "only", "inject_fault"))
    columns = ("name", "tolerance", "residual", "passed", "detail")
    if cfg["format"] == "csv":
        text = render(conf, columns, checks, "csv")
    else:
        text = render(conf, columns, [], "json", checks=checks)
    _write(text, cfg["out"])
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericalFailure(f"failed checks: {', '.join(failed)}")
    return 0


def cmd_groundstate(cfg: dict) -> int:
    N = cfg["n"]
    if N < 1:
        raise UsageError("groundstate needs N >= 1")
    u = cfg.get("u", cfg.get("sign", 1.0))
    t = cfg["t"]
    if not (math.isfinite(u) and math.isfinite(t)):
        raise UsageError("t and u must be finite")
    gs = ground_state(N, t, u)
    row = {
        "n_particles": N,
        "t": t,
        "u": u,
        "energy": gs.energy,
        "gamma_x": gs.rdm.gamma_x,
        "gamma_y": gs.rdm.gamma_y,
        "gamma_z": gs.rdm.gamma_z,
        "gap": gs.gap if math.isfinite(gs.gap) else math.nan,
        "degenerate": gs.degenerate,
    }
    conf = _public_config("groundstate", cfg, ("n", "t", "u"))
    _write(render(conf, tuple(row), [row], cfg["format"]), cfg["out"])
    return 0


def _load_qfim(path: str) -> QfimMatrix:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return QfimMatrix(np.array(doc["qfim"], dtype=float), int(doc["n_particles"]))
    except OSError as exc:
        raise UsageError(f"cannot read {path!r}: {exc.strerror}") from None
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad QFIM file {path!r}: {exc}") from None


def cmd_witness(cfg: dict) -> int:
    if cfg.get("qfim_file"):
        q = _load_qfim(cfg["qfim_file"])
        N = q.n_particles
    elif cfg.get("gamma") is not None:
        N = cfg["n"]
        target = OneBodyRDM.from_vector(N, cfg["gamma"])
        w = op_onsite_interaction(FockBasis(N), cfg["sign"])
        q, res = qfim_functional_with_result(target, w, _options(cfg))
        if not res.converged:
            raise NumericalFailure("constrained search did not converge")
    else:
        N = cfg["n"]
        if N < 1:
            raise UsageError("witness needs N >= 1")
        basis = FockBasis(N)
        if cfg.get("state") == "coherent":
            state = spin_coherent_state(basis, math.pi / 2, 0.0)
        else:
            amps = np.zeros(N + 1)
            amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
            state = StateVector(basis, amps.astype(complex))
        q = qfim_from_state(state)
    directions = cfg.get("direction") or [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    rows = []
    for d in directions:
        v = np.asarray(d, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0 or abs(norm - 1.0) > 1e-12:
            raise UsageError(f"direction {tuple(d)} is not a unit vector")
        verdict = witness_depth(q, v, N)
        rows.append(
            {
                "n_x": verdict.direction[0],
                "n_y": verdict.direction[1],
                "n_z": verdict.direction[2],
                "qfi": verdict.qfi_value,
                "depth_lower_bound": verdict.depth_lower_bound,
                "bound_used": verdict.bound_used,
            }
        )
    conf = _public_config("witness", cfg, ("n", "state", "qfim_file"))
    conf["n"] = N
    _write(render(conf, tuple(rows[0]), rows, cfg["format"]), cfg["out"])
    return 0


_HANDLERS = {
    "sweep": cmd_sweep,
    "bec-map": cmd_bec_map,
    "verify": cmd_verify,
    "groundstate": cmd_groundstate,
    "witness": cmd_witness,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _merge(args)
        return _HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"rdmft-qfi: error: {exc}", file=sys.stderr)
        return 1
    except (RepresentabilityError, ValueError) as exc:
        print(f"rdmft-qfi: error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"rdmft-qfi: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
