"""Command-line front end.

Every subcommand resolves a configuration in three layers, later layers
winning: built-in defaults, the JSON document given by ``--config``, then
flags given explicitly on the command line.  The master seed comes from
``--seed``, the config's ``seed`` field or ``CUSPFLOW_SEED``, in that order,
and is mandatory.

Each run writes ``<output>.csv`` (schema header ``# cuspflow-schema v1``)
and ``<output>.json`` holding the resolved config, the version string and a
summary, and prints the summary to stdout.

Exit codes: 0 success, 2 invalid input, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidParameter, NumericalGuardError
from .group import FactorKind
from .lattice import LatticeSpec

SCHEMA = "# cuspflow-schema v1"
EXIT_OK, EXIT_INVALID, EXIT_GUARD = 0, 2, 3

# (flag, dest, type, default, help); defaults are echoed in the metadata
_COMMON = [
    ("--lattice", "lattice", str, "sl2z", "sl2z, sl2zi or gamma0:N"),
    ("--workers", "workers", int, 1, "number of sampling streams"),
    ("--output", "output", str, None, "output path prefix (default: cuspflow-<command>)"),
]
_FPARAMS = [
    ("--lambda", "lam", float, 4.0, "concentration parameter lambda"),
    ("--eps", "eps", float, 0.2, "support exponent eps"),
    ("--tail-tol", "tail_tol", float, 1e-3, "SU(2) projection tail tolerance"),
]
_SCHEDULE = [
    ("--eps", "eps", float, 0.2, "target schedule exponent (> 0)"),
    ("--sign", "sign", int, -1, "+1 convergent, -1 divergent"),
    ("--p-factor", "p_factor", int, 2, "window end p(k) = p_factor k"),
]
COMMANDS = {
    "loglaw": [
        ("--horizon", "horizon", float, 1e6, "orbit length T"),
        ("--orbits", "orbits", int, 100, "number of orbits"),
        ("--stride", "stride", float, 1.0, "sampling stride in s"),
        ("--s-min", "s_min", float, 100.0, "burn-in before the ratio is recorded"),
    ],
    "shrink": _SCHEDULE[:2] + [
        ("--lmax", "lmax", int, 1_000_000, "last target index L_max"),
        ("--orbits", "orbits", int, 100, "number of orbits"),
        ("--beyond", "beyond", int, 10_000, "also count hits with l above this"),
    ],
    "theta-norm": _FPARAMS + [
        ("--method", "method", str, "both", "direct, spectral or both"),
        ("--samples", "samples", int, 200_000, "Monte Carlo samples"),
    ],
    "siegel": _FPARAMS + [
        ("--samples", "samples", int, 100_000, "Haar samples"),
    ],
    "dk-measure": _SCHEDULE + [
        ("--k", "k", str, "8,16,32,64", "comma-separated k values"),
        ("--samples", "samples", int, 200_000, "Monte Carlo samples per k"),
    ],
    "ydk-measure": _SCHEDULE + [
        ("--k", "k", str, "8,16,32", "comma-separated k values"),
        ("--samples", "samples", int, 100_000, "Haar samples per k"),
    ],
    "scattering-scan": [
        ("--r-min", "r_min", float, 0.1, "start of the scan on s = 1/2 + ir"),
        ("--r-max", "r_max", float, 20.0, "end of the scan"),
        ("--points", "points", int, 200, "number of r values"),
    ],
    "pm-table": [
        ("--m-max", "m_max", int, 64, "largest m"),
        ("--s", "s", str, "0.6,0.75,0.9,1.0", "comma-separated s values"),
        ("--case", "case", str, "real", "real or complex"),
    ],
    "identity-check": [
        ("--s", "s", str, "0.6,0.75", "comma-separated s values"),
        ("--m", "m", str, "0,1,2,3", "comma-separated m values"),
        ("--case", "case", str, "real", "real or complex"),
        ("--points", "points", int, 100, "random points per (s, m)"),
    ],
}


def version_string() -> str:
    """``<version>+g<sha>`` inside a git checkout, the bare version otherwise."""
    try:
        sha = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5, check=True).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        return __version__
    return f"{__version__}+g{sha}" if sha else __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuspflow", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"cuspflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config document")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                       help="master seed (falls back to CUSPFLOW_SEED)")
        for flag, dest, typ, _, hlp in _COMMON + opts:
            # SUPPRESS lets resolve_config tell explicit flags from defaults
            p.add_argument(flag, dest=dest, type=typ, default=argparse.SUPPRESS, help=hlp)
    return parser


def resolve_config(ns: argparse.Namespace, environ=os.environ) -> dict:
    """Merge defaults, the ``--config`` document and explicit flags."""
    cmd = ns.command
    cfg = {dest: default for _, dest, _, default, _ in _COMMON + COMMANDS[cmd]}
    known = set(cfg) | {"seed"}
    if ns.config:
        try:
            doc = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameter(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise InvalidParameter("config must be a JSON object")
        doc = {k.replace("-", "_"): v for k, v in doc.items() if k != "command"}
        unknown = set(doc) - known
        if unknown:
            raise InvalidParameter(f"unknown config fields for {cmd}: {sorted(unknown)}")
        cfg.update(doc)
    cfg.update({k: v for k, v in vars(ns).items() if k in known})
    if cfg.get("seed") is None:
        env = environ.get("CUSPFLOW_SEED")
        if env is None:
            raise InvalidParameter("master seed is mandatory: pass --seed or set CUSPFLOW_SEED")
        try:
            cfg["seed"] = int(env)
        except ValueError:
            raise InvalidParameter(f"CUSPFLOW_SEED must be an integer, got {env!r}") from None
    if cfg["output"] is None:
        cfg["output"] = f"cuspflow-{cmd}"
    cfg["command"] = cmd
    _validate(cfg)
    return cfg


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InvalidParameter(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text) -> list:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise InvalidParameter(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _validate(cfg: dict) -> None:
    def positive(name):
        if name in cfg and not (isinstance(cfg[name], (int, float)) and cfg[name] > 0):
            raise InvalidParameter(f"{name} must be positive, got {cfg[name]!r}")

    for name in ("workers", "horizon", "orbits", "stride", "samples", "lmax", "points",
                 "m_max", "lam", "tail_tol"):
        positive(name)
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise InvalidParameter("seed must be a non-negative integer")
    LatticeSpec.parse(cfg["lattice"])
    if "method" in cfg and cfg["method"] not in ("direct", "spectral", "both"):
        raise InvalidParameter(f"method must be direct, spectral or both, got {cfg['method']!r}")
    if "case" in cfg:
        FactorKind.parse(cfg["case"])
    if "eps" in cfg and "sign" in cfg:
        from .dynamics import TargetSchedule

        TargetSchedule(cfg["eps"], cfg["sign"], cfg.get("p_factor", 2))
    elif "eps" in cfg and not (0 < cfg["eps"] < 0.5):
        raise InvalidParameter(f"eps must lie in (0, 1/2), got {cfg['eps']!r}")
    if "r_min" in cfg and not 0 < cfg["r_min"] < cfg["r_max"]:
        raise InvalidParameter("need 0 < r_min < r_max")


# ---------------------------------------------------------------------------
# experiments: each returns (csv header, csv rows, summary dict)

def _test_function(cfg, L):
    from .testfn import f_lambda_complex, f_lambda_real

    if L.is_complex:
        return f_lambda_complex(cfg["lam"], cfg["eps"], tail_tol=cfg["tail_tol"])
    return f_lambda_real(cfg["lam"], cfg["eps"])


def _run_loglaw(cfg, L):
    from .dynamics import iter_orbits

    rows, finals = [], []
    orbits = iter_orbits(L, cfg["orbits"], cfg["horizon"], cfg["seed"], cfg["stride"], cfg["s_min"])
    for i, rec in enumerate(orbits):
        finals.append(rec.final_ratio)
        rows.append([i, repr(rec.final_ratio), repr(float(rec.deltas.max()))])
    summary = {"median_ratio": float(np.median(finals)), "mean_ratio": float(np.mean(finals)),
               "target": 1.0}
    return ["orbit", "running_max_ratio", "max_delta"], rows, summary


def _run_shrink(cfg, L):
    from .dynamics import TargetSchedule, hits_from_deltas, iter_orbits

    sched = TargetSchedule(cfg["eps"], cfg["sign"])
    rows, totals, beyond = [], [], []
    for i, rec in enumerate(iter_orbits(L, cfg["orbits"], float(cfg["lmax"]), cfg["seed"])):
        hits = hits_from_deltas(rec.deltas, sched)
        n_beyond = int(np.sum(hits > cfg["beyond"]))
        totals.append(hits.size)
        beyond.append(n_beyond)
        rows.append([i, hits.size, n_beyond, int(hits[-1]) if hits.size else ""])
    summary = {"median_hits": float(np.median(totals)),
               "frac_beyond_le_2": float(np.mean(np.array(beyond) <= 2)),
               "divergent": sched.divergent}
    return ["orbit", "hits", f"hits_beyond_{cfg['beyond']}", "last_hit"], rows, summary


def _run_theta_norm(cfg, L):
    from .spectral import spectral_theta_norm
    from .theta import direct_theta_norm

    f = _test_function(cfg, L)
    rows, summary = [], {"f": f.describe()}
    if cfg["method"] in ("spectral", "both"):
        rep = spectral_theta_norm(f, L)
        summary["spectral"] = rep.total
        summary["spectral_terms"] = rep.to_dict()
        rows.append(["spectral", repr(rep.total), ""])
    if cfg["method"] in ("direct", "both"):
        est = direct_theta_norm(f, L, cfg["samples"], cfg["seed"], cfg["workers"])
        summary["direct"] = est.mean
        summary["direct_se"] = est.std_error
        rows.append(["direct", repr(est.mean), repr(est.std_error)])
    if cfg["method"] == "both":
        summary["rel_diff"] = abs(summary["direct"] - summary["spectral"]) / summary["spectral"]
    return ["method", "value", "std_error"], rows, summary


def _run_siegel(cfg, L):
    from .theta import siegel_mean

    f = _test_function(cfg, L)
    est = siegel_mean(f, L, cfg["samples"], cfg["seed"], cfg["workers"])
    expected = est.extra["expected"]
    summary = {"mean": est.mean, "se": est.std_error, "expected": expected,
               "z": (est.mean - expected) / est.std_error, "f": f.describe()}
    return ["mean", "std_error", "expected"], [[repr(est.mean), repr(est.std_error), repr(expected)]], summary


def _dk_specs(cfg, L):
    from .dynamics import DkSpec, TargetSchedule

    sched = TargetSchedule(cfg["eps"], cfg["sign"], cfg["p_factor"])
    return [DkSpec(k, sched, L) for k in _ints(cfg["k"])]


def _run_dk(cfg, L):
    from .dynamics import dk_volume_exact, measure_dk

    rows = []
    for i, spec in enumerate(_dk_specs(cfg, L)):
        est = measure_dk(spec, cfg["samples"], cfg["seed"] + i)
        rows.append([spec.k, repr(est.mean), repr(est.std_error), repr(dk_volume_exact(spec))])
    vals = [float(r[1]) for r in rows]
    summary = {"increasing": bool(np.all(np.diff(vals) > 0))}
    return ["k", "measure", "std_error", "quadrature"], rows, summary


def _run_ydk(cfg, L):
    from .dynamics import measure_ydk

    rows = []
    for i, spec in enumerate(_dk_specs(cfg, L)):
        est = measure_ydk(spec, cfg["samples"], cfg["seed"] + i)
        rows.append([spec.k, repr(est.mean), repr(est.std_error), est.extra["witness_ok"]])
    summary = {"min_measure": min(float(r[1]) for r in rows),
               "witness_ok": all(r[3] for r in rows)}
    return ["k", "measure", "std_error", "witness_ok"], rows, summary


def _run_scattering(cfg, L):
    from .special import scattering_C, scattering_residue

    rs = np.linspace(cfg["r_min"], cfg["r_max"], cfg["points"])
    rows = []
    for r in rs:
        c = scattering_C(0.5 + 1j * r, L)
        rows.append([repr(float(r)), repr(c.real), repr(c.imag), repr(abs(c))])
    mods = np.array([float(r[3]) for r in rows])
    summary = {"max_unitarity_error": float(np.max(np.abs(mods - 1.0))),
               "residue_at_1": scattering_residue(L), "c0": L.c0}
    return ["r", "re_C", "im_C", "abs_C"], rows, summary


def _run_pm(cfg, L):
    from .spectral import pm_table

    case = FactorKind.parse(cfg["case"])
    ss = _floats(cfg["s"])
    tab = pm_table(cfg["m_max"], ss, case.mu).real
    rows = [[m] + [repr(float(v)) for v in tab[m]] for m in range(cfg["m_max"] + 1)]
    return ["m"] + [f"P_m({s})" for s in ss], rows, {"mu": case.mu}


def _run_identity(cfg, L):
    from .spectral import operator_identity_check

    case = FactorKind.parse(cfg["case"])
    streams = np.random.SeedSequence(cfg["seed"]).spawn(len(_floats(cfg["s"])) * len(_ints(cfg["m"])))
    rows, worst, j = [], 0.0, 0
    for s in _floats(cfg["s"]):
        for m in _ints(cfg["m"]):
            rep = operator_identity_check(s, m, case, cfg["points"], np.random.default_rng(streams[j]))
            j += 1
            worst = max(worst, rep.max_rel_residual)
            spread = "" if rep.ratio_spread is None else repr(rep.ratio_spread)
            rows.append([s, m, repr(rep.max_rel_residual), spread])
    return ["s", "m", "max_rel_residual", "ratio_spread"], rows, {"max_rel_residual": worst}


RUNNERS = {
    "loglaw": _run_loglaw,
    "shrink": _run_shrink,
    "theta-norm": _run_theta_norm,
    "siegel": _run_siegel,
    "dk-measure": _run_dk,
    "ydk-measure": _run_ydk,
    "scattering-scan": _run_scattering,
    "pm-table": _run_pm,
    "identity-check": _run_identity,
}


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def run(cfg: dict) -> dict:
    """Execute a resolved config; write the CSV and JSON files; return the metadata."""
    L = LatticeSpec.parse(cfg["lattice"])
    header, rows, summary = RUNNERS[cfg["command"]](cfg, L)
    out = Path(cfg["output"])
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    Path(f"{out}.csv").write_text(format_csv(header, rows), encoding="utf-8", newline="")
    meta = {"config": cfg, "version": version_string(), "lattice": L.to_dict(),
            "backend": _backend_name(), "summary": summary}
    Path(f"{out}.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable),
                                   encoding="utf-8")
    return meta


def _backend_name() -> str:
    from ._backend import requested_backend

    return requested_backend()


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        meta = run(cfg)
    except InvalidParameter as exc:
        print(f"cuspflow: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalGuardError as exc:
        print(f"cuspflow: numerical guard tripped ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_GUARD
    print(json.dumps(meta["summary"], indent=2, sort_keys=True, default=_jsonable))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
