"""Command-line front end: scans, profiles, spectra, evolution, inversion and reports.

Exit codes: 0 ok, 1 flagged results or a failed computation, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from . import quadrature as qd
from .domains import ModelCase, domain_contains, e_minus
from .errors import OutOfRange, OutsideImage, PWLabError, BlowUp

EXIT_OK, EXIT_FLAGGED, EXIT_USAGE = 0, 1, 2

DEFAULTS = {"case": "defocusing", "J": None, "E": None, "T": None, "Psi": None,
            "n": 10, "modes": 64, "grid_n": 256, "dt": 1e-3, "t_end": None, "eps": 1e-3,
            "seed": 0, "out": None, "threshold": 10.0}


class UsageError(Exception):
    pass


def _num(s) -> float:
    try:
        return float(s)
    except (TypeError, ValueError):
        raise UsageError(f"not a number: {s!r}") from None


def parse_J(text) -> list:
    """'a..b' gives integer steps from a to b; 'a,b,c' a list; otherwise one value."""
    text = str(text).strip()
    if ".." in text:
        a, b = (_num(x) for x in text.split("..", 1))
        if b < a:
            return []
        return [a + i for i in range(int(math.floor(b - a + 1e-12)) + 1)]
    return [_num(x) for x in text.split(",") if x.strip()]


def parse_E(text, n: int, case: ModelCase, J: float) -> list:
    """'a..b' gives n equispaced points; 'auto' stands for E_-(J) + 0.05."""
    text = str(text).strip()

    def val(x):
        x = x.strip()
        return e_minus(case, J) + 0.05 if x == "auto" else _num(x)

    if ".." in text:
        a, b = (val(x) for x in text.split("..", 1))
        if n < 1 or b < a:
            return []
        return list(np.linspace(a, b, n)) if n > 1 else [a]
    return [val(x) for x in text.split(",") if x.strip()]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return "nan"
    return f"{float(v):.17g}"


def _header(cfg: dict) -> str:
    echo = {k: v for k, v in sorted(cfg.items()) if k != "config"}
    return f"pwlab {__version__} " + json.dumps(echo, sort_keys=True, default=str)


def _write(path: Optional[str], text: str):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o))

    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.floating):
            return clean(float(o))
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True, default=default) + "\n"


def _case(cfg) -> ModelCase:
    try:
        return ModelCase.from_name(cfg["case"])
    except OutOfRange as exc:
        raise UsageError(str(exc)) from None


def _point(cfg, case):
    """(J, E) from the config, inverting (T, Psi) when those are given instead."""
    have_je = cfg.get("J") is not None and cfg.get("E") is not None
    have_tp = cfg.get("T") is not None and cfg.get("Psi") is not None
    if have_je == have_tp:
        raise UsageError("give exactly one of (--J, --E) or (--T, --Psi)")
    if have_tp:
        inv = qd.invert_TPsi(case, _num(cfg["T"]), _num(cfg["Psi"]))
        return inv.J, inv.E
    J, E = _num(cfg["J"]), _num(cfg["E"])
    if not domain_contains(case, (J, E)).interior:
        raise UsageError(f"(J, E) = ({J}, {E}) is not inside the {case.name} domain")
    return J, E


# ---------------------------------------------------------------------------
# commands


def cmd_scan(cfg) -> int:
    from .stability import SCAN_FIELDS, scan_points
    case = _case(cfg)
    if cfg.get("J") is None or cfg.get("E") is None:
        raise UsageError("scan needs --J and --E grid specs")
    pts = []
    for J in parse_J(cfg["J"]):
        for E in parse_E(cfg["E"], int(cfg["n"]), case, J):
            pts.append((J, E))
    if not pts:
        raise UsageError("empty grid")
    rows = scan_points(case, pts)
    lines = ["# " + _header(cfg), ",".join(SCAN_FIELDS)]
    for r in rows:
        lines.append(",".join(_fmt(r[f]) for f in SCAN_FIELDS))
    _write(cfg.get("out"), "\n".join(lines) + "\n")
    return EXIT_FLAGGED if any(r["flag"] for r in rows) else EXIT_OK


def cmd_profile(cfg) -> int:
    from .profile import export_csv, functionals, shoot_profile, stationarity_residual
    case = _case(cfg)
    J, E = _point(cfg, case)
    prof = shoot_profile(case, (J, E), int(cfg["grid_n"]))
    N, M, En = functionals(prof)
    summary = {"case": case.name, "J": J, "E": E, "T": prof.T, "Phi": prof.wn.Phi,
               "Psi": prof.wn.Psi, "k": prof.k, "p": prof.p, "gridN": prof.gridN,
               "N": N, "M": M, "energy": En, "residual": stationarity_residual(prof)}
    if cfg.get("out"):
        export_csv(prof, cfg["out"], {"config": _header(cfg)})
    sys.stdout.write(_json(summary))
    return EXIT_OK


def _spectrum(case, J, E, grid_n, modes):
    from .profile import shoot_profile
    from .spectral import assemble_H, spectrum_low
    prof = shoot_profile(case, (J, E), grid_n)
    op = assemble_H(prof, modes)
    return prof, op, spectrum_low(op, profile=prof)


def cmd_spectrum(cfg) -> int:
    case = _case(cfg)
    J, E = _point(cfg, case)
    _, _, rep = _spectrum(case, J, E, int(cfg["grid_n"]), int(cfg["modes"]))
    report = {"case": case.name, "J": J, "E": E, **rep.to_json()}
    out = cfg.get("out")
    if out:
        lines = ["# " + _header(cfg), "index,eigenvalue"]
        lines += [f"{i},{_fmt(w)}" for i, w in enumerate(rep.eigenvalues)]
        _write(out, "\n".join(lines) + "\n")
        _write(out + ".json", _json(report))
    sys.stdout.write(_json(report))
    ok = rep.n_negative == 1 and rep.kernel_dim_estimate == 2
    return EXIT_OK if ok else EXIT_FLAGGED


def cmd_evolve(cfg) -> int:
    from .dynamics import stability_experiment
    from .profile import export_csv, shoot_profile
    case = _case(cfg)
    J, E = _point(cfg, case)
    t_end = float(cfg["t_end"]) if cfg.get("t_end") is not None else 10.0
    eps = float(cfg["eps"])
    try:
        ratio, trace = stability_experiment(case, (J, E), eps, t_end, int(cfg["seed"]),
                                            int(cfg["grid_n"]), float(cfg["dt"]))
        blow = None
    except BlowUp as exc:
        ratio, trace, blow = math.inf, exc.trace, exc.time
    out = cfg.get("out")
    if out and trace is not None:
        trace.to_csv(out, _header(cfg))
        prof = shoot_profile(case, (J, E), int(cfg["grid_n"]), escalate=False)
        export_csv(prof, out + ".final.csv", {"config": _header(cfg), "t": float(trace.times[-1])},
                   Q=trace.finalState)
    summary = {"case": case.name, "J": J, "E": E, "eps": eps, "t_end": t_end,
               "max_ratio": ratio, "blowup_time": blow,
               "max_driftN": float(np.max(trace.driftN)) if trace is not None else None,
               "max_driftM": float(np.max(trace.driftM)) if trace is not None else None}
    sys.stdout.write(_json(summary))
    return EXIT_OK if ratio <= float(cfg["threshold"]) else EXIT_FLAGGED


def cmd_invert(cfg) -> int:
    case = _case(cfg)
    if cfg.get("T") is None or cfg.get("Psi") is None:
        raise UsageError("invert needs --T and --Psi")
    inv = qd.invert_TPsi(case, _num(cfg["T"]), _num(cfg["Psi"]))
    T, Psi = qd.map_to_TPsi(case, inv)
    sys.stdout.write(_json({"case": case.name, "J": inv.J, "E": inv.E, "T": T, "Psi": Psi}))
    return EXIT_OK


def cmd_report(cfg) -> int:
    from .dynamics import stability_experiment
    from .stability import hessian_H
    case = _case(cfg)
    J, E = _point(cfg, case)
    out = {"case": case.name, "J": J, "E": E,
           "domain": domain_contains(case, (J, E)).kind}
    verdict = {}
    failures = {}
    wn = qd.wave_numbers(case, (J, E))
    out["wave_numbers"] = {"T": wn.T, "Phi": wn.Phi, "Psi": wn.Psi, "k": wn.k,
                           "ell": wn.ell, "p": wn.p, "action": wn.action}
    try:
        delta = qd.kam_delta(case, (J, E))
        out["Delta"] = delta
        verdict["delta_positive"] = bool(delta > 0)
    except PWLabError as exc:
        failures["delta"] = str(exc)
        verdict["delta_positive"] = False
    try:
        rep = hessian_H(case, (J, E))
        out["stability"] = {"M": rep.M, "K": rep.K, "H": rep.H, "detM": rep.detM,
                            "detK": rep.detK, "detH": rep.detH, "K_method": rep.K_method}
        verdict["detH_negative"] = bool(rep.detH < 0)
    except PWLabError as exc:
        failures["stability"] = str(exc)
        verdict["detH_negative"] = False
    try:
        _, _, srep = _spectrum(case, J, E, int(cfg["grid_n"]), int(cfg["modes"]))
        out["spectrum"] = srep.to_json()
        verdict["one_negative_eigenvalue"] = srep.n_negative == 1
        verdict["kernel_dim_two"] = srep.kernel_dim_estimate == 2
    except PWLabError as exc:
        failures["spectrum"] = str(exc)
        verdict["one_negative_eigenvalue"] = verdict["kernel_dim_two"] = False
    t_end = float(cfg["t_end"]) if cfg.get("t_end") is not None else 20.0
    try:
        ratio, _ = stability_experiment(case, (J, E), float(cfg["eps"]), t_end,
                                        int(cfg["seed"]), int(cfg["grid_n"]), float(cfg["dt"]))
        out["stability_experiment"] = {"t_end": t_end, "eps": float(cfg["eps"]), "max_ratio": ratio}
        verdict["orbitally_bounded"] = bool(ratio <= float(cfg["threshold"]))
    except PWLabError as exc:
        failures["stability_experiment"] = str(exc)
        verdict["orbitally_bounded"] = False
    out["verdict"] = verdict
    if failures:
        out["failures"] = failures
    text = _json(out)
    if cfg.get("out"):
        _write(cfg["out"], text)
    sys.stdout.write(text)
    return EXIT_OK if all(verdict.values()) else EXIT_FLAGGED


COMMANDS = {"scan": cmd_scan, "profile": cmd_profile, "spectrum": cmd_spectrum,
            "evolve": cmd_evolve, "invert": cmd_invert, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pwlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"pwlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--case", choices=["defocusing", "focusing-counter", "focusing-coro"])
        sp.add_argument("--J", help="value, list a,b,c, or range a..b (integer steps in scan)")
        sp.add_argument("--E", help="value, list, or range a..b with --n points; 'auto' = E_-(J)+0.05")
        sp.add_argument("--T", type=float)
        sp.add_argument("--Psi", type=float)
        sp.add_argument("--n", type=int, help="points per energy range (scan)")
        sp.add_argument("--modes", type=int, help="Fourier modes -n..n for the operator")
        sp.add_argument("--grid-n", dest="grid_n", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threshold", type=float, help="bound on sup rho/eps (default 10)")
        sp.add_argument("--out")
        sp.add_argument("--config", help="JSON file of settings; flags override it")
    return ap


def make_config(ns) -> dict:
    cfg = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        v = getattr(ns, key, None)
        if v is not None:
            cfg[key] = v
    gn = int(cfg["grid_n"])
    if gn < 64 or gn & (gn - 1):
        raise UsageError("--grid-n must be a power of two >= 64")
    if int(cfg["modes"]) < 16 or 2 * int(cfg["modes"]) + 1 > gn:
        raise UsageError("--modes must be >= 16 and below grid-n/2")
    if not 0 < float(cfg["dt"]) <= 1e-2:
        raise UsageError("--dt must be in (0, 1e-2]")
    if not 0 < float(cfg["eps"]) <= 1e-2:
        raise UsageError("--eps must be in (0, 1e-2]")
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = make_config(ns)
        return COMMANDS[ns.command](cfg)
    except (UsageError, OutOfRange, OutsideImage) as exc:
        sys.stderr.write(f"pwlab: error: {exc}\n")
        return EXIT_USAGE
    except PWLabError as exc:
        sys.stderr.write(f"pwlab: {type(exc).__name__}: {exc}\n")
        return EXIT_FLAGGED
