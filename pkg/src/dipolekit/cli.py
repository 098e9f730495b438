"""Command-line front end.

Subcommands
    free    single-point free-space couplings
    box     finite-box couplings for one configuration
    sweep   orientation sweep of the box/free coupling ratio (CSV/JSON table)
    kernel  retarded memory-kernel trace
    check   oracle cross-check suites

Configuration can come from flags or from a JSON file (--config); flags win.
Numeric output uses 17 significant digits so files round-trip exactly.

Exit codes: 0 success, 1 check/tolerance failure, 2 configuration or
validation error, 3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import checks
from .box import BoxSpec, FullSumParams, xi_permanent_images, xi_transition_box
from .errors import ConvergenceError, DipoleKitError, ResonanceError, ValidationError
from .freespace import classical_coupling, xi_permanent, xi_transition
from .model import NATURAL, PairGeometry, TransitionSpec, unit_system
from .oracles import QuadratureSpec, kernel_reduction_scale, retarded_kernel

FIG_DIRECTION = np.array([1.0, 2.0, 3.0]) / np.sqrt(14.0)
SWEEP_FIELDS = ("phi", "r_over_L", "xi_free_reduced", "xi_box_reduced",
                "ratio", "shells_used")
RATIO_FLOOR = 1e-12


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_vec3(text: str, field: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"{field}: expected three comma-separated numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ValidationError(f"{field}: expected numeric components, got {text!r}") from None


def _merge(args: argparse.Namespace, config_path: str | None, defaults: dict) -> dict:
    """Effective options: flag if given, else config-file entry, else default."""
    file_cfg = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"config: cannot read {config_path}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ValidationError("config: top level must be a JSON object")
    out = {}
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        out[key] = flag_val if flag_val is not None else file_cfg.get(key, default)
    return out


def _geometry(opt: dict) -> PairGeometry:
    if opt["r"] is None:
        raise ValidationError("r: separation vector is required")
    r = opt["r"] if isinstance(opt["r"], np.ndarray) else _parse_vec3(str(opt["r"]), "r")
    return PairGeometry.from_separation(r)


def _moments(opt: dict) -> tuple[np.ndarray, np.ndarray]:
    out = []
    for key in ("m1", "m2"):
        if opt[key] is None:
            raise ValidationError(f"{key}: moment vector is required")
        v = opt[key]
        out.append(v if isinstance(v, np.ndarray) else _parse_vec3(str(v), key))
    return out[0], out[1]


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_record(record: dict, fmt: str, out_path: str | None) -> None:
    fh, close = _open_out(out_path)
    try:
        if fmt == "json":
            json.dump(record, fh, indent=2)
            fh.write("\n")
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(record.keys())
            writer.writerow(_fmt(v) if isinstance(v, float) else v
                            for v in record.values())
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# free

def cmd_free(opt: dict) -> int:
    units = unit_system(opt["units"])
    m1, m2 = _moments(opt)
    geom = _geometry(opt)
    cl = classical_coupling(m1, m2, geom, units)
    record = {
        "r": geom.r,
        "units": units.name,
        "classical_xi": cl.xi,
        "classical_reduced": cl.reduced,
        "permanent_xi": xi_permanent(m1, m2, geom, units).xi,
        "permanent_reduced": cl.reduced,
    }
    if opt["omega"] is not None:
        ts = TransitionSpec(omega=float(opt["omega"]))
        tr = xi_transition(m1, m2, geom, ts, units)
        record["x_omega"] = ts.x_omega(geom, units)
        record["transition_xi"] = tr.xi
        record["transition_reduced"] = tr.reduced
        record["t_over_p"] = tr.xi / cl.xi if cl.xi != 0.0 else float("nan")
    _write_record(record, opt["format"], opt["out"])
    return 0


# ---------------------------------------------------------------------------
# box

def cmd_box(opt: dict) -> int:
    units = unit_system(opt["units"])
    m1, m2 = _moments(opt)
    geom = _geometry(opt)
    if opt["L"] is None:
        raise ValidationError("L: box edge is required")
    box = BoxSpec(L=float(opt["L"]))
    shell_max = int(opt["shell_max"])
    img = xi_permanent_images(m1, m2, geom, box, shell_max=shell_max,
                              tol=opt["tol"], units=units)
    free = xi_permanent(m1, m2, PairGeometry.from_separation(box.min_image(geom.r_vec)),
                        units)
    record = {
        "L": box.L,
        "units": units.name,
        "permanent_box_xi": img.xi,
        "permanent_box_reduced": img.reduced,
        "permanent_free_reduced": free.reduced,
        "ratio": (img.xi / free.xi if abs(free.reduced) > RATIO_FLOOR else "DIV"),
        "shells_used": img.meta.shells_used,
        "last_shell_delta": img.meta.last_shell_delta,
    }
    if opt["omega"] is not None:
        ts = TransitionSpec(omega=float(opt["omega"]))
        estimator = {"near": "near_resonant", "full": "full_sum"}.get(
            opt["estimator"], opt["estimator"])
        tr = xi_transition_box(
            m1, m2, geom, box, ts, estimator=estimator,
            window=opt["window"],
            full_params=FullSumParams(omega_sigma=float(opt["omega_sigma"])),
            units=units)
        record["transition_box_xi"] = tr.xi
        record["transition_box_reduced"] = tr.reduced
        record["transition_estimator"] = estimator
        record["transition_mode_count"] = tr.meta.mode_count
        if tr.meta.note:
            record["transition_note"] = tr.meta.note
    _write_record(record, opt["format"], opt["out"])
    return 0


# ---------------------------------------------------------------------------
# sweep

def sweep_rows(phi_start: float, phi_end: float, n_phi: int, r_over_l: list[float],
               box_L: float, shell_max: int, tol: float | None,
               units_name: str = "natural") -> tuple[list[dict], int]:
    """Deterministic sweep table; returns (rows, warning_count).

    Both dipoles are parallel with direction (cos phi, 0, sin phi); the
    separation points along (1,2,3)/sqrt(14).  A row is flagged "DIV" when
    the free-space reduced coupling vanishes below the floor or changes sign
    against a periodic neighbour (the zero crossing falls between grid
    points).  Convergence failures are recorded as ratio "FAIL" in-row.
    """
    units = unit_system(units_name)
    box = BoxSpec(L=box_L)
    phis = phi_start + (phi_end - phi_start) * np.arange(n_phi) / n_phi
    rows = []
    warnings = 0
    for rl in r_over_l:
        geoms = PairGeometry.from_separation(rl * box_L * FIG_DIRECTION)
        free_red = np.empty(n_phi)
        box_red = np.empty(n_phi)
        shells = np.empty(n_phi, dtype=int)
        failed = np.zeros(n_phi, dtype=bool)
        for j, phi in enumerate(phis):
            m = np.array([np.cos(phi), 0.0, np.sin(phi)])
            free_red[j] = classical_coupling(m, m, geoms, units).reduced
            try:
                img = xi_permanent_images(m, m, geoms, box, shell_max=shell_max,
                                          tol=tol, units=units)
                box_red[j] = img.reduced
                shells[j] = img.meta.shells_used
            except ConvergenceError as exc:
                box_red[j] = np.nan if not exc.series else (
                    sum(exc.series) * geoms.r**3
                    / (units.mu0_over_4pi * np.linalg.norm(m) ** 2))
                shells[j] = shell_max
                failed[j] = True
                warnings += 1
        sign = np.sign(free_red)
        crossing = (sign != np.roll(sign, -1)) | (sign != np.roll(sign, 1))
        for j, phi in enumerate(phis):
            if failed[j]:
                ratio = "FAIL"
            elif abs(free_red[j]) <= RATIO_FLOOR or crossing[j]:
                ratio = "DIV"
            else:
                ratio = box_red[j] / free_red[j]
            rows.append({
                "phi": float(phi),
                "r_over_L": float(rl),
                "xi_free_reduced": float(free_red[j]),
                "xi_box_reduced": float(box_red[j]),
                "ratio": ratio,
                "shells_used": int(shells[j]),
            })
    return rows, warnings


def sweep_rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_FIELDS)
    for row in rows:
        writer.writerow([
            _fmt(row["phi"]), _fmt(row["r_over_L"]),
            _fmt(row["xi_free_reduced"]), _fmt(row["xi_box_reduced"]),
            row["ratio"] if isinstance(row["ratio"], str) else _fmt(row["ratio"]),
            str(row["shells_used"]),
        ])
    return buf.getvalue()


def sweep_rows_to_json(rows: list[dict]) -> str:
    return json.dumps({"rows": rows}, indent=2) + "\n"


def sweep_rows_from_json(text: str) -> list[dict]:
    data = json.loads(text)
    rows = []
    for raw in data["rows"]:
        row = {key: raw[key] for key in SWEEP_FIELDS}
        rows.append(row)
    return rows


def cmd_sweep(opt: dict) -> int:
    r_over_l = opt["r_over_l"]
    if isinstance(r_over_l, str):
        r_over_l = [float(p) for p in r_over_l.split(",")]
    rows, warnings = sweep_rows(
        phi_start=float(opt["phi_start"]), phi_end=float(opt["phi_end"]),
        n_phi=int(opt["n_phi"]), r_over_l=[float(v) for v in r_over_l],
        box_L=float(opt["L"]), shell_max=int(opt["shell_max"]),
        tol=opt["tol"], units_name=opt["units"])
    text = (sweep_rows_to_json(rows) if opt["format"] == "json"
            else sweep_rows_to_csv(rows))
    fh, close = _open_out(opt["out"])
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    if warnings:
        print(f"warning: {warnings} rows did not converge", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# kernel

def cmd_kernel(opt: dict) -> int:
    units = unit_system(opt["units"])
    m1, m2 = _moments(opt)
    geom = _geometry(opt)
    omega_cut = opt["omega_cut"]
    if omega_cut is None:
        omega_cut = 50.0 * units.c / geom.r
    omega_cut = float(omega_cut)
    if omega_cut <= 0.0:
        raise ValidationError("omega_cut must be positive")
    s_max = float(opt["s_max"]) if opt["s_max"] is not None else 3.0 * geom.r / units.c
    n_s = int(opt["n_s"])
    s_grid = np.linspace(0.0, s_max, n_s)
    spec = QuadratureSpec(omega_cut=omega_cut)
    points = retarded_kernel(m1, m2, geom, s_grid, spec, units)
    scale = kernel_reduction_scale(m1, m2, geom, units)
    sigma = s_grid * units.c / geom.r
    reduced = np.array([p.value for p in points]) * scale
    peak = float(sigma[int(np.argmax(np.abs(reduced)))])

    fh, close = _open_out(opt["out"])
    try:
        if opt["format"] == "json":
            json.dump({"rows": [{"s_c_over_r": float(sc), "kernel_reduced": float(v)}
                                for sc, v in zip(sigma, reduced)],
                       "peak_s_c_over_r": peak}, fh, indent=2)
            fh.write("\n")
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["s_c_over_r", "kernel_reduced"])
            for sc, v in zip(sigma, reduced):
                writer.writerow([_fmt(float(sc)), _fmt(float(v))])
            fh.write(f"# peak_s_c_over_r = {_fmt(peak)}\n")
    finally:
        if close:
            fh.close()
    if close:
        print(f"peak_s_c_over_r = {_fmt(peak)}")
    return 0


# ---------------------------------------------------------------------------
# check

def cmd_check(opt: dict) -> int:
    units = unit_system(opt["units"])
    results = checks.run_all(seed=int(opt["seed"]), count=int(opt["count"]),
                             tol_override=opt["tol"], units=units)
    fh, close = _open_out(opt["out"])
    try:
        if opt["format"] == "json":
            json.dump({"suites": [{"name": s.name, "max_dev": s.max_dev,
                                   "tol": s.tol, "cases": s.cases,
                                   "passed": s.passed} for s in results]},
                      fh, indent=2)
            fh.write("\n")
        else:
            for s in results:
                fh.write(f"{s.name}: max_dev={s.max_dev:.3e} tol={s.tol:.3e} "
                         f"cases={s.cases} {'PASS' if s.passed else 'FAIL'}\n")
    finally:
        if close:
            fh.close()
    return 0 if all(s.passed for s in results) else 1


# ---------------------------------------------------------------------------

_COMMON_DEFAULTS = {"units": "natural", "format": "csv", "out": None, "tol": None}

_DEFAULTS = {
    "free": {**_COMMON_DEFAULTS, "format": "json", "m1": None, "m2": None,
             "r": None, "omega": None},
    "box": {**_COMMON_DEFAULTS, "format": "json", "m1": None, "m2": None,
            "r": None, "L": None, "omega": None, "estimator": "near",
            "window": None, "omega_sigma": 0.0, "shell_max": 8},
    "sweep": {**_COMMON_DEFAULTS, "L": 1.0, "phi_start": 0.0,
              "phi_end": 2.0 * np.pi, "n_phi": 361,
              "r_over_l": [0.1, 0.2, 0.3, 0.4], "shell_max": 8},
    "kernel": {**_COMMON_DEFAULTS, "m1": None, "m2": None, "r": None,
               "omega_cut": None, "s_max": None, "n_s": 301},
    "check": {**_COMMON_DEFAULTS, "seed": 1234, "count": 10},
}

_HANDLERS = {"free": cmd_free, "box": cmd_box, "sweep": cmd_sweep,
             "kernel": cmd_kernel, "check": cmd_check}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dipolekit",
        description="Field-mediated magnetic dipole-dipole coupling strengths.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--units", choices=["natural", "si"])
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--tol", type=float, help="tolerance override")

    p = sub.add_parser("free", help="free-space couplings for one configuration")
    add_common(p)
    p.add_argument("--m1", help="moment 1 as x,y,z")
    p.add_argument("--m2", help="moment 2 as x,y,z")
    p.add_argument("--r", help="separation vector as x,y,z")
    p.add_argument("--omega", type=float, help="transition frequency")

    p = sub.add_parser("box", help="periodic-box couplings for one configuration")
    add_common(p)
    p.add_argument("--m1", help="moment 1 as x,y,z")
    p.add_argument("--m2", help="moment 2 as x,y,z")
    p.add_argument("--r", help="separation vector as x,y,z")
    p.add_argument("--L", type=float, help="box edge")
    p.add_argument("--omega", type=float, help="transition frequency")
    p.add_argument("--estimator", choices=["near", "full"],
                   help="transition estimator (default near)")
    p.add_argument("--window", type=float, help="near-resonant window width")
    p.add_argument("--omega-sigma", dest="omega_sigma", type=float,
                   help="frequency-averaging width for the full estimator")
    p.add_argument("--shell-max", dest="shell_max", type=int)

    p = sub.add_parser("sweep", help="orientation sweep of box/free ratio")
    add_common(p)
    p.add_argument("--L", type=float, help="box edge")
    p.add_argument("--phi-start", dest="phi_start", type=float)
    p.add_argument("--phi-end", dest="phi_end", type=float)
    p.add_argument("--n-phi", dest="n_phi", type=int)
    p.add_argument("--r-over-l", dest="r_over_l",
                   help="comma-separated r/L values")
    p.add_argument("--shell-max", dest="shell_max", type=int)

    p = sub.add_parser("kernel", help="retarded memory-kernel trace")
    add_common(p)
    p.add_argument("--m1", help="moment 1 as x,y,z")
    p.add_argument("--m2", help="moment 2 as x,y,z")
    p.add_argument("--r", help="separation vector as x,y,z")
    p.add_argument("--omega-cut", dest="omega_cut", type=float)
    p.add_argument("--s-max", dest="s_max", type=float)
    p.add_argument("--n-s", dest="n_s", type=int)

    p = sub.add_parser("check", help="run the oracle cross-check suites")
    add_common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opt = _merge(args, args.config, _DEFAULTS[args.command])
        return _HANDLERS[args.command](opt)
    except ValidationError as exc:
        print(f"dipolekit: {exc}", file=sys.stderr)
        return 2
    except ResonanceError as exc:
        print(f"dipolekit: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"dipolekit: {exc}", file=sys.stderr)
        return 3
    except DipoleKitError as exc:
        print(f"dipolekit: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
