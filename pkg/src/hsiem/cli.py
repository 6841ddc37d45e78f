"""
HSIEM Command Line Interface
Subcommands producing CSV / JSON artifacts

Features:
- dtn, scatter1d, resonances, sequence-check, forms-check and convergence
- Flat KEY=value config files (--config) under command-line flags
- structlog verbosity via --verbose / --debug
- Exit codes: 0 success, 1 validation failure, 2 usage or config error
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from dotenv import dotenv_values

from hsiem import __version__
from hsiem.derham.derham_tensor import complex_dims, sweep_exactness
from hsiem.hardy.hardy_core import MoebiusParams
from hsiem.segment.segment_forms import GeometryError, PrismSegment, forms_check
from hsiem.solvers.convergence import (
    ConvergenceCase, StudyConfig, SweepParameter, convergence_study,
)
from hsiem.solvers.interval_1d import (
    Interval1DProblem, ProblemSetupError, dtn_1d, resonances_slab, slab_reference,
    solve_scattering_1d,
)
from hsiem.solvers.sphere_mode import ModeProblem, hankel_roots, resonances_sphere_mode
from hsiem.surface.surface_calc import MAX_SURFACE_DEGREE
from hsiem.utils.hsiem_utils import ConfigError, HSIEMError, hsiem_utils

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

OCTANT = "1,0,0;0,1,0;0,0,1"


# =================================================================
# CONFIGURATION
# =================================================================

@dataclass
class RunConfig:
    """Resolved options of one command: flags over config file over defaults"""
    command: str
    values: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace, defaults: Dict[str, Any]) -> "RunConfig":
        file_values: Dict[str, Any] = {}
        if args.config:
            if not Path(args.config).is_file():
                raise ConfigError(f"config file {args.config} does not exist")
            raw = dotenv_values(args.config)
            file_values = {k.strip().lower().replace("-", "_"): v for k, v in raw.items()
                           if v is not None}
        values = dict(defaults)
        for key, value in file_values.items():
            if key in defaults:
                values[key] = value
        for key, value in vars(args).items():
            if value is not None and key in defaults:
                values[key] = value
        return cls(args.command, values)

    def get_complex(self, key: str) -> complex:
        return hsiem_utils.parse_complex(self.values[key], key)

    def kappa0(self, key: str = "kappa0") -> complex:
        value = self.get_complex(key)
        if value.real <= 0:
            raise ConfigError(f"{key} must have positive real part, got {value}")
        return value

    def optional_complex(self, key: str) -> Optional[complex]:
        value = self.values.get(key)
        return None if value in (None, "") else hsiem_utils.parse_complex(value, key)

    def get_int(self, key: str) -> int:
        return self._number(key, int)

    def get_float(self, key: str) -> float:
        value = self._number(key, float)
        if not np.isfinite(value):
            raise ConfigError(f"{key} must be finite, got {value}")
        return value

    def get_str(self, key: str) -> Optional[str]:
        value = self.values.get(key)
        return None if value in (None, "") else str(value)

    def get_flag(self, key: str) -> bool:
        value = self.values.get(key)
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)

    def _number(self, key: str, kind: Callable):
        try:
            return kind(self.values[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {self.values[key]!r}")


def _int_range(text: str, name: str) -> List[int]:
    """'0-20', '3' or '2,4,8'"""
    text = str(text).strip()
    try:
        if "-" in text[1:]:
            lo, hi = text.split("-", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{name} must be 'a-b' or a comma separated list, got {text!r}")


def _points(text: str, name: str) -> np.ndarray:
    """'x,y,z' or 'x,y,z;x,y,z;x,y,z'"""
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
        return np.array(rows, dtype=float).squeeze()
    except ValueError:
        raise ConfigError(f"{name} must be comma separated coordinates, got {text!r}")


def _emit_csv(frame: pd.DataFrame, out: Optional[str]) -> None:
    text = hsiem_utils.write_csv(frame, out)
    if out is None:
        sys.stdout.write(text)
    else:
        logger.info("csv_written", path=out, rows=len(frame))


# =================================================================
# COMMANDS
# =================================================================

def cmd_dtn(cfg: RunConfig) -> int:
    kappa, kappa0 = cfg.get_complex("kappa"), cfg.kappa0()
    values = list(range(cfg.get_int("n_min"), cfg.get_int("n_max") + 1))
    dtn = hsiem_utils.map_ordered(lambda n: dtn_1d(kappa, kappa0, n), values)
    dtn = np.array(dtn, dtype=complex)
    frame = pd.DataFrame({
        "N": values,
        "dtn_re": dtn.real,
        "dtn_im": dtn.imag,
        "abs_error": np.abs(dtn + 1j * kappa),
    })
    _emit_csv(frame, cfg.get_str("out"))
    return EXIT_OK


def cmd_scatter1d(cfg: RunConfig) -> int:
    kappa, kappa0 = cfg.get_complex("kappa"), cfg.kappa0()
    order, elements = cfg.get_int("order"), cfg.get_int("elements")
    values = list(range(cfg.get_int("n_min"), cfg.get_int("n_max") + 1))

    def solve(n: int):
        return solve_scattering_1d(Interval1DProblem(
            kappa=kappa, kappa0=kappa0, N=n, elements=elements, order=order))

    results = hsiem_utils.map_ordered(solve, values)
    frame = pd.DataFrame({
        "N": values,
        "order": order,
        "elements": elements,
        "l2_error": [r.l2_error for r in results],
        "h1_error": [r.h1_error for r in results],
        "hardy_tail": [r.hardy_tail for r in results],
    })
    _emit_csv(frame, cfg.get_str("out"))
    return EXIT_OK


def _slab_reference_for(kappa: complex, eps_int: float) -> complex:
    m = max(1, int(round(kappa.real * np.sqrt(eps_int) / np.pi)))
    return slab_reference(eps_int, m)


def cmd_resonances(cfg: RunConfig) -> int:
    case = cfg.get_str("case")
    kappa0, N, k = cfg.kappa0(), cfg.get_int("n"), cfg.get_int("k")
    shift = cfg.optional_complex("shift")
    threshold = cfg.get_float("tail_threshold")
    if case == "slab":
        eps_int = cfg.get_float("eps")
        spectrum = resonances_slab(eps_int, kappa0, N, cfg.get_int("order"), k, shift=shift,
                                   elements=cfg.get_int("elements"), tail_threshold=threshold)
        refs = np.array([_slab_reference_for(x, eps_int) for x in spectrum.kappa], dtype=complex)
    elif case == "sphere":
        mode = ModeProblem(cfg.get_int("mode"), kappa0, N)
        spectrum = resonances_sphere_mode(mode, shift, k, tail_threshold=threshold)
        roots = hankel_roots(mode.n)
        if roots.size:
            refs = np.array([roots[np.argmin(np.abs(roots - x))] for x in spectrum.kappa],
                            dtype=complex)
        else:
            refs = np.full(len(spectrum), np.nan, dtype=complex)
    else:
        raise ConfigError(f"case must be 'slab' or 'sphere', got {case!r}")

    frame = pd.DataFrame({
        "index": np.arange(len(spectrum)),
        "kappa_re": spectrum.kappa.real,
        "kappa_im": spectrum.kappa.imag,
        "residual": spectrum.residuals,
        "ref_re": refs.real,
        "ref_im": refs.imag,
        "rel_error": np.abs(spectrum.kappa - refs) / np.abs(refs),
    })
    payload = spectrum.to_dict()
    payload["case"] = case
    payload["references"] = [None if np.isnan(r) else hsiem_utils.format_complex(r) for r in refs]

    out, json_path = cfg.get_str("out"), cfg.get_str("json")
    if out is not None:
        hsiem_utils.write_csv(frame, out)
    if json_path is not None:
        with open(json_path, "wb") as fh:
            fh.write(hsiem_utils.dumps_json(payload))
    if out is None and json_path is None:
        sys.stdout.write(hsiem_utils.dumps_json(payload).decode("utf-8") + "\n")
    return EXIT_OK


def cmd_sequence_check(cfg: RunConfig) -> int:
    p_min, n_min = cfg.get_int("p"), cfg.get_int("n")
    p_max = cfg.get_int("p_max") if cfg.values.get("p_max") is not None else p_min
    n_max = cfg.get_int("n_max") if cfg.values.get("n_max") is not None else n_min
    if not 1 <= p_min <= p_max <= MAX_SURFACE_DEGREE:
        raise ConfigError(f"need 1 <= p <= p-max <= {MAX_SURFACE_DEGREE}, "
                          f"got p={p_min} p-max={p_max}")
    if not 0 <= n_min <= n_max:
        raise ConfigError(f"need 0 <= n <= n-max, got n={n_min} n-max={n_max}")
    reports = sweep_exactness(range(p_min, p_max + 1), range(n_min, n_max + 1),
                              tol=cfg.get_float("tol"))
    rows = []
    for report in reports:
        dims = complex_dims(report.p, report.N)
        rows.append({
            "p": report.p, "N": report.N,
            "dimW": dims[0], "dimV": dims[1], "dimQ": dims[2], "dimX": dims[3],
            "comp1_norm": report.composition_norms[0],
            "comp2_norm": report.composition_norms[1],
            "pass": report.passed,
        })
        status = "PASS" if report.passed else "FAIL"
        print(f"p={report.p} N={report.N} dims W={dims[0]} V={dims[1]} Q={dims[2]} X={dims[3]} "
              f"ranks={report.ranks} kernels={report.kernel_dims} {status}")
    out = cfg.get_str("out")
    if out is not None:
        hsiem_utils.write_csv(pd.DataFrame(rows), out)
    passed = all(r["pass"] for r in rows)
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_forms_check(cfg: RunConfig) -> int:
    segment = PrismSegment(_points(cfg.get_str("triangle"), "triangle"),
                           _points(cfg.get_str("v0"), "v0"))
    report = forms_check(segment, cfg.get_int("p"), cfg.get_int("n"),
                         MoebiusParams(cfg.kappa0()),
                         tol=cfg.get_float("tol"), path=cfg.get_str("path"))
    _emit_csv(pd.DataFrame(report.rows), cfg.get_str("out"))
    for name, value in report.chain_residuals.items():
        logger.info("chain_residual", check=name, value=value)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_convergence(cfg: RunConfig) -> int:
    kappa = cfg.optional_complex("kappa")
    study = StudyConfig(kappa=kappa, kappa0=cfg.kappa0(), N=cfg.get_int("n"),
                        order=cfg.get_int("order"),
                        elements=cfg.get_int("elements"), eps_int=cfg.get_float("eps"),
                        mode=cfg.get_int("mode"), resonance=cfg.get_int("resonance"))
    try:
        case = ConvergenceCase(cfg.get_str("case"))
        sweep = SweepParameter(cfg.get_str("sweep"))
    except ValueError as exc:
        raise ConfigError(str(exc))
    frame = convergence_study(case, _int_range(cfg.get_str("values"), "values"), study,
                              sweep=sweep, timing=cfg.get_flag("timing"))
    _emit_csv(frame, cfg.get_str("out"))
    return EXIT_OK


# (handler, defaults); every option a command reads needs a default here
COMMANDS: Dict[str, Any] = {
    "dtn": (cmd_dtn, {"kappa": "2,0", "kappa0": "1,0", "n_min": 0, "n_max": 20, "out": None}),
    "scatter1d": (cmd_scatter1d, {"kappa": "2,0", "kappa0": "1,0", "n_min": 0, "n_max": 20,
                                  "order": 10, "elements": 4, "out": None}),
    "resonances": (cmd_resonances, {"case": "slab", "kappa0": "2,-1", "n": 20, "order": 10,
                                    "elements": 4, "eps": 4.0, "mode": 2, "k": 6, "shift": None,
                                    "tail_threshold": 0.5, "out": None, "json": None}),
    "sequence-check": (cmd_sequence_check, {"p": 3, "n": 4, "p_max": None, "n_max": None,
                                            "tol": 1e-12, "out": None}),
    "forms-check": (cmd_forms_check, {"p": 2, "n": 3, "kappa0": "3,1", "tol": 1e-6,
                                      "path": "ray", "triangle": OCTANT, "v0": "0,0,0",
                                      "out": None}),
    "convergence": (cmd_convergence, {"case": "dtn", "values": "0-20", "sweep": "N",
                                      "kappa": None, "kappa0": "1,0", "n": 10, "order": 10,
                                      "elements": 4, "eps": 4.0, "mode": 2, "resonance": 1,
                                      "timing": False, "out": None}),
}


# =================================================================
# PARSER
# =================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsiem", description="Hardy space infinite element tools")
    parser.add_argument("--version", action="version", version=f"hsiem {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="KEY=value file; flags override its entries")
    common.add_argument("--verbose", action="store_true", help="log at INFO")
    common.add_argument("--debug", action="store_true", help="log at DEBUG")
    common.add_argument("--out", help="CSV output path (stdout if omitted)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dtn", parents=[common], help="discrete DtN number versus N")
    p.add_argument("--kappa", help="wavenumber 're,im'")
    p.add_argument("--kappa0", help="Hardy parameter 're,im' with re > 0")
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)

    p = sub.add_parser("scatter1d", parents=[common], help="1D scattering errors versus N")
    p.add_argument("--kappa")
    p.add_argument("--kappa0")
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--elements", type=int)

    p = sub.add_parser("resonances", parents=[common], help="slab or sphere-mode resonances")
    p.add_argument("--case", choices=["slab", "sphere"])
    p.add_argument("--kappa0")
    p.add_argument("--n", type=int, help="Hardy truncation N")
    p.add_argument("--order", type=int)
    p.add_argument("--elements", type=int)
    p.add_argument("--eps", type=float, help="slab permittivity")
    p.add_argument("--mode", type=int, help="spherical-harmonic degree")
    p.add_argument("--k", type=int, help="eigenvalues requested")
    p.add_argument("--shift", help="shift in the kappa^2 plane 're,im'")
    p.add_argument("--tail-threshold", dest="tail_threshold", type=float)
    p.add_argument("--json", help="Spectrum JSON output path")

    p = sub.add_parser("sequence-check", parents=[common], help="exactness of the tensor complex")
    p.add_argument("--p", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--p-max", dest="p_max", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("forms-check", parents=[common], help="segment forms against the oracle")
    p.add_argument("--p", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--kappa0")
    p.add_argument("--tol", type=float)
    p.add_argument("--path", choices=["ray", "real"])
    p.add_argument("--triangle", help="'x,y,z;x,y,z;x,y,z'")
    p.add_argument("--v0", help="'x,y,z'")

    p = sub.add_parser("convergence", parents=[common], help="error tables")
    p.add_argument("--case", choices=[c.value for c in ConvergenceCase])
    p.add_argument("--values", help="swept values, 'a-b' or 'a,b,c'")
    p.add_argument("--sweep", choices=[s.value for s in SweepParameter])
    p.add_argument("--kappa")
    p.add_argument("--kappa0")
    p.add_argument("--n", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--elements", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--mode", type=int)
    p.add_argument("--resonance", type=int)
    p.add_argument("--timing", action="store_const", const=True)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, execute one command and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    saved_logging = structlog.get_config()
    if args.debug:
        hsiem_utils.configure_logging("DEBUG")
    elif args.verbose:
        hsiem_utils.configure_logging("INFO")

    handler, defaults = COMMANDS[args.command]
    try:
        cfg = RunConfig.from_args(args, defaults)
        code = handler(cfg)
    except (ConfigError, GeometryError, ProblemSetupError) as exc:
        print(f"hsiem {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HSIEMError, ValueError) as exc:
        logger.error("command_failed", command=args.command, error=str(exc))
        print(f"hsiem {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    else:
        logger.info("command_finished", command=args.command, exit_code=code)
        return code
    finally:
        hsiem_utils.shutdown()
        structlog.configure(**saved_logging)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
