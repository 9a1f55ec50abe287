"""Command line front end: shoot, solve, assemble, verify and sweep."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import outputs
from .assembly import assemble, certify
from .dynamics import Params
from .errors import BracketNotFound, CMCError, InvalidParameters, NonConvergence
from .geometry import Family, FamilyKind
from .ode import IntegratorConfig
from .shooting import shoot, solve_s2n, solve_s3n
from .verify import default_grid, report_json, run_claim_suite

logger = logging.getLogger("cmcshoot")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_PARTIAL = 4

CONFIG_KEYS_HELP = """\
config file: one "key = value" per line, '#' starts a comment.  Keys:
  family          s2n | s3n-1
  n               integer >= 2
  lambda          mean curvature target (> 0)
  r0              initial radius (shoot, assemble)
  rtol, atol      integrator tolerances
  event_tol       event localisation tolerance
  tol_r0          bisection width in r0
  strict_monitors true | false
  out             output directory
  plot            true | false
  lambdas         comma separated list (sweep, verify)
  ns              comma separated list of n (verify)
  oracle          true | false, compare with the fixed-step oracle (verify)
  jobs            worker processes for sweep
Command line flags override file values.
"""


@dataclass
class RunConfig:
    command: str
    family: str = "s2n"
    n: int = 2
    lam: float = 1.0
    r0: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-12
    tol_r0: float = 1e-10
    strict_monitors: bool = False
    out: str = "out"
    plot: bool = False
    lambdas: list = field(default_factory=list)
    ns: list = field(default_factory=list)
    oracle: bool = True
    jobs: int = 1

    def params(self) -> Params:
        return Params(Family(FamilyKind(self.family), self.n), self.lam)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rtol=self.rtol, atol=self.atol, event_tol=self.event_tol)

    def validate(self) -> None:
        try:
            FamilyKind(self.family)
        except ValueError:
            raise InvalidParameters(f"family must be s2n or s3n-1, got {self.family!r}") from None
        self.params()
        self.integrator()
        for lam in self.lambdas:
            Params(Family(FamilyKind(self.family), self.n), lam)
        for n in self.ns:
            Family(FamilyKind(self.family), n)
        if not self.tol_r0 > 0:
            raise InvalidParameters("tol_r0 must be positive")
        if self.jobs < 1:
            raise InvalidParameters("jobs must be >= 1")
        if self.command in ("shoot", "assemble") and self.r0 is None:
            raise InvalidParameters(f"{self.command} needs r0")
        if self.r0 is not None:
            hi = self.params().family.r0_max
            if not 0.0 < self.r0 < hi:
                raise InvalidParameters(f"r0 must lie in (0, {hi:.12g}), got {self.r0!r}")


_FILE_KEYS = {"lambda": "lam"}


def _to_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InvalidParameters(f"not a boolean: {v!r}")


def _float_list(v: str) -> list:
    return [float(x) for x in v.split(",") if x.strip()]


def _int_list(v: str) -> list:
    return [int(x) for x in v.split(",") if x.strip()]


_CONVERT = {
    "family": str,
    "n": int,
    "lam": float,
    "r0": float,
    "rtol": float,
    "atol": float,
    "event_tol": float,
    "tol_r0": float,
    "strict_monitors": _to_bool,
    "out": str,
    "plot": _to_bool,
    "lambdas": _float_list,
    "ns": _int_list,
    "oracle": _to_bool,
    "jobs": int,
}


def read_config_file(path) -> dict:
    """Flat ``key = value`` file -> dict of RunConfig field values."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameters(f"{path}:{lineno}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        name = _FILE_KEYS.get(key, key)
        if name not in _CONVERT:
            raise InvalidParameters(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[name] = _CONVERT[name](val)
        except ValueError as exc:
            raise InvalidParameters(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=[k.value for k in FamilyKind])
    common.add_argument("--n", type=int)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--r0", type=float)
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--event-tol", dest="event_tol", type=float)
    common.add_argument("--tol-r0", dest="tol_r0", type=float)
    common.add_argument("--strict-monitors", dest="strict_monitors", action="store_const",
                        const=True)
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--plot", action="store_const", const=True,
                        help="also write SVG for shoot/assemble")
    common.add_argument("--lambdas", type=_float_list, help="comma separated lambda grid")
    common.add_argument("--ns", type=_int_list, help="comma separated n grid (verify)")
    common.add_argument("--no-oracle", dest="oracle", action="store_const", const=False)
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="cmcshoot",
        description="Shoot, solve and certify CMC generating curves.",
        epilog=CONFIG_KEYS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("shoot", "integrate one trajectory from r0"),
        ("solve", "find r0*, assemble and certify the closed curve"),
        ("assemble", "assemble and certify the curve for a given r0"),
        ("verify", "run the bound/claim suite"),
        ("sweep", "solve over a lambda grid"),
    ]:
        sub.add_parser(name, parents=[common], help=text, epilog=CONFIG_KEYS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    cfg = RunConfig(command=args.command, **values)
    cfg.validate()
    return cfg


# -- commands ------------------------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_shoot(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    shot = shoot(cfg.params(), cfg.r0, cfg.integrator(), strict=cfg.strict_monitors)
    outputs.write_trajectory_csv(out / "trajectory.csv", shot)
    outputs.write_json(out / "shot.json", shot.to_dict())
    if cfg.plot:
        outputs.write_shot_svg(out / "trajectory.svg", shot)
    logger.info("shot exits %s at s*=%.12g", shot.exit.value, shot.s_star)
    return EXIT_OK


def _solve(cfg: RunConfig):
    params = cfg.params()
    solver = solve_s2n if params.family.is_s2n else solve_s3n
    return solver(params, tol_r0=cfg.tol_r0, config=cfg.integrator())


def _write_curve_set(out: Path, shot, with_svg: bool) -> dict:
    curve = assemble(shot)
    cert = certify(curve)
    outputs.write_curve(out / "curve.csv", out / "certificate.json", curve, cert)
    if with_svg:
        outputs.write_curve_svg(out / "curve.svg", curve)
    return cert.to_dict()


def cmd_solve(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    r0, shot = _solve(cfg)
    outputs.write_json(out / "solve.json", {"r0_star": r0, "shot": shot.to_dict()})
    cert = _write_curve_set(out, shot, True)
    logger.info("r0*=%.15g, L=%.12g, simple=%s", r0, cert["length"], cert["simple"])
    return EXIT_OK


def cmd_assemble(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    shot = shoot(cfg.params(), cfg.r0, cfg.integrator(), strict=cfg.strict_monitors)
    _write_curve_set(out, shot, cfg.plot)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    kinds = [FamilyKind(cfg.family)] if cfg.ns or cfg.lambdas else list(FamilyKind)
    grid = default_grid(ns=tuple(cfg.ns) or (2, 3, 4), lams=tuple(cfg.lambdas) or None,
                        kinds=kinds)
    results = run_claim_suite(grid, cfg.integrator(), oracle=cfg.oracle)
    (out / "claims.json").write_text(report_json(results))
    failed = sum(not c.passed for c in results)
    logger.info("%d claims, %d failed", len(results), failed)
    return EXIT_OK if failed == 0 else EXIT_PARTIAL


SUMMARY_COLUMNS = ("lambda", "r0_star", "L", "max_H_residual", "status")


def _sweep_one(cfg: RunConfig, lam: float) -> dict:
    sub = RunConfig(**{**cfg.__dict__, "lam": lam, "command": "solve",
                       "out": str(Path(cfg.out) / f"lambda_{lam:g}")})
    row = {"lambda": lam, "r0_star": math.nan, "L": math.nan, "max_H_residual": math.nan}
    try:
        cmd_solve(sub)
    except CMCError as exc:
        row["status"] = exc.kind
        return row
    cert = outputs.read_json(Path(sub.out) / "certificate.json")
    h = cert["h_residuals"]
    row.update(r0_star=cert["r0_star"], L=cert["length"],
               max_H_residual=max(h["algebraic"], h["finite_difference"]), status="ok")
    return row


def cmd_sweep(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    lams = list(cfg.lambdas)
    if cfg.jobs > 1 and len(lams) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_one, [cfg] * len(lams), lams))
    else:
        rows = [_sweep_one(cfg, lam) for lam in lams]
    with open(out / "summary.csv", "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(
                row[c] if c == "status" else outputs.fmt(row[c]) for c in SUMMARY_COLUMNS
            ) + "\n")
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_PARTIAL


COMMANDS = {
    "shoot": cmd_shoot,
    "solve": cmd_solve,
    "assemble": cmd_assemble,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra},
                                sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
    except (InvalidParameters, ValueError, OSError) as exc:
        _error("invalid-config", str(exc))
        return EXIT_INVALID
    try:
        return COMMANDS[cfg.command](cfg)
    except (NonConvergence, BracketNotFound) as exc:
        history = [list(h) for h in getattr(exc, "history", [])]
        _error(exc.kind, str(exc), history=history)
        return EXIT_NONCONVERGENCE
    except CMCError as exc:
        _error(exc.kind, str(exc))
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
