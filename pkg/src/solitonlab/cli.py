"""Command-line driver: soliton reports, verification suites, delta sweeps.

    soliton-lab info   [--config cfg.json] [--out path] [--format csv|json]
    soliton-lab verify [--config cfg.json] --suite geometry|bounds|specfun|monotonicity
    soliton-lab sweep  [--config cfg.json] [--out path] [--format csv|json] [--null-family]

Exit codes: 0 success, 1 a verification check or sweep criterion failed,
2 configuration error.  Output files are written atomically (temp file +
rename) with shortest round-trip float formatting, so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import geometry, monotone, soliton, specfun
from .errors import SolitonLabError

SUITES = ("geometry", "bounds", "specfun", "monotonicity")


class ConfigError(Exception):
    """Invalid experiment configuration (exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    soliton: soliton.SolitonParams
    quad_tol: float = 1e-7
    check_tol: float = 1e-8
    x_range: tuple[float, float] = (-3.0, 3.0)
    y_range: tuple[float, float] = (0.1, 4.0)
    counts: tuple[int, ...] = ()
    sweep: tuple[float, ...] = tuple(10.0 ** -k for k in range(1, 11))
    out_path: str | None = None
    out_format: str = "csv"

    def __post_init__(self):
        if self.quad_tol <= 0 or self.check_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if not self.sweep:
            raise ConfigError("sweep list must be nonempty")
        if any(b >= a for a, b in zip(self.sweep, self.sweep[1:])):
            raise ConfigError("sweep deltas must be strictly decreasing")
        if any(not 0.0 < d < 1.0 for d in self.sweep):
            raise ConfigError("sweep deltas must lie in (0, 1)")
        if not (self.x_range[0] < self.x_range[1]
                and 0 < self.y_range[0] < self.y_range[1]):
            raise ConfigError("grid ranges must be nonempty")
        if self.out_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.out_format!r}")


def load_config(path: str | None) -> ExperimentConfig:
    try:
        if path is None:
            text = resources.files("solitonlab").joinpath(
                "configs/default.json").read_text()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        obj = json.loads(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict) or "soliton" not in obj:
        raise ConfigError("config must be an object with a 'soliton' entry")
    try:
        params = soliton.params_from_json(obj["soliton"])
        tols = obj.get("tolerances", {})
        grids = obj.get("grids", {})
        output = obj.get("output", {})
        return ExperimentConfig(
            soliton=params,
            quad_tol=float(tols.get("quad_tol", 1e-7)),
            check_tol=float(tols.get("check_tol", 1e-8)),
            x_range=tuple(grids.get("x_range", (-3.0, 3.0))),
            y_range=tuple(grids.get("y_range", (0.1, 4.0))),
            counts=tuple(int(c) for c in grids.get("counts", ())),
            sweep=tuple(float(d) for d in obj.get("sweep",
                        [10.0 ** -k for k in range(1, 11)])),
            out_path=output.get("path"),
            out_format=output.get("format", "csv"),
        )
    except (KeyError, TypeError, ValueError, SolitonLabError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


# -- formatting and output -------------------------------------------------

def fmt(v) -> str:
    """Shortest round-trip decimal form of a float (stable across runs)."""
    return repr(float(v))


def write_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class Check:
    name: str
    measured: float
    gate: float
    passed: bool


def run_checks(rows: list[Check], stream) -> bool:
    width = max(len(r.name) for r in rows)
    ok = True
    for r in rows:
        ok &= r.passed
        stream.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  "
                     f"measured={r.measured:.3e}  gate={r.gate:.3e}\n")
    return ok


def checks_to_text(rows: list[Check]) -> str:
    lines = [",".join(["check", "measured", "gate", "passed"])]
    for r in rows:
        lines.append(",".join([r.name, fmt(r.measured), fmt(r.gate),
                               "1" if r.passed else "0"]))
    return "\n".join(lines) + "\n"


# -- info -------------------------------------------------------------------

def cmd_info(cfg: ExperimentConfig, out, out_path, out_format) -> int:
    params = cfg.soliton
    sc = soliton.scalars(params, cfg.check_tol)
    lines = {
        "n": params.n,
        "alpha": params.alpha,
        "a": list(params.a),
        "phi_bar": list(sc.phi_bar),
        "theta_inf": sc.theta_inf,
        "theta_sup": sc.theta_sup,
        "theta_inf_plus_sup_minus_pi": sc.theta_inf + sc.theta_sup - math.pi,
        "oscillation": sc.oscillation,
        "s0": sc.s0,
    }
    for key, val in lines.items():
        out.write(f"{key}: {val}\n")

    samples = []
    pts = soliton.standard_grid(params, count=4, x_range=cfg.x_range,
                            y_range=cfg.y_range)
    for p in pts[:: max(1, len(pts) // 8)]:
        theta = float(soliton.theta_of_y(params, p.y))
        h2 = float(soliton.mean_curvature_sq(params, p))
        det_g = soliton.metric_closed_form(params, p)[1]
        samples.append({"x": list(p.x), "y": p.y, "theta": theta,
                        "h_sq": h2, "det_g": det_g})
    out.write("samples (x, y, theta, |H|^2, det g):\n")
    for s in samples:
        out.write("  " + " ".join(fmt(v) for v in
                                  (*s["x"], s["y"], s["theta"], s["h_sq"],
                                   s["det_g"])) + "\n")

    if out_path:
        if out_format == "json":
            write_atomic(out_path, json.dumps({"scalars": lines,
                                               "samples": samples}, indent=2,
                                              default=float) + "\n")
        else:
            rows = ["x,y,theta,h_sq,det_g"]
            for s in samples:
                rows.append(",".join([";".join(fmt(v) for v in s["x"]),
                                      fmt(s["y"]), fmt(s["theta"]),
                                      fmt(s["h_sq"]), fmt(s["det_g"])]))
            write_atomic(out_path, "\n".join(rows) + "\n")
    return 0


# -- verification suites -----------------------------------------------------

def suite_specfun(cfg: ExperimentConfig) -> list[Check]:
    rows: list[Check] = []
    half = math.sqrt(0.5 * math.pi) * math.exp(-1.0)
    rows.append(Check("besselk-half-order-closed-form",
                      abs(specfun.bessel_k(0.5, 1.0) - half), 1e-10,
                      abs(specfun.bessel_k(0.5, 1.0) - half) <= 1e-10))

    worst = 0.0
    for nu in (0.0, 0.5, 1.0):
        for z in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
            a = specfun.bessel_k(nu, z, cross_check=False)
            b = specfun.bessel_k_cosh(nu, z)
            worst = max(worst, abs(a - b) / abs(b))
    rows.append(Check("besselk-representation-agreement", worst, 1e-9,
                      worst <= 1e-9))

    z = 1.0
    k12 = specfun.bessel_k(0.5, z)
    k32 = specfun.bessel_k(1.5, z)
    k52 = specfun.bessel_k(2.5, z)
    resid = abs(k52 - k12 - (2 * 1.5 / z) * k32)
    rows.append(Check("besselk-recurrence", resid, 1e-8, resid <= 1e-8))

    margin = math.inf
    for a in (-1.0, 0.0, 0.25, 0.5, 0.75):
        for x in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
            v = specfun.upper_gamma(specfun.GammaArgs(a, x), cfg.check_tol)
            mid = x ** (1.0 - a) * math.exp(x) * v
            margin = min(margin, mid - x / (x + 1 - a), (x + 1) / (x + 2 - a) - mid)
    rows.append(Check("gamma-two-sided-bound-strict", margin, 0.0, margin > 0.0))

    zs = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
    drops = [specfun.bessel_k(0.5, za, cross_check=False)
             - specfun.bessel_k(0.5, zb, cross_check=False)
             for za, zb in zip(zs, zs[1:])]
    rows.append(Check("besselk-decreasing-in-z", min(drops), 0.0,
                      min(drops) > 0.0))
    xs = (0.1, 0.5, 1.0, 2.0, 5.0)
    gdrops = [specfun.upper_gamma(specfun.GammaArgs(0.25, xa))
              - specfun.upper_gamma(specfun.GammaArgs(0.25, xb))
              for xa, xb in zip(xs, xs[1:])]
    rows.append(Check("gamma-decreasing-in-x", min(gdrops), 0.0,
                      min(gdrops) > 0.0))

    inf_vals = [specfun.bessel_ray_infimum(nu, z_min, grid=32)
                for nu in (0.0, 0.5, 1.0) for z_min in (0.25, 2.0)]
    rows.append(Check("scaled-besselk-ray-infimum-positive", min(inf_vals),
                      0.0, min(inf_vals) > 0.0))
    return rows


def _geometry_grid_stats(params: soliton.SolitonParams, count: int | None,
                         cfg: ExperimentConfig):
    imm = soliton.jet_immersion(params)
    pts = soliton.standard_grid(params, count, cfg.x_range, cfg.y_range)
    worst = {"metric": 0.0, "detg": 0.0, "area": 0.0, "hsq": 0.0,
             "translator": 0.0, "defect": 0.0, "angle": 0.0}
    t_vec = params.translator
    for p in pts:
        fr = geometry.frame_at(imm, p.as_array())
        g, det_g, area = soliton.metric_closed_form(params, p)
        scale = float(np.max(np.abs(g)))
        worst["metric"] = max(worst["metric"],
                              float(np.max(np.abs(fr.metric - g))) / scale)
        worst["detg"] = max(worst["detg"],
                            abs(np.linalg.det(fr.metric) - det_g) / det_g)
        worst["area"] = max(worst["area"], abs(fr.area_density - area) / area)
        h2 = soliton.mean_curvature_sq(params, p)
        h2_ad = float(fr.mean_curvature @ fr.mean_curvature)
        worst["hsq"] = max(worst["hsq"], abs(h2_ad - h2) / h2)
        worst["translator"] = max(worst["translator"],
                                  geometry.translator_residual(fr, t_vec))
        worst["defect"] = max(worst["defect"], geometry.lagrangian_defect(fr))
        theta = float(soliton.theta_of_y(params, p.y))
        worst["angle"] = max(worst["angle"],
                             abs(fr.cos_theta - math.cos(theta)),
                             abs(fr.sin_theta - math.sin(theta)))
    return worst


def suite_geometry(cfg: ExperimentConfig) -> list[Check]:
    rows: list[Check] = []
    cases = [(cfg.soliton, cfg.counts[0] if cfg.counts else None)]
    if cfg.soliton.n == 2:
        cases.append((soliton.SolitonParams(n=3, alpha=1.0, a=(1.0, 2.0)), 6))
    for params, count in cases:
        tag = f"n{params.n}"
        w = _geometry_grid_stats(params, count, cfg)
        rows.append(Check(f"{tag}-metric-vs-ad", w["metric"], 1e-8,
                          w["metric"] <= 1e-8))
        rows.append(Check(f"{tag}-detg-vs-ad", w["detg"], 1e-8,
                          w["detg"] <= 1e-8))
        rows.append(Check(f"{tag}-area-vs-ad", w["area"], 1e-8,
                          w["area"] <= 1e-8))
        rows.append(Check(f"{tag}-hsq-vs-ad", w["hsq"], 1e-8, w["hsq"] <= 1e-8))
        rows.append(Check(f"{tag}-translator-identity", w["translator"], 1e-6,
                          w["translator"] <= 1e-6))
        rows.append(Check(f"{tag}-symplectic-defect", w["defect"], 1e-10,
                          w["defect"] <= 1e-10))
        rows.append(Check(f"{tag}-angle-vs-sum", w["angle"], 1e-8,
                          w["angle"] <= 1e-8))
        imm = soliton.jet_immersion(params)
        h_res = 0.0
        for p in soliton.standard_grid(params, count=2, x_range=(-1.0, 1.0),
                                   y_range=(0.5, 1.5)):
            h_res = max(h_res, geometry.h_equals_j_grad_theta_residual(
                imm, p.as_array(), 1e-5))
        rows.append(Check(f"{tag}-h-equals-j-grad-theta", h_res, 1e-5,
                          h_res <= 1e-5))
    return rows


def suite_bounds(cfg: ExperimentConfig) -> list[Check]:
    rows: list[Check] = []
    param_sets = [soliton.SolitonParams(n=2, alpha=1.0, a=(1.0,)),
                  soliton.SolitonParams(n=3, alpha=1.0, a=(1.0, 2.0))]
    if cfg.soliton.alpha == 1.0 and cfg.soliton not in param_sets:
        param_sets.insert(0, cfg.soliton)
    ys = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0]
    for params in param_sets:
        tag = f"n{params.n}a{'-'.join(str(v) for v in params.a)}"
        sc = soliton.scalars(params, 1e-12)
        margin = math.inf
        cross = 0.0
        for y in ys:
            v = soliton.v_of_y(params, y, 1e-10)
            lo, hi = soliton.v_bounds(params, y)
            margin = min(margin, v - lo, hi - v)
            cross = max(cross, abs(v - (float(soliton.theta_of_y(params, y))
                                        - sc.theta_inf)))
        rows.append(Check(f"{tag}-v-two-sided-bound-strict", margin, 0.0,
                          margin > 0.0))
        rows.append(Check(f"{tag}-v-equals-theta-drop", cross, 1e-9,
                          cross <= 1e-9))
        rows.append(Check(f"{tag}-v1-at-least-s0",
                          soliton.v_of_y(params, 1.0, 1e-10) - sc.s0, 0.0,
                          soliton.v_of_y(params, 1.0, 1e-10) >= sc.s0))

    params = cfg.soliton
    ygrid = np.linspace(-4.0, 4.0, 17)
    h = 1e-6
    fd_worst = 0.0
    sign_ok = True
    telescope = 0.0
    for y in ygrid:
        y = float(y)
        tp = soliton.theta_prime(params, y)
        gp = soliton.gamma_prime(params, y)
        pps = [soliton.phi_prime(params, j, y) for j in range(1, params.n)]
        sign_ok &= tp < 0 and gp < 0 and all(v > 0 for v in pps)
        telescope = max(telescope, abs(sum(pps) + gp - tp))
        fd = (float(soliton.theta_of_y(params, y + h))
              - float(soliton.theta_of_y(params, y - h))) / (2 * h)
        fd_worst = max(fd_worst, abs(fd - tp))
    rows.append(Check("angle-derivative-signs", 0.0 if sign_ok else 1.0, 0.5,
                      sign_ok))
    rows.append(Check("angle-derivative-telescoping", telescope, 1e-12,
                      telescope <= 1e-12))
    rows.append(Check("angle-derivative-vs-fd", fd_worst, 1e-7,
                      fd_worst <= 1e-7))

    det_worst = 0.0
    x_id_worst = 0.0
    floor_ok = True
    sc = soliton.scalars(params, 1e-12)
    for p in soliton.standard_grid(params, count=6):
        xs = np.asarray(p.x)
        u = p.y * p.y
        diag = np.array([1.0 / aj + u for aj in params.a])
        g1 = np.outer(xs, xs) + np.diag(diag)
        det_direct = float(np.linalg.det(g1))
        det_closed = (1.0 + float(np.sum(xs * xs / diag))) * float(np.prod(diag))
        det_worst = max(det_worst, abs(det_direct - det_closed) / det_closed)
        pos = soliton.immerse(params, p)
        lhs = float(pos @ pos)
        theta = float(soliton.theta_of_y(params, p.y))
        rhs = ((0.5 * (float(np.sum(xs * xs)) + u)) ** 2
               + float(np.sum(xs * xs / np.asarray(params.a))) + theta ** 2)
        x_id_worst = max(x_id_worst, abs(lhs - rhs) / rhs)
        floor_ok &= math.sqrt(lhs) >= sc.theta_inf
    rows.append(Check("detg1-closed-vs-direct", det_worst, 1e-10,
                      det_worst <= 1e-10))
    rows.append(Check("position-norm-identity", x_id_worst, 1e-10,
                      x_id_worst <= 1e-10))
    rows.append(Check("position-norm-floor", 0.0 if floor_ok else 1.0, 0.5,
                      floor_ok))
    return rows


def suite_monotonicity(cfg: ExperimentConfig) -> list[Check]:
    rows: list[Check] = []
    params = cfg.soliton

    plane = monotone.PlaneSurface(params.n)
    k = monotone.KernelArgs(np.zeros(2 * params.n), 0.0, -1.0)
    chk = monotone.monotonicity_check(plane, lambda t: 1.0 + 0.0 * t,
                                      lambda t: 0.0 * t, k)
    rows.append(Check("plane-monotonicity-residual", chk.residual, 1e-9,
                      chk.residual <= 1e-9))

    srf = monotone.SolitonSurface(params)
    x0 = soliton.immerse(params, soliton.ChartPoint(x=(0.0,) * (params.n - 1), y=0.0))
    k = monotone.KernelArgs(x0, 0.0, -0.5)
    chk = monotone.monotonicity_check(srf, lambda t: t * t,
                                      lambda t: 2.0 + 0.0 * t, k)
    gate = 1e-3 * (1.0 + abs(chk.rhs))
    rows.append(Check("soliton-monotonicity-residual", chk.residual, gate,
                      chk.residual <= gate))
    rows.append(Check("density-functional-nonincreasing",
                      chk.ddt_phi, chk.error_budget,
                      chk.ddt_phi <= chk.error_budget))

    sc = soliton.scalars(params, 1e-12)
    eps_min = math.inf
    for d in (1e-1, 1e-4, 1e-7, 1e-10):
        p = monotone.FDeltaParams.for_oscillation(sc.oscillation, d)
        eps_min = min(eps_min, monotone.epsilon_for_f(p))
    rows.append(Check("curvature-certificate-positive", eps_min, 0.0,
                      eps_min > 0.0))

    worst = 0.0
    for (q, m, n) in ((1.0, 1.0, 2), (1.0, 2.0, 3), (2.0, 1.0, 4)):
        worst = max(worst, monotone.heat_kernel_bessel_identity(q, m, n))
    rows.append(Check("kernel-time-integral-vs-besselk", worst, 1e-8,
                      worst <= 1e-8))
    return rows


def cmd_verify(cfg: ExperimentConfig, suite: str, out, out_path,
               out_format) -> int:
    runners = {"specfun": suite_specfun, "geometry": suite_geometry,
               "bounds": suite_bounds, "monotonicity": suite_monotonicity}
    rows = runners[suite](cfg)
    ok = run_checks(rows, out)
    if out_path:
        if out_format == "json":
            payload = [{"name": r.name, "measured": r.measured,
                        "gate": r.gate, "passed": r.passed} for r in rows]
            write_atomic(out_path, json.dumps(payload, indent=2,
                                              default=float) + "\n")
        else:
            write_atomic(out_path, checks_to_text(rows))
    out.write("suite=%s %s\n" % (suite, "OK" if ok else "FAILED"))
    return 0 if ok else 1


# -- sweep -------------------------------------------------------------------

def sweep_to_csv(rows, verdict) -> str:
    lines = ["delta,lhs,lhs_error,log_log_weight,ratio"]
    for r in rows:
        lines.append(",".join([fmt(r.delta), fmt(r.lhs), fmt(r.lhs_error),
                               fmt(r.log_log_weight), fmt(r.ratio)]))
    if verdict is not None:
        lines.append(f"# verdict: {verdict}")
    return "\n".join(lines) + "\n"


def cmd_sweep(cfg: ExperimentConfig, null_family: bool, out, out_path,
              out_format) -> int:
    spec = monotone.NecessaryConditionSpec(params=cfg.soliton,
                                           null_family=null_family)
    rows = monotone.delta_sweep(spec, cfg.sweep, cfg.quad_tol)
    verdict = monotone.sweep_verdict(rows)
    text = sweep_to_csv(rows, verdict)
    out.write(text)
    if out_path:
        if out_format == "json":
            payload = {"rows": [{"delta": r.delta, "lhs": r.lhs,
                                 "lhs_error": r.lhs_error,
                                 "log_log_weight": r.log_log_weight,
                                 "ratio": r.ratio} for r in rows],
                       "verdict": verdict}
            write_atomic(out_path, json.dumps(payload, indent=2,
                                              default=float) + "\n")
        else:
            write_atomic(out_path, text)
    if verdict is None or verdict == "NULL":
        return 0
    return 0 if verdict == "DIVERGENT" else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="soliton-lab",
        description="verification experiments for a translating-soliton family")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("info", "verify", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="experiment config JSON (packaged default if omitted)")
        p.add_argument("--out", default=None, help="write results to this path")
        p.add_argument("--format", default=None, choices=("csv", "json"),
                       help="output format (default from config)")
        if name == "verify":
            p.add_argument("--suite", required=True, choices=SUITES)
        if name == "sweep":
            p.add_argument("--null-family", action="store_true",
                           help="use the constant test family f == 1")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        cfg = load_config(args.config)
        out_format = args.format or cfg.out_format
        out_path = args.out or cfg.out_path
        if args.command == "info":
            return cmd_info(cfg, out, out_path, out_format)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, out, out_path, out_format)
        return cmd_sweep(cfg, args.null_family, out, out_path, out_format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolitonLabError as exc:
        print(f"check failed to run: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
