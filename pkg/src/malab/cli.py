"""Experiment runner.

Scenarios: solve, envelope, homogeneous, barrier-certify, exponent-fit,
appendix-verify, doubling-check, angle-check, acceptance.  Configuration is a
flat `key = value` file; command-line flags override it.  Outputs are CSV
files plus a human-readable summary, byte-identical across reruns with the
same config and seed.

Exit status: 0 on success, 1 when a checked criterion fails, 2 on errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from . import acceptance as acc
from . import barrier as bar
from . import envelope as env
from . import oracles
from . import regularity as reg
from . import solver as sol
from .fileio import fmt, parse_config, write_csv
from .geometry import BoundaryProfile, Domain2D, angle_bound_check, transformed_profile

SCENARIOS = (
    "solve",
    "envelope",
    "homogeneous",
    "barrier-certify",
    "exponent-fit",
    "appendix-verify",
    "doubling-check",
    "angle-check",
    "acceptance",
)

CASE_IDS = ("power", "log", "sqrt", "mixed")


@dataclass
class ExperimentConfig:
    scenario: str = "appendix-verify"
    seed: int = 0
    out: str = "out"
    case: str = "power"
    case_alpha: float = 0.5
    k: int = 4
    beta: float = 1.0
    leading_coeff: float = 1.0
    remainder: tuple = ()
    half_width: float = 1.0
    height: float = 1.0
    resolution: int = 64
    boundary_samples: int = 2000
    interior_samples: int = 900
    stencil_width: int = 3
    max_sweeps: int = 100000
    f_const: float = 1.0
    f0: float = 1.0
    q: float = None
    barrier_m: float = None
    barrier_h: float = None
    z1: float = 0.0
    heights: tuple = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)
    trials: int = 1000
    subdiv: int = 24
    quick: bool = False

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.case not in CASE_IDS:
            raise ValueError(f"unknown case {self.case!r}; choose from {CASE_IDS}")
        if self.boundary_samples < 8:
            raise ValueError("boundary_samples must be >= 8")
        if self.resolution < 8:
            raise ValueError("resolution must be >= 8")
        if self.interior_samples < 4:
            raise ValueError("interior_samples must be >= 4")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        kwargs = {}
        valid = {f.name: f for f in dc_fields(cls)}
        for key, value in raw.items():
            if key not in valid:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(valid[key].name, value)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def profile(self) -> BoundaryProfile:
        return BoundaryProfile(
            k=self.k,
            beta=self.beta,
            leading_coeff=self.leading_coeff,
            remainder=self.remainder,
            half_width=self.half_width,
        )

    def case_obj(self) -> oracles.ClosedFormCase:
        lib = oracles.case_library(alpha=self.case_alpha)
        return {c.ident: c for c in lib}[self.case]


def _coerce(name: str, value):
    if isinstance(value, (int, float, tuple, bool)) or value is None:
        return value
    text = str(value).strip()
    if name in ("scenario", "out", "case"):
        return text
    if name == "quick":
        return text.lower() in ("1", "true", "yes", "on")
    if name in ("remainder", "heights"):
        if not text:
            return ()
        return tuple(float(v) for v in text.split(","))
    if name in ("seed", "k", "resolution", "boundary_samples", "interior_samples",
                "stencil_width", "max_sweeps", "trials", "subdiv"):
        return int(text)
    return float(text)


def _summary(out_dir: Path, lines) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "summary.txt"
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _scenario_solve(cfg: ExperimentConfig, out_dir: Path):
    case = cfg.case_obj()
    dom = case.domain()
    f = sol.FieldSpec.constant(cfg.f_const)
    u = sol.solve(
        dom,
        f,
        case.boundary_values,
        resolution=cfg.resolution,
        stencil_width=cfg.stencil_width,
        max_sweeps=cfg.max_sweeps,
    )
    u.export_csv(out_dir / "field.csv")
    res = sol.residual(u, f)
    lines = [
        f"check: monotone wide-stencil Dirichlet solve on case {cfg.case}",
        f"resolution = {cfg.resolution}, f = {fmt(cfg.f_const)} (constant)",
        f"sweeps = {u.sweeps}, residual = {fmt(res)}",
        f"convexity defect = {fmt(u.convexity_defect())}",
    ]
    if case.u is not None and cfg.f_const == 0.0:
        err = float(np.max(np.abs(u.interior_values - case.u(u.interior_points))))
        lines.append(f"max error vs reference solution = {fmt(err)}")
    return True, lines


def _scenario_envelope(cfg: ExperimentConfig, out_dir: Path):
    dom = Domain2D.from_profile(cfg.profile(), height=cfg.height)
    rng = np.random.default_rng(cfg.seed)

    def obstacle(pts):
        q = np.atleast_2d(pts)
        tent = np.minimum(1 + q[:, 0], 1 - q[:, 0])
        return tent + 0.5 * np.exp(-(q[:, 0] ** 2 + (q[:, 1] - 0.5) ** 2) / 0.05)

    e = env.convex_envelope(
        dom, obstacle, interior_samples=cfg.interior_samples, boundary_samples=cfg.boundary_samples
    )
    e.export_off(out_dir / "envelope.off")
    e.export_csv(out_dir / "envelope.csv", e.points)
    gap = np.asarray(obstacle(e.points)) - e.evaluate(e.points)
    lines = [
        "check: convex envelope of a tent-plus-bump obstacle (largest convex minorant)",
        f"samples: interior = {cfg.interior_samples}, boundary = {cfg.boundary_samples}",
        f"max obstacle-envelope gap = {fmt(float(np.max(gap)))}, min = {fmt(float(np.min(gap)))}",
        f"hull faces = {len(e.faces)}",
    ]
    return True, lines


def _scenario_homogeneous(cfg: ExperimentConfig, out_dir: Path):
    case = cfg.case_obj()
    dom = case.domain()
    u = env.homogeneous_solution(dom, case.boundary_values, boundary_samples=cfg.boundary_samples)
    xs = np.linspace(-0.95 * cfg.half_width, 0.95 * cfg.half_width, 41)
    ys = np.linspace(1e-4, 0.99 * cfg.height, 41)
    pts = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    pts = pts[dom.contains(pts)]
    u.export_csv(out_dir / "homogeneous.csv", pts)
    lines = [
        f"check: homogeneous solution as supremum of affine minorants, case {cfg.case}",
        f"boundary samples = {cfg.boundary_samples}",
    ]
    ok = True
    if case.u is not None:
        err = float(np.max(np.abs(u.evaluate(pts) - case.u(pts))))
        lines.append(f"max error vs reference solution = {fmt(err)}")
    return ok, lines


def _scenario_barrier(cfg: ExperimentConfig, out_dir: Path):
    prof = cfg.profile()
    rt = transformed_profile(prof, cfg.z1)
    height_cap = 0.9 * min(rt.value(-0.995 * rt.half_width), rt.value(0.995 * rt.half_width))
    spec = bar.default_parameters(cfg.k, cfg.f0, q=cfg.q, height_cap=height_cap)
    if cfg.barrier_h is not None:
        spec = spec.with_h(cfg.barrier_h)
    if cfg.barrier_m is not None:
        spec = spec.with_m(cfg.barrier_m)
    rep = bar.certify(spec, rt, resolution=cfg.resolution)
    bar.export_certification_csv(rep, out_dir / "certification.csv")
    lines = [
        "check: barrier inequalities (Hessian determinant above f0, nonpositive on the rim)",
        f"parameters: k = {spec.k}, q = {fmt(spec.q)}, Q = {fmt(spec.Q)}, "
        f"M = {fmt(spec.M)}, h = {fmt(spec.h)}, f0 = {fmt(spec.f0)}",
        f"z1 = {fmt(cfg.z1)}, grid = {cfg.resolution}^2 graded",
        f"interior min(det - f0) = {fmt(rep.interior_min)} at {rep.interior_argmin}",
        f"boundary max(w) = {fmt(rep.boundary_max)} at {rep.boundary_argmax}",
        f"verdict: {'pass' if rep.passed else 'fail'}",
    ]
    return rep.passed, lines


def _scenario_exponent(cfg: ExperimentConfig, out_dir: Path):
    case = cfg.case_obj()
    dom = case.domain()
    radii = reg.default_radii(1.0)
    if case.u is not None:
        fit = reg.holder_fit(case.u, (0, 0), radii, support=(0.0, (0.0, 0.0)), domain=dom)
    else:
        u = env.homogeneous_solution(dom, case.boundary_values, boundary_samples=cfg.boundary_samples)
        fit = reg.holder_fit(u, (0, 0), radii, domain=dom)
    write_csv(
        out_dir / "exponent.csv",
        ("radius", "sup_excess"),
        zip(fit.radii, fit.measurements),
    )
    lines = [
        f"check: Holder exponent fit at the flat point, case {cfg.case}",
        f"fitted alpha = {fmt(fit.alpha)}, constant = {fmt(fit.constant)}, "
        f"r2 = {fmt(fit.r2)}, flag = {fit.flag}",
    ]
    if case.expected_exponent is not None:
        lines.append(f"expected alpha = {fmt(case.expected_exponent)}")
    return True, lines


def _scenario_appendix(cfg: ExperimentConfig, out_dir: Path):
    rows = []
    lines = ["check: sandwich ratio extremes of the degree-(k-2) boundary polynomials"]
    for k in (2, 4, 6, 8, 10):
        rep = oracles.sandwich_constants(k)
        rows.append((k, rep.c_lower, rep.c_upper, rep.arg_lower, rep.arg_upper, rep.asymptote))
        lines.append(
            f"k = {k}: C = {fmt(rep.c_lower)}, C' = {fmt(rep.c_upper)}, "
            f"asymptote = {fmt(rep.asymptote)} (target {fmt(k * (k - 1) / 2.0)})"
        )
    write_csv(
        out_dir / "sandwich.csv",
        ("k", "c_lower", "c_upper", "arg_lower", "arg_upper", "asymptote"),
        rows,
    )
    return True, lines


def _scenario_doubling(cfg: ExperimentConfig, out_dir: Path):
    dom = Domain2D.disk(1.0)
    rep = sol.doubling_estimate(
        sol.FieldSpec.constant(cfg.f_const if cfg.f_const > 0 else 1.0),
        dom,
        trials=cfg.trials,
        seed=cfg.seed,
        subdiv=cfg.subdiv,
    )
    lines = [
        "check: mass doubling ratio over random convex subsets vs their half-dilations",
        f"trials = {rep.trials}, failures = {rep.failures}",
        f"estimated doubling constant = {fmt(rep.max_ratio)}",
    ]
    return True, lines


def _scenario_angle(cfg: ExperimentConfig, out_dir: Path):
    prof = cfg.profile()
    rep = angle_bound_check(prof, cfg.z1, cfg.heights)
    write_csv(
        out_dir / "angles.csv",
        ("y2", "p1", "p2", "theta", "ratio", "above"),
        [tuple(r) for r in rep.samples],
    )
    lines = [
        "check: angle between boundary tangents and rays from axis points",
        f"k = {cfg.k}, z1 = {fmt(cfg.z1)}, heights = {len(cfg.heights)}",
        f"min ratio theta / y2^((k-1)/k) = {fmt(rep.min_ratio)} at {rep.argmin}",
        f"per-height fit: slope = {fmt(rep.fit_slope)}, constant = {fmt(rep.fit_const)}",
    ]
    return rep.min_ratio > 0, lines


def _scenario_acceptance(cfg: ExperimentConfig, out_dir: Path):
    results = acc.run_all(quick=cfg.quick, seed=cfg.seed, barrier_m=cfg.barrier_m)
    rows = [
        (r.cid, r.name, r.measured, r.tolerance, "pass" if r.passed else "fail", r.seconds)
        for r in results
    ]
    write_csv(
        out_dir / "acceptance.csv",
        ("criterion", "name", "measured", "tolerance", "verdict", "seconds"),
        rows,
    )
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"overall: {'pass' if ok else 'fail'}")
    return ok, lines


_RUNNERS = {
    "solve": _scenario_solve,
    "envelope": _scenario_envelope,
    "homogeneous": _scenario_homogeneous,
    "barrier-certify": _scenario_barrier,
    "exponent-fit": _scenario_exponent,
    "appendix-verify": _scenario_appendix,
    "doubling-check": _scenario_doubling,
    "angle-check": _scenario_angle,
    "acceptance": _scenario_acceptance,
}


def run(cfg: ExperimentConfig) -> int:
    cfg.validate()
    out_dir = Path(cfg.out) / cfg.scenario
    out_dir.mkdir(parents=True, exist_ok=True)
    ok, lines = _RUNNERS[cfg.scenario](cfg, out_dir)
    header = [f"scenario: {cfg.scenario}", f"seed: {cfg.seed}"]
    path = _summary(out_dir, header + lines)
    print("\n".join(header + lines))
    print(f"summary written to {path}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="malab",
        description="Numerical laboratory for Monge-Ampere problems on degenerate convex domains",
    )
    parser.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    parser.add_argument("--scenario", choices=SCENARIOS, default=None)
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        raw = parse_config(args.config) if args.config else {}
        if args.scenario is not None:
            raw["scenario"] = args.scenario
        if args.out is not None:
            raw["out"] = args.out
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = ExperimentConfig.from_mapping(raw)
        return run(cfg)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
