"""Campaign orchestration: configuration, verification runs, report
emission, and the command-line entry point.

Campaigns (dependency order validate -> calibrate -> verify -> sweep):

    validate           hypothesis-class and admissibility checks
    verify-inequality  calibrate (tau, t), empirical h threshold, and the
                       pointwise lower-bound verification over the h grid
    verify-lemmas      weight/phase lemma suite (sandwich, weight bounds,
                       q >= 0, kink continuity, derivative consistency)
    phase-scaling      sup phi0 ~ h^-p (log 1/h)^q exponent fit
    resolvent-sweep    g_s(h, h) sweep against the theorem rates
    carleman-check     empirical constants of the global weighted and
                       near-origin estimates on the canonical test family
    all                everything above, in order

Exit codes: 0 = all pass, 2 = verification failures recorded,
3 = configuration error, 4 = numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, inequality_verifier as iv, resolvent_lab as rl
from .errors import (CalibrationError, ConfigError, DomainError, NumericError,
                     ThresholdNotFoundError)
from .fitting import fit_report  # noqa: F401  (public here as well)
from .potential_model import (FunctionFamily, PotentialComponent,
                              PotentialParams, RadialPotential, validate)
from .scales import (BETA_MAX, ConstructionParams, check_admissible,
                     default_construction, derive_scales)
from .weight_phase import build as build_weight_phase

CAMPAIGNS = ("validate", "verify-inequality", "verify-lemmas",
             "phase-scaling", "resolvent-sweep", "carleman-check", "all")

_DEFAULT_CALIBRATION_H = (1e-11, 1e-12, 1e-13)

_DEFAULT_TOLERANCES = {
    "margin_rel": 1e-9,          # pass tolerance relative to (E_min/2) w'
    "sandwich": 1e-10,
    "continuity": 1e-10,
    "fd_consistency": 1e-6,
    "phase_p": 0.1,              # |fitted p - expected p|
    "carleman_growth": 1.10,     # max step ratio after the first 3 points
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Parsed and validated run configuration."""

    campaign: str
    params: PotentialParams
    cp: ConstructionParams
    h_values: list[float]
    calibration_h: list[float]
    grid: iv.GridSpec
    concrete: RadialPotential | None = None
    mode: str = "envelope"
    resolvent: dict = field(default_factory=dict)
    outdir: str = "out"
    formats: tuple = ("json",)
    dump_weights: bool = False
    dump_margins: bool = False
    dump_modes: bool = False
    jobs: int = 1
    seed: int = 7
    compute_threshold: bool = True
    tolerances: dict = field(default_factory=lambda: dict(_DEFAULT_TOLERANCES))
    raw: dict = field(default_factory=dict)


def _family_from(cfg) -> FunctionFamily:
    if isinstance(cfg, FunctionFamily):
        return cfg
    return FunctionFamily(cfg["family"], float(cfg.get("exponent", 1.0)))


def _h_grid_values(cfg: dict) -> list[float]:
    h_min = float(cfg.get("min", 1e-8))
    h_max = float(cfg.get("max", 1e-6))
    points = int(cfg.get("points", 10))
    spacing = cfg.get("spacing", "log")
    if not (0.0 < h_min <= h_max < 1.0):
        raise ConfigError(f"h_grid range ({h_min}, {h_max}) invalid")
    if points < 1:
        raise ConfigError("h_grid needs at least 1 point")
    if points == 1:
        return [h_min]
    if spacing == "log":
        return list(np.geomspace(h_min, h_max, points))
    if spacing == "linear":
        return list(np.linspace(h_min, h_max, points))
    raise ConfigError(f"unknown h_grid spacing {spacing!r}")


def parse_config(doc: dict, campaign: str | None = None) -> RunConfig:
    """Build a RunConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    camp = campaign or doc.get("campaign", "all")
    if camp not in CAMPAIGNS:
        raise ConfigError(f"unknown campaign {camp!r}; choose from {CAMPAIGNS}")

    pot = dict(doc.get("potential", {}))
    concrete_cfg = pot.pop("concrete", None)
    fam_fields = {}
    for key, name in (("mL", "mL_family"), ("y", "y_family"),
                      ("mS", "mS_family")):
        if key in pot:
            fam_fields[name] = _family_from(pot.pop(key))
    try:
        params = PotentialParams(
            n=int(pot.get("n", 3)), beta=float(pot.get("beta", 0.0)),
            c0=float(pot.get("c0", 0.0)), delta=float(pot.get("delta", 1.0)),
            cS=float(pot.get("cS", 0.0)), rho=float(pot.get("rho", 2.0)),
            cL=float(pot.get("cL", 0.0)),
            b=(float(pot["b"]) if pot.get("b") is not None else None),
            p_exponent=float(pot.get("p_exponent", 2.0)), **fam_fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad potential section: {exc}") from exc

    con = dict(doc.get("construction", {}))
    # out-of-class beta/delta are reported by the validate campaign, not
    # rejected at parse time; fall back to the unconstrained gamma default
    beta_cp = params.beta if 0.0 <= params.beta < BETA_MAX else 0.0
    delta_cp = params.delta if 0.0 <= params.delta <= 1.0 else 1.0
    try:
        cp = default_construction(
            delta_cp, beta_cp, params.rho,
            eps_exponent=float(con.get("eps_exponent", 0.7)),
            E_min=float(con.get("E_min", 1.0)),
            E_max=float(con.get("E_max", con.get("E_min", 1.0))),
            rho_tilde=(float(con["rho_tilde"])
                       if con.get("rho_tilde") is not None else None))
        overrides = {k: float(con[k]) for k in ("gamma", "tau", "kappa", "t")
                     if k in con}
        if overrides:
            cp = replace(cp, **overrides)
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"bad construction section: {exc}") from exc

    concrete = None
    if concrete_cfg:
        comps = []
        for c in concrete_cfg:
            comps.append(PotentialComponent(
                kind=c["kind"], c=float(c["c"]),
                exponent=float(c.get("exponent", 0.0)),
                mS=(_family_from(c["mS"]) if c.get("mS") else None),
                delta=float(c.get("delta", params.delta))))
        concrete = RadialPotential(comps, params)

    grid_cfg = dict(doc.get("grid", {}))
    try:
        grid = iv.GridSpec(
            r_min=float(grid_cfg.get("r_min", 1e-4)),
            r_max=(float(grid_cfg["r_max"])
                   if grid_cfg.get("r_max") is not None else None),
            points_per_decade=int(grid_cfg.get("points_per_decade", 64)),
            kink_exclusion=float(grid_cfg.get("kink_exclusion", 1e-6)))
    except DomainError as exc:
        raise ConfigError(f"bad grid section: {exc}") from exc

    res = dict(doc.get("resolvent", {}))
    if "s" in res and float(res["s"]) <= 0.5:
        raise ConfigError(f"resolvent weight s={res['s']} must exceed 1/2")

    out = dict(doc.get("output", {}))
    formats = tuple(out.get("formats", ("json",)))
    bad = set(formats) - {"csv", "json"}
    if bad:
        raise ConfigError(f"unknown output formats {sorted(bad)}")

    tol = dict(_DEFAULT_TOLERANCES)
    tol.update(doc.get("tolerances", {}))

    return RunConfig(
        campaign=camp, params=params, cp=cp,
        h_values=_h_grid_values(dict(doc.get("h_grid", {}))),
        calibration_h=[float(h) for h in doc.get(
            "calibration_h", _DEFAULT_CALIBRATION_H)],
        grid=grid, concrete=concrete,
        mode=doc.get("mode", "concrete" if concrete else "envelope"),
        resolvent=res, outdir=out.get("directory", "out"), formats=formats,
        dump_weights=bool(out.get("dump_weights", False)),
        dump_margins=bool(out.get("dump_margins", False)),
        dump_modes=bool(out.get("dump_modes", False)),
        jobs=default_jobs(doc.get("jobs")), seed=int(doc.get("seed", 7)),
        compute_threshold=bool(doc.get("compute_threshold", True)),
        tolerances=tol, raw=doc)


def load_config(path: str, campaign: str | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, campaign)


def default_jobs(requested=None) -> int:
    """--jobs, else CARLEMAN_FORGE_JOBS, else available parallelism."""
    if requested is not None:
        k = int(requested)
        if k < 1:
            raise ConfigError(f"jobs={k} must be >= 1")
        return k
    env = os.environ.get("CARLEMAN_FORGE_JOBS")
    if env:
        try:
            k = int(env)
        except ValueError as exc:
            raise ConfigError(
                f"CARLEMAN_FORGE_JOBS={env!r} is not an integer") from exc
        if k < 1:
            raise ConfigError(f"CARLEMAN_FORGE_JOBS={k} must be >= 1")
        return k
    return os.cpu_count() or 1


def _pmap(fn, items, jobs: int):
    """Order-preserving map, threaded when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------


def _case_from(cfg: RunConfig) -> iv.VerificationCase:
    return iv.VerificationCase(params=cfg.params, cp=cfg.cp,
                               mode=cfg.mode, V=cfg.concrete)


def campaign_validate(cfg: RunConfig) -> dict:
    violations = list(validate(cfg.params))
    admissibility = {}
    for h in cfg.h_values:
        ok, diag = check_admissible(h, cfg.params.delta)
        admissibility[repr(h)] = {"admissible": ok, "diagnostics": diag}
        if not ok:
            violations.append(f"h={h:.6g} inadmissible: {'; '.join(diag)}")
    return {"passed": not violations, "violations": violations,
            "admissibility": admissibility}


def campaign_verify_inequality(cfg: RunConfig) -> dict:
    case = _case_from(cfg)
    tau, t, cal_reports = iv.calibrate(case, cfg.calibration_h, cfg.grid)
    case = case.with_cp(case.cp.with_tau_t(tau, t))
    out = {"tau": tau, "t": t,
           "calibration": {repr(h): rep.to_dict()
                           for h, rep in cal_reports.items()}}
    if cfg.compute_threshold:
        out["empirical_h_threshold"] = iv.empirical_h_threshold(
            case, grid=cfg.grid)

    def one(h):
        sc = derive_scales(h, cfg.params.delta, case.cp)
        wp = build_weight_phase(sc, case.cp, cfg.params, case.energy)
        rep = iv.verify_key_lower(wp, cfg.grid, mode=case.mode, V=case.V,
                                  case_id=case.case_id)
        return h, wp, rep

    results = _pmap(one, sorted(cfg.h_values, reverse=True), cfg.jobs)
    out["reports"] = {repr(h): rep.to_dict() for h, _, rep in results}
    out["passed"] = all(rep.passed for _, _, rep in results)
    out["_dump"] = results   # consumed by the report writer, not serialized
    return out


def lemma_suite(wp, tolerances: dict | None = None,
                n_sandwich: int = 1000) -> dict:
    """Sandwich bound, kink continuity, and derivative consistency for one
    weight/phase bundle."""
    tol = dict(_DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    r = np.logspace(0.0, 6.0, n_sandwich)
    lhs, mid, rhs, ok = wp.sandwich_check(r, tol=tol["sandwich"])
    sandwich_ok = bool(np.all(ok))

    # one-sided continuity of w and phi0 at the kinks {1, b, a}
    a = wp.scales.a
    jumps = {}
    for name, kk in (("r=1", 1.0), ("r=b", wp.b), ("r=a", a)):
        lo, hi = kk * (1.0 - 1e-9), kk * (1.0 + 1e-9)
        w_lo, _ = wp.w_eval(lo)
        w_hi, _ = wp.w_eval(hi)
        p_lo, p_hi = wp.phi0_eval(lo), wp.phi0_eval(hi)
        jumps[name] = {
            "w": abs(w_hi - w_lo) / max(abs(w_lo), 1e-300),
            "phi0": abs(p_hi - p_lo) / max(abs(p_lo), 1e-300),
        }
    continuity_ok = all(v <= 100.0 * 1e-9 + tol["continuity"]
                        for d in jumps.values() for v in d.values())

    # centered finite differences vs the closed-form derivatives
    probes = np.array([0.5, 1.5, 3.0, 0.5 * (1.0 + a),
                       2.0 * a, 10.0 * a])
    probes = probes[(probes > 1e-3)]
    step = 1e-6
    fd_err = 0.0
    for r0 in probes:
        hh = step * r0
        p_fd = (wp.phi0_eval(r0 + hh) - wp.phi0_eval(r0 - hh)) / (2.0 * hh)
        p_cl = wp.phi0_prime_eval(r0)
        fd_err = max(fd_err, abs(p_fd - p_cl) / max(abs(p_cl), 1e-300))
        w_p, _ = wp.w_eval(r0 + hh)
        w_m, _ = wp.w_eval(r0 - hh)
        _, wprime = wp.w_eval(r0)
        fd_err = max(fd_err, abs((w_p - w_m) / (2.0 * hh) - wprime)
                     / max(abs(wprime), 1e-300))
    fd_ok = fd_err < tol["fd_consistency"]
    return {
        "sandwich_ok": sandwich_ok,
        "sandwich_max_violation": float(np.max(
            np.maximum(lhs - mid, mid - rhs))),
        "continuity": jumps, "continuity_ok": continuity_ok,
        "fd_max_rel_err": fd_err, "fd_ok": fd_ok,
        "passed": sandwich_ok and continuity_ok and fd_ok,
    }


def campaign_verify_lemmas(cfg: RunConfig) -> dict:
    case = _case_from(cfg)
    wl = iv.verify_w_lemma(case, cfg.h_values, cfg.grid)

    def one(h):
        sc = derive_scales(h, cfg.params.delta, cfg.cp)
        wp = build_weight_phase(sc, cfg.cp, cfg.params, case.energy)
        return h, lemma_suite(wp, cfg.tolerances)

    suites = _pmap(one, sorted(cfg.h_values, reverse=True), cfg.jobs)
    passed = wl["passed"] and all(s["passed"] for _, s in suites)
    return {"passed": passed, "weight_bounds": wl,
            "per_h": {repr(h): s for h, s in suites}}


def expected_phase_exponent(delta: float) -> float:
    """Limiting growth exponent of sup phi0: sigma (1/k_inf - 1)."""
    if delta == 1.0:
        k_inf = 1.0
    elif delta == 0.0:
        k_inf = 1.0 / 3.0
    else:
        k_inf = (1.0 + 2.0 * delta) / 3.0
    return (1.0 / 3.0) * (1.0 / k_inf - 1.0)


def campaign_phase_scaling(cfg: RunConfig) -> dict:
    case = _case_from(cfg)
    p, q, c = iv.phase_scaling_fit(case, cfg.h_values, mode="joint")
    expected = expected_phase_exponent(cfg.params.delta)
    ok = abs(p - expected) <= cfg.tolerances["phase_p"]
    return {"passed": ok, "p": p, "q": q, "c": c,
            "expected_p": expected, "tolerance": cfg.tolerances["phase_p"]}


def campaign_resolvent_sweep(cfg: RunConfig) -> dict:
    res = cfg.resolvent
    h_values = (_h_grid_values(res["h_grid"]) if res.get("h_grid")
                else cfg.h_values)
    template = rl.ResolventProblem(
        h=h_values[0], epsilon=h_values[0], V=cfg.concrete,
        n=int(res.get("n", cfg.params.n)), s=float(res.get("s", 1.0)),
        E=float(res.get("E", cfg.cp.E_min)),
        R=(float(res["R"]) if res.get("R") is not None else None),
        N=(int(res["N"]) if res.get("N") is not None else None),
        ell_max=(int(res["ell_max"]) if res.get("ell_max") is not None
                 else None))
    sweep = rl.sweep_and_fit(
        template, h_values, delta=cfg.params.delta,
        rho_tilde=cfg.cp.rho_tilde,
        eps_margin=float(res.get("eps_margin", 0.05)))
    return {"passed": sweep.consistent and sweep.aborted is None,
            "rate": list(sweep.rate), "C_fit": sweep.C_fit,
            "fit": {"p": sweep.p, "q": sweep.q, "c": sweep.c,
                    "residual": sweep.fit_residual},
            "aborted": sweep.aborted,
            "points": [{"h": h, "epsilon": e, "g": g, "ell_star": l}
                       for h, e, g, l in zip(sweep.h, sweep.epsilon,
                                             sweep.g, sweep.ell_star)],
            "_sweep": sweep}


def _growth_bounded(values: list[float], limit: float) -> bool:
    """No step ratio above `limit` after the first three points."""
    for i in range(max(3, 1), len(values)):
        prev, cur = abs(values[i - 1]), abs(values[i])
        if prev > 1e-12 and cur / prev > limit:
            return False
    return True


def campaign_carleman_check(cfg: RunConfig) -> dict:
    res = cfg.resolvent
    n = int(res.get("n", cfg.params.n))
    s = float(res.get("s", 1.0))
    E = float(res.get("E", cfg.cp.E_min))
    car = dict(cfg.raw.get("carleman", {}))
    h_values = (_h_grid_values(car["h_grid"]) if car.get("h_grid")
                else cfg.h_values)
    family = rl.canonical_test_family(count=12, r_lo=0.1, r_hi=20.0,
                                      seed=cfg.seed)
    origin_family = rl.canonical_test_family(count=12, r_lo=0.02, r_hi=0.9,
                                             seed=cfg.seed + 1)
    hs = sorted(h_values, reverse=True)

    def one(h):
        sc = derive_scales(h, cfg.params.delta, cfg.cp)
        wp = build_weight_phase(sc, cfg.cp, cfg.params, E)
        spec = rl.RadialOperatorSpec(n=n, nu=0.0, h=h, E=E, epsilon=h,
                                     s=s, R=50.0, N=4096, sign=1)
        c_emp = max(rl.carleman_numeric_check(wp, spec, v, V=cfg.concrete)
                    for v in family)
        ratios = [rl.near_origin_check(spec, v, t0=-0.25, V=cfg.concrete,
                                       beta=cfg.params.beta)
                  for v in origin_family]
        near = max(r["ratio"] for r in ratios)
        sens = {ab: max(r["sensitivity"][ab] for r in ratios)
                for ab in (0.5, 1.0, 2.0)}
        return h, c_emp, near, sens

    rows = _pmap(one, hs, cfg.jobs)
    limit = cfg.tolerances["carleman_growth"]
    c_ok = _growth_bounded([r[1] for r in rows], limit)
    n_ok = _growth_bounded([r[2] for r in rows], limit)
    return {"passed": c_ok and n_ok,
            "carleman_bounded": c_ok, "near_origin_bounded": n_ok,
            "per_h": [{"h": h, "C_emp": c, "near_origin_ratio": ratio,
                       "alpha_sensitivity": {repr(k): v
                                             for k, v in sens.items()}}
                      for h, c, ratio, sens in rows]}


_CAMPAIGN_FNS = {
    "validate": campaign_validate,
    "verify-inequality": campaign_verify_inequality,
    "verify-lemmas": campaign_verify_lemmas,
    "phase-scaling": campaign_phase_scaling,
    "resolvent-sweep": campaign_resolvent_sweep,
    "carleman-check": campaign_carleman_check,
}

# dependency order for campaign=all
_ALL_ORDER = ("validate", "verify-inequality", "verify-lemmas",
              "phase-scaling", "resolvent-sweep", "carleman-check")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class CampaignReport:
    config_echo: dict
    version: str
    campaigns: dict
    passed: bool
    timestamp: float

    def to_dict(self) -> dict:
        body = {}
        for name, payload in self.campaigns.items():
            body[name] = {k: v for k, v in payload.items()
                          if not k.startswith("_")}
        return {"version": self.version, "config": self.config_echo,
                "campaigns": body, "passed": self.passed,
                "timestamp": self.timestamp}


def _json_scalar(obj):
    """Fallback serializer for numpy scalars and arrays."""
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _emit_reports(cfg: RunConfig, report: CampaignReport) -> None:
    os.makedirs(cfg.outdir, exist_ok=True)
    if "json" in cfg.formats:
        with open(os.path.join(cfg.outdir, "report.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True,
                      default=_json_scalar)
            fh.write("\n")
    if "csv" not in cfg.formats and not (cfg.dump_weights or cfg.dump_margins
                                         or cfg.dump_modes):
        return
    sweep = report.campaigns.get("resolvent-sweep", {}).get("_sweep")
    if sweep is not None and "csv" in cfg.formats:
        running = sweep.C_running or [math.nan] * len(sweep.h)
        _write_csv(
            os.path.join(cfg.outdir, "sweep.csv"),
            ["h", "epsilon", "ell_star", "g", "log_g", "bound_rate",
             "C_fit_running"],
            [(h, e, l, g, math.log(g),
              h ** -sweep.rate[0] * math.log(1.0 / h) ** sweep.rate[1], c)
             for h, e, l, g, c in zip(sweep.h, sweep.epsilon, sweep.ell_star,
                                      sweep.g, running)])
        if cfg.dump_modes:
            _write_csv(os.path.join(cfg.outdir, "modes.csv"),
                       ["h", "ell", "norm"],
                       [(h, ell, val)
                        for h, norms in zip(sweep.h, sweep.mode_norms)
                        for ell, val in norms])
    dump = report.campaigns.get("verify-inequality", {}).get("_dump")
    if dump:
        for h, wp, rep in dump:
            tag = f"h{h:.3e}".replace("-", "m").replace("+", "p")
            if cfg.dump_margins:
                _write_csv(os.path.join(cfg.outdir, f"margins-{tag}.csv"),
                           ["r", "margin"],
                           zip(rep.grid.tolist(), rep.margins.tolist()))
            if cfg.dump_weights:
                r = rep.grid
                w, wprime = wp.w_eval(r)
                _write_csv(
                    os.path.join(cfg.outdir, f"weights-{tag}.csv"),
                    ["r", "w", "w_prime", "phi0", "phi0_prime", "W", "Phi",
                     "Phi1", "q"],
                    zip(r.tolist(), w.tolist(), wprime.tolist(),
                        np.atleast_1d(wp.phi0_eval(r)).tolist(),
                        np.atleast_1d(wp.phi0_prime_eval(r)).tolist(),
                        np.atleast_1d(wp.W_eval(r)).tolist(),
                        np.atleast_1d(wp.Phi_eval(r)).tolist(),
                        np.atleast_1d(wp.aux_eval(r, "Phi1")).tolist(),
                        np.atleast_1d(wp.q_eval(r)).tolist()))


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def run(cfg: RunConfig) -> tuple[CampaignReport, int]:
    """Execute the configured campaigns; (report, exit code)."""
    names = _ALL_ORDER if cfg.campaign == "all" else (cfg.campaign,)
    campaigns: dict = {}
    passed = True
    code = 0
    for name in names:
        try:
            payload = _CAMPAIGN_FNS[name](cfg)
        except (CalibrationError, ThresholdNotFoundError) as exc:
            payload = {"passed": False, "error": str(exc)}
        except (NumericError, DomainError) as exc:
            payload = {"passed": False, "error": str(exc)}
            campaigns[name] = payload
            passed = False
            code = 4
            break
        campaigns[name] = payload
        passed = passed and payload.get("passed", False)
    if code == 0 and not passed:
        code = 2
    report = CampaignReport(
        config_echo=cfg.raw, version=__version__, campaigns=campaigns,
        passed=passed, timestamp=time.time())
    _emit_reports(cfg, report)
    return report, code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="carleman-forge",
        description="Verification campaigns for the Carleman weight/phase "
                    "construction and weighted resolvent sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute campaigns from a JSON config")
    p_run.add_argument("--config", required=True, help="path to JSON config")
    p_run.add_argument("--campaign", choices=CAMPAIGNS, default=None)
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--dump-weights", action="store_true")
    p_run.add_argument("--dump-margins", action="store_true")
    p_run.add_argument("--dump-modes", action="store_true")
    p_run.add_argument("--jobs", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.campaign)
        if args.out:
            cfg.outdir = args.out
        if args.dump_weights:
            cfg.dump_weights = True
        if args.dump_margins:
            cfg.dump_margins = True
        if args.dump_modes:
            cfg.dump_modes = True
        if args.jobs is not None:
            cfg.jobs = default_jobs(args.jobs)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    try:
        report, code = run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    for name, payload in report.campaigns.items():
        verdict = "PASS" if payload.get("passed") else "FAIL"
        extra = f" ({payload['error']})" if "error" in payload else ""
        print(f"{name}: {verdict}{extra}")
    print(f"overall: {'PASS' if report.passed else 'FAIL'} (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
