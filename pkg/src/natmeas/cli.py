"""Command-line experiment harness.

One entry point with subcommands dims | kpz | loewner | levy | gmc | perc |
suite.  Global flags: --seed --trials --threads --out --config.  Every trial
draws its randomness from a Philox stream keyed by (seed, trial index), so
results are identical across repeat runs and thread counts; records are
serialized in trial order as NDJSON plus a summary CSV.

Config files are flat key=value lines; lists use a=[1,2,3].  Exit codes:
0 all asserted tolerances pass, 1 a tolerance failed, 2 unknown subcommand,
3 invalid parameter, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gmc as gmc_mod
from . import levy as levy_mod
from . import params as params_mod
from .loewner import ForceSpec, boundary_hits, halfplane_capacity, simulate_driving, trace_curve
from .params import ParameterRangeError, SleParams
from .perc import (
    AnnulusSpec,
    area_measure,
    arm_probability,
    energy_estimate,
    pivotal_measure,
    pseudo_interface,
    quasi_mult_check,
    sample_config,
)
SCHEMA_VERSION = 1

__all__ = ["ExperimentSpec", "TrialRecord", "run_experiment", "run_trials_serialized",
           "parse_config", "main", "SCHEMA_VERSION"]


@dataclass
class ExperimentSpec:
    subcommand: str
    params: dict
    trials: int = 1
    seed: int = 0
    threads: int = 1
    out: Path | None = None

    def derived_seed(self, trial: int) -> int:
        return (self.seed ^ (0x9E3779B97F4A7C15 * (trial + 1))) & ((1 << 64) - 1)


@dataclass
class TrialRecord:
    trial: int
    derived_seed: int
    payload: dict
    elapsed: float

    def to_json(self) -> str:
        # wall time stays on the object and in the summary CSV; keeping it out
        # of the line preserves byte-identical NDJSON across runs and threads
        doc = {"schema": SCHEMA_VERSION, "trial": self.trial, "seed": self.derived_seed}
        doc.update(self.payload)
        return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                          allow_nan=True)


def parse_config(path: str | Path) -> dict:
    """Flat key=value file; lists as a=[1,2,3]; # comments."""
    out: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = _parse_scalar_or_list(val)
    return out


def _parse_scalar_or_list(val: str):
    if val.startswith("[") and val.endswith("]"):
        inner = val[1:-1].strip()
        return [_parse_scalar(v.strip()) for v in inner.split(",")] if inner else []
    return _parse_scalar(val)


def _parse_scalar(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    return v


# ---------------------------------------------------------------------------
# per-subcommand trial payloads and summaries

def _dims_rows(params: dict) -> list[dict]:
    rows = []
    grid = params.get("kappa_grid", 20)
    for tag, lo, hi in (("cut_points", 4.0, 8.0), ("pivotal", 4.0, 8.0),
                        ("gasket", 4.0, 8.0), ("carpet", 8 / 3, 4.0)):
        for k in np.linspace(lo + 1e-3, hi - 1e-3, grid):
            p = SleParams(float(k))
            kind = params_mod.FractalKind(tag)
            rows.append({
                "kind": tag, "kappa": float(k), "rho": "",
                "dimension": params_mod.dimension(kind, p),
                "quantum_exponent": params_mod.quantum_exponent(kind, p),
                "kpz_residual": params_mod.kpz_residual(kind, p),
            })
    for k in np.linspace(0.2, 3.8, grid):
        p = SleParams(float(k))
        for rho in np.linspace(-2.0 + k / 80, k / 2 - 2.0 - k / 80, 5):
            kind = params_mod.BOUNDARY_TOUCHING(float(rho))
            rows.append({
                "kind": "boundary_touching", "kappa": float(k), "rho": float(rho),
                "dimension": params_mod.dimension(kind, p),
                "quantum_exponent": params_mod.quantum_exponent(kind, p),
                "kpz_residual": params_mod.kpz_residual(kind, p),
            })
    return rows


def _trial_dims(spec: ExperimentSpec, trial: int) -> dict:
    rows = _dims_rows(spec.params)
    worst = max(abs(r["kpz_residual"]) for r in rows)
    return {"rows": len(rows), "worst_residual": worst}


def _summary_dims(spec: ExperimentSpec, records: list[TrialRecord]) -> tuple[list[dict], bool]:
    rows = _dims_rows(spec.params)
    ok = max(abs(r["kpz_residual"]) for r in rows) < 1e-12
    return rows, ok


def _trial_levy(spec: ExperimentSpec, trial: int) -> dict:
    p = spec.params
    beta = float(p.get("beta", 0.5))
    c = float(p.get("c", 1.0))
    cutoff = float(p.get("cutoff", 1e-6))
    a = float(p.get("scale_factor", 4.0))
    s = spec.derived_seed(trial)
    tau1 = levy_mod.sample_tau_batch(beta, c, 1.0, 1, cutoff=cutoff, seed=s)[0]
    tau_a = levy_mod.sample_tau_batch(beta, c, a, 1, cutoff=cutoff, seed=s + 1)[0]
    return {"tau1": tau1, "tau_a": tau_a}


def _summary_levy(spec: ExperimentSpec, records: list[TrialRecord]) -> tuple[list[dict], bool]:
    p = spec.params
    beta = float(p.get("beta", 0.5))
    c = float(p.get("c", 1.0))
    a = float(p.get("scale_factor", 4.0))
    tau1 = np.array([r.payload["tau1"] for r in records])
    tau_a = np.array([r.payload["tau_a"] for r in records])
    lams = np.geomspace(0.1, 3.0, 100)
    fit = levy_mod.laplace_fit(tau1, lams)
    d, crit = levy_mod.ks_two_sample(tau_a, a ** (1 / beta) * tau1)
    bp = float(p.get("beta_prime", 7 / 6))
    fp = levy_mod.first_passage_sizebias(bp, min(len(records), 4000), seed=spec.seed,
                                         pool=max(20_000, 2 * len(records)))
    tail = levy_mod.fit_tail_slope(fp.tau, 1.5, 20.0, weights=fp.tau ** fp.tilt_power)
    row = {"beta": beta, "c": c, "n": len(records), "beta_hat": fit.beta_hat,
           "c_hat": fit.c_hat, "ks_stat": d, "tail_slope": tail}
    ok = abs(fit.beta_hat - beta) < 0.05 and d < crit
    return [row], ok


def _trial_loewner(spec: ExperimentSpec, trial: int) -> dict:
    p = spec.params
    kappa = float(p.get("kappa", 2.0))
    rho = p.get("rho", None)
    dt = float(p.get("dt", 1e-4))
    horizon = float(p.get("horizon", 1.0))
    tol = float(p.get("tolerance", 1e-3))
    s = spec.derived_seed(trial)
    forces = [ForceSpec("right", 0.0, float(rho))] if rho is not None else []
    d = simulate_driving(SleParams(kappa) if 0 < kappa < 8 else kappa, forces,
                         dt=dt, horizon=horizon, seed=s)
    hits = boundary_hits(d, tol, max_hits=16) if forces else []
    tr = trace_curve(d, resolution=int(p.get("resolution", 512)))
    tip = tr.points[-1]
    hc = halfplane_capacity(tr, n_walks=int(p.get("hcap_walks", 400)), seed=s)
    return {"kappa": kappa, "rho": rho, "hit_times": [t for t, _ in hits],
            "tip": [tip.real, tip.imag], "hcap_est": hc}


def _summary_loewner(spec: ExperimentSpec, records: list[TrialRecord]) -> tuple[list[dict], bool]:
    horizon = float(spec.params.get("horizon", 1.0))
    hcaps = np.array([r.payload["hcap_est"] for r in records])
    hit_frac = np.mean([bool(r.payload["hit_times"]) for r in records])
    row = {"kappa": spec.params.get("kappa", 2.0), "rho": spec.params.get("rho", ""),
           "n": len(records), "mean_hcap": float(hcaps.mean()),
           "hcap_target": 2.0 * horizon, "hit_fraction": float(hit_frac)}
    ok = abs(hcaps.mean() - 2.0 * horizon) < 0.2 * 2.0 * horizon
    return [row], ok


def _trial_gmc(spec: ExperimentSpec, trial: int) -> dict:
    p = spec.params
    n = int(p.get("n", 128))
    gamma = float(p.get("gamma", 0.5))
    eps_cells = float(p.get("eps_cells", 8))
    s = spec.derived_seed(trial)
    f = gmc_mod.sample_gff(n, seed=s)
    m = gmc_mod.gmc_measure(f, gamma, eps_cells / (n - 1))
    box = m.box_mass(0.375, 0.625, 0.375, 0.625)
    return {"n": n, "gamma": gamma, "eps_cells": eps_cells, "box_mass": box}


def _summary_gmc(spec: ExperimentSpec, records: list[TrialRecord]) -> tuple[list[dict], bool]:
    p = spec.params
    n = int(p.get("n", 128))
    gamma = float(p.get("gamma", 0.5))
    eps_cells = float(p.get("eps_cells", 8))
    masses = np.array([r.payload["box_mass"] for r in records])
    target = 0.25 ** 2
    se = masses.std(ddof=1) / math.sqrt(masses.size) if masses.size > 1 else float("nan")
    z = (masses.mean() - target) / se if se > 0 else 0.0
    row = {"n": n, "gamma": gamma, "eps": eps_cells / (n - 1), "test_name": "box_mass_mean",
           "estimate": float(masses.mean()), "stderr": float(se), "zscore": float(z)}
    return [row], abs(z) < 4.0


def _trial_perc(spec: ExperimentSpec, trial: int) -> dict:
    p = spec.params
    verb = p.get("verb", "arms")
    s = spec.derived_seed(trial)
    if verb == "arms":
        radii = p.get("r_outer", 32.0)
        radii = [float(r) for r in (radii if isinstance(radii, list) else [radii])]
        pattern = ("open",) if int(p.get("arms", 1)) == 1 else \
            ("open", "closed", "open", "closed")
        r_in = float(p.get("r_inner", 0.5 if len(pattern) == 1 else 1.0))
        hits = {}
        for j, r_out in enumerate(radii):
            est = arm_probability(AnnulusSpec(r_in, r_out, pattern), 1, seed=s + j)
            hits[str(r_out)] = int(est.p_hat > 0.5)
        return {"verb": verb, "radii": radii, "hits": hits}
    n = int(p.get("n", 128))
    c = sample_config(n, p.get("shape", "box" if verb != "pseudo" else "disk"), seed=s)
    if verb == "pivotal":
        m = pivotal_measure(c, int(p.get("eps_radius", 8)), float(p.get("alpha4_hat", 0.02)))
        return {"verb": verb, "n": n, "atoms": int(m.atoms.shape[0]), "total": m.total()}
    if verb == "area":
        lam = area_measure(c, AnnulusSpec(n / 2, float(n)), float(p.get("alpha1_hat", 0.35)))
        return {"verb": verb, "n": n, "atoms": int(lam.atoms.shape[0]), "total": lam.total()}
    if verb == "energy":
        lam = area_measure(c, AnnulusSpec(n / 2, float(n)), float(p.get("alpha1_hat", 0.35)))
        e = energy_estimate(lam, float(p.get("d", 91 / 48)), float(p.get("eps_exp", 0.1)))
        return {"verb": verb, "n": n, "energy": e}
    if verb == "pseudo":
        pi = pseudo_interface(c)
        return {"verb": verb, "n": n, "stages": len(pi.stages), "p0": int(pi.p0.shape[0])}
    if verb == "qmult":
        q = quasi_mult_check(float(p.get("r1", 2.0)), float(p.get("r2", 8.0)),
                             float(p.get("r3", 32.0)), int(p.get("qmult_trials", 4000)),
                             seed=s)
        return {"verb": verb, "p13": q.p_13, "p12": q.p_12, "p23": q.p_23,
                "upper_holds": bool(q.upper_bound_holds)}
    raise ParameterRangeError(f"unknown perc verb {verb!r}")


def _summary_perc(spec: ExperimentSpec, records: list[TrialRecord]) -> tuple[list[dict], bool]:
    verb = spec.params.get("verb", "arms")
    if verb == "arms":
        radii = records[0].payload["radii"]
        rows = []
        log_p = []
        for r_out in radii:
            hits = np.array([r.payload["hits"][str(r_out)] for r in records], dtype=float)
            p = hits.mean()
            se = math.sqrt(max(p * (1 - p), 1e-12) / hits.size)
            rows.append({"verb": verb, "r_outer": r_out, "p_hat": float(p),
                         "stderr": float(se), "ci_lo": float(p - 2 * se),
                         "ci_hi": float(p + 2 * se)})
            log_p.append(math.log(max(p, 1e-12)))
        if len(radii) >= 2:
            x = np.log(1.0 / np.array(radii))
            if len(radii) >= 3:
                coef, cov = np.polyfit(x, np.array(log_p), 1, cov=True)
                slope = float(coef[0])
                se_slope = math.sqrt(max(float(cov[0][0]), 0.0))
            else:
                slope = float(np.polyfit(x, np.array(log_p), 1)[0])
                se_slope = float("nan")
            rows.append({"verb": "arms_slope", "r_outer": "", "p_hat": slope,
                         "stderr": se_slope, "ci_lo": slope - 2 * se_slope,
                         "ci_hi": slope + 2 * se_slope})
        return rows, True
    if verb in ("pivotal", "area"):
        totals = np.array([r.payload["total"] for r in records])
        row = {"verb": verb, "n": spec.params.get("n", 128),
               "mean_total": float(totals.mean()),
               "stderr": float(totals.std(ddof=1) / math.sqrt(totals.size))
               if totals.size > 1 else float("nan")}
        return [row], True
    if verb == "energy":
        es = np.array([r.payload["energy"] for r in records])
        row = {"verb": verb, "n": spec.params.get("n", 128), "mean_energy": float(es.mean()),
               "max_over_min": float(es.max() / es.min()) if es.min() > 0 else float("inf")}
        return [row], bool(es.max() / es.min() < 10.0)
    if verb == "pseudo":
        p0 = np.array([r.payload["p0"] for r in records], dtype=float)
        row = {"verb": verb, "n": spec.params.get("n", 128), "mean_p0": float(p0.mean()),
               "mean_stages": float(np.mean([r.payload["stages"] for r in records]))}
        return [row], True
    if verb == "qmult":
        holds = all(r.payload["upper_holds"] for r in records)
        row = {"verb": verb, "upper_holds_all": holds}
        return [row], holds
    return [], False


TRIAL_FUNCS = {
    "dims": _trial_dims,
    "kpz": _trial_dims,
    "levy": _trial_levy,
    "loewner": _trial_loewner,
    "gmc": _trial_gmc,
    "perc": _trial_perc,
}

SUMMARY_FUNCS = {
    "dims": _summary_dims,
    "kpz": _summary_dims,
    "levy": _summary_levy,
    "loewner": _summary_loewner,
    "gmc": _summary_gmc,
    "perc": _summary_perc,
}


def run_trials(spec: ExperimentSpec) -> list[TrialRecord]:
    """Fan trials out over threads; records come back ordered by index."""
    fn = TRIAL_FUNCS[spec.subcommand]

    def one(i: int) -> TrialRecord:
        t0 = time.time()
        payload = fn(spec, i)
        return TrialRecord(i, spec.derived_seed(i), payload, time.time() - t0)

    if spec.threads <= 1:
        records = [one(i) for i in range(spec.trials)]
    else:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            records = list(pool.map(one, range(spec.trials)))
    records.sort(key=lambda r: r.trial)
    return records


def run_trials_serialized(spec: ExperimentSpec) -> str:
    """The NDJSON body (without wall times, which are not deterministic)."""
    records = run_trials(spec)
    return "\n".join(r.to_json() for r in records) + "\n"


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    path.write_text(buf.getvalue())


def run_experiment(spec: ExperimentSpec) -> tuple[list[dict], bool]:
    """Execute, persist (NDJSON + summary CSV when spec.out is set), and
    return (summary rows, tolerances passed)."""
    if spec.subcommand == "suite":
        from .suite import RAW_TABLES, format_report, regression_suite

        results = regression_suite(spec.params.get("level", "fast"))
        rows = [{"name": r.name, "group": r.group, "value": r.value, "target": r.target,
                 "tol": r.tol, "passed": r.passed, "seconds": round(r.seconds, 2)}
                for r in results]
        ok = all(r.passed for r in results)
        print(format_report(results))
        if spec.out is not None:
            spec.out.mkdir(parents=True, exist_ok=True)
            _write_csv(spec.out / "suite_summary.csv", rows)
            for table, trows in RAW_TABLES.items():
                _write_csv(spec.out / f"{table}.csv", trows)
            (spec.out / "natmeas_manifest.json").write_text(
                json.dumps({"schema": SCHEMA_VERSION, "level": spec.params.get("level", "fast"),
                            "tables": sorted(RAW_TABLES)}, indent=1) + "\n")
        return rows, ok
    records = run_trials(spec)
    rows, ok = SUMMARY_FUNCS[spec.subcommand](spec, records)
    wall = sum(r.elapsed for r in records)
    for row in rows:
        row.setdefault("wall_seconds", round(wall, 3))
    if spec.out is not None:
        spec.out.mkdir(parents=True, exist_ok=True)
        nd = spec.out / f"{spec.subcommand}_records.ndjson"
        with nd.open("w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")
        _write_csv(spec.out / f"{spec.subcommand}_summary.csv", rows)
        if spec.subcommand in ("dims", "kpz"):
            _write_csv(spec.out / "dims_table.csv", rows)
    return rows, ok


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="natmeas", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand")
    helps = {
        "perc": "verbs arms|pivotal|area|pseudo|energy|qmult. Conventions for "
                "verb=pseudo: the exploration is a disk-shaped radial walk in "
                "chordal stages; outside sites are virtually open on the "
                "counterclockwise arc from the stage anchor; the first anchor "
                "is the easternmost disk site; the next anchor is the walk's "
                "last contact with the origin's surviving component; boundary "
                "touches record the in-domain pair member; all-open configs "
                "terminate after one degenerate stage.",
    }
    for name in ("dims", "kpz", "loewner", "levy", "gmc", "perc", "suite"):
        sp = sub.add_parser(name, description=helps.get(name))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("params", nargs="*", help="key=value overrides")
    args, unknown = parser.parse_known_args(argv)
    if args.subcommand is None or unknown:
        bad = unknown[0] if unknown else "(none)"
        print(f"unknown subcommand or argument: {bad}", file=sys.stderr)
        return 2
    try:
        params: dict = {}
        if args.config:
            params.update(parse_config(args.config))
        for kv in args.params:
            if "=" not in kv:
                raise ParameterRangeError(f"parameter override without '=': {kv!r}")
            k, v = kv.split("=", 1)
            params[k] = _parse_scalar_or_list(v)
        spec = ExperimentSpec(args.subcommand, params, trials=args.trials,
                              seed=args.seed, threads=args.threads,
                              out=Path(args.out) if args.out else None)
    except (ParameterRangeError, ValueError) as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 4
    try:
        rows, ok = run_experiment(spec)
    except (ParameterRangeError, ValueError) as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 4
    if spec.subcommand != "suite":
        for row in rows:
            print(json.dumps(row, sort_keys=True, default=str))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
