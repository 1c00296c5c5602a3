"""Command-line batch runner: config ingestion, Monte Carlo, reports.

Exit codes: 0 success, 2 invalid config or report-schema mismatch,
3 too many aborted (blown-up) paths, 4 a verdict came out "violated".
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import importlib.resources
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import jsonschema
import numpy as np
import scipy

from . import __version__
from .coefficients import Regime, ScalarLipschitz, builtin_kernels, verify_assumptions
from .gronwall import find_lambda0, lemma_suite
from .noise import NoiseKind, NoiseSpec, q_eps_diagnostic, sample_increments
from .regularity import (MIN_LAGS, MIN_PATHS, MIN_SPAN_DECADES, HolderAccumulator, ProfileAccumulator,
                         consistency_verdict, default_lags, predicted_region)
from .solver import (ProblemSpec, Trajectory, dump_trajectory, exact_ou_states, exp_euler_states,
                     factorization_reconstruction, relative_grid_error, stochastic_convolution)
from .spectral import SpectralVector

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_VIOLATED = 0, 2, 3, 4
SEED_ENV = "SPDELAB_SEED"

PATH_EXPERIMENTS = {
    "ou_white": (NoiseKind.WHITE, Regime.WHITE_D1),
    "she_white": (NoiseKind.WHITE, Regime.WHITE_D1),
    "she_colored_q0": (NoiseKind.TRACE_CLASS, Regime.COLORED_Q0),
    "she_colored_qeps": (NoiseKind.HOLDER_EIGEN, Regime.COLORED_QEPS),
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def load_schema() -> dict:
    return json.loads(importlib.resources.files("spdelab").joinpath("config_schema.json").read_text("utf-8"))


def canned_config(name: str) -> dict:
    res = importlib.resources.files("spdelab").joinpath("configs", f"{name}.json")
    if not res.is_file():
        raise ConfigError(f"no canned config named {name!r}")
    return json.loads(res.read_text("utf-8"))


def canned_names() -> list[str]:
    d = importlib.resources.files("spdelab").joinpath("configs")
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def _resolve(schema, root):
    ref = schema.get("$ref")
    if ref:
        node = root
        for part in ref.lstrip("#/").split("/"):
            node = node[part]
        return node
    return schema


def _fill_defaults(instance, schema, root):
    schema = _resolve(schema, root)
    if not isinstance(instance, dict):
        return instance
    for key, sub in schema.get("properties", {}).items():
        sub = _resolve(sub, root)
        if key not in instance and "default" in sub:
            instance[key] = copy.deepcopy(sub["default"])
        if key in instance:
            _fill_defaults(instance[key], sub, root)
    return instance


def validate_config(raw: dict) -> dict:
    """Validate against the schema, then fill every default from it."""
    schema = load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(msgs))
    cfg = _fill_defaults(copy.deepcopy(raw), schema, schema)
    seed = os.environ.get(SEED_ENV)
    if seed is not None:
        try:
            cfg["mc"]["master_seed"] = int(seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {seed!r}") from None
    return cfg


def _claim_p(cfg) -> float:
    p = cfg["claims"]["p"]
    if isinstance(p, str):
        if p.strip().lower() not in ("inf", "infinity"):
            raise ConfigError(f"claims/p: expected a number or 'inf', got {p!r}")
        return math.inf
    return float(p)


def _scalar(d) -> ScalarLipschitz:
    return ScalarLipschitz.elementwise(d["base"], d["scale"], d["shift"])


def build_noise(cfg) -> NoiseSpec:
    pr = cfg["problem"]
    nz = pr["noise"]
    N = pr["n_modes"]
    kind = NoiseKind(nz["kind"])
    if kind is NoiseKind.WHITE:
        return NoiseSpec.white(N)
    eps = nz["eps"] if kind is NoiseKind.HOLDER_EIGEN else None
    q = np.arange(1, N + 1, dtype=float) ** (-nz["decay"])
    return NoiseSpec(q, kind, eps)


def build_problem(cfg) -> ProblemSpec:
    pr = cfg["problem"]
    N = pr["n_modes"]
    M = pr["grid_size"] or 2 * N
    x = pr["x0"]
    c = np.zeros(N)
    if x["kind"] == "mode":
        if x["mode"] > N:
            raise ConfigError("problem/x0/mode exceeds n_modes")
        c[x["mode"] - 1] = x["amplitude"]
    elif x["kind"] == "power":
        c = x["amplitude"] * np.arange(1, N + 1, dtype=float) ** (-x["decay"])
    cl = cfg["claims"]
    return ProblemSpec(N, M, pr["T"], pr["n_steps"], SpectralVector(c), _scalar(pr["f"]), _scalar(pr["g"]),
                       build_noise(cfg), cl["beta"], cl["gamma"], cl["alpha"])


def check_experiment(cfg) -> None:
    """Cross-field checks the schema cannot express."""
    exp = cfg["experiment"]
    try:
        if exp in PATH_EXPERIMENTS or exp == "factorization_check":
            p = build_problem(cfg)
        if exp in PATH_EXPERIMENTS:
            kind, _ = PATH_EXPERIMENTS[exp]
            if p.noise.kind is not kind:
                raise ConfigError(f"problem/noise/kind: experiment {exp} needs {kind.value} noise")
            if exp == "ou_white" and not p.is_ou:
                raise ConfigError("problem/f, problem/g: ou_white needs f = 0 and g = 1")
            cl = cfg["claims"]
            predicted_region(cl["beta"], cl["gamma"], cl["alpha"], _claim_p(cfg))
            _run_kernels(cfg)
            lags = default_lags(p.n_steps, cfg["report"]["n_lags"])
            if lags.size < MIN_LAGS or math.log10(lags[-1] / lags[0]) < MIN_SPAN_DECADES:
                raise ConfigError(f"problem/n_steps: lags {lags.tolist()} need >= {MIN_LAGS} values spanning "
                                  f"{MIN_SPAN_DECADES} decades")
            if cfg["mc"]["n_paths"] < MIN_PATHS:
                raise ConfigError(f"mc/n_paths: the Hölder fit needs >= {MIN_PATHS} paths")
        if exp == "factorization_check" and not p.is_ou:
            raise ConfigError("problem/f, problem/g: factorization_check needs f = 0 and g = 1")
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _run_kernels(cfg):
    exp = cfg["experiment"]
    _, regime = PATH_EXPERIMENTS[exp]
    cl = cfg["claims"]
    if regime is Regime.COLORED_QEPS:
        noise = build_noise(cfg)
        qe = q_eps_diagnostic(noise, noise.eps).value
        return builtin_kernels(regime, cl["gamma"], eps=noise.eps, q_eps=qe)
    return builtin_kernels(regime, cl["gamma"])


# ---------------------------------------------------------------------------
# Monte Carlo over paths


@dataclass
class ChunkResult:
    start: int
    holder: list
    profile: ProfileAccumulator
    aborted: list = field(default_factory=list)
    dumped: list = field(default_factory=list)


def _simulate(cfg, p: ProblemSpec, idx: list[int]):
    seed = cfg["mc"]["master_seed"]
    if cfg["experiment"] == "ou_white":
        X = exact_ou_states(p, seed, idx)
        return X, np.zeros(len(idx), dtype=bool)
    dW = np.stack([sample_increments(p.noise, p.n_steps, p.dt, seed, i).dW for i in idx])
    res = exp_euler_states(p, dW)
    return res.states, res.aborted


def run_chunk(cfg: dict, start: int, stop: int, dump: bool = False) -> ChunkResult:
    p = build_problem(cfg)
    rep = cfg["report"]
    idx = list(range(start, stop))
    X, aborted = _simulate(cfg, p, idx)
    lags = default_lags(p.n_steps, rep["n_lags"])
    keep = X[~aborted]
    holder = [HolderAccumulator(th, rep["p"], lags) for th in rep["thetas"]]
    prof = ProfileAccumulator(rep["profile_p"], rep["profile_thetas"])
    if keep.shape[0]:
        for acc in holder:
            acc.add(keep)
        prof.add(keep[:, :: rep["profile_stride"]])
    dumped = []
    if dump:
        for j, i in enumerate(idx):
            if i < cfg["mc"]["dump_limit"] and not aborted[j]:
                dumped.append((i, X[j]))
    return ChunkResult(start, holder, prof, [idx[j] for j in np.flatnonzero(aborted)], dumped)


def _chunks(n_paths: int, size: int):
    return [(s, min(s + size, n_paths)) for s in range(0, n_paths, size)]


def _workers(cfg) -> int:
    return cfg["mc"]["parallel"] or os.cpu_count() or 1


def run_paths(cfg: dict, dump: bool = False) -> list[ChunkResult]:
    """Simulate all paths in fixed chunks; results come back in chunk order."""
    chunks = _chunks(cfg["mc"]["n_paths"], cfg["mc"]["chunk_size"])
    workers = min(_workers(cfg), len(chunks))
    if workers <= 1:
        return [run_chunk(cfg, a, b, dump) for a, b in chunks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(run_chunk, cfg, a, b, dump) for a, b in chunks]
        return [f.result() for f in futs]


def _merge(results: list[ChunkResult]):
    holder = None
    prof = None
    aborted = []
    for r in results:
        aborted += r.aborted
        if r.profile.n_paths == 0:
            continue
        holder = r.holder if holder is None else [a.merge(b) for a, b in zip(holder, r.holder)]
        prof = r.profile if prof is None else prof.merge(r.profile)
    return holder, prof, aborted


# ---------------------------------------------------------------------------
# report writing


def _g(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else ("inf" if math.isinf(x) else f"{x:.10g}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _g(v) for v in r])


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


@dataclass
class RunOutcome:
    status: int
    files: list
    message: str = ""
    extra: dict = field(default_factory=dict)


def _assumption_rows(label, report):
    return [(label, report.alpha, name, v, c) for name, v, c in report.rows()]


def _path_experiment(cfg, out, dump) -> RunOutcome:
    p = build_problem(cfg)
    rep = cfg["report"]
    n_paths = cfg["mc"]["n_paths"]
    results = run_paths(cfg, dump)
    holder, prof, aborted = _merge(results)
    files = []
    if dump:
        pdir = os.path.join(out, "paths")
        for r in results:
            for i, X in r.dumped:
                files.append(dump_trajectory(Trajectory(p.times, X, cfg["experiment"]), pdir, i))
    if len(aborted) > rep["max_abort_fraction"] * n_paths:
        return RunOutcome(EXIT_BLOWUP, files, f"{len(aborted)} of {n_paths} paths aborted (blow-up)",
                          {"aborted": aborted})
    if holder is None:
        return RunOutcome(EXIT_BLOWUP, files, "all paths aborted", {"aborted": aborted})
    try:
        estimates = [acc.estimate(p.dt) for acc in holder]
    except ValueError as e:
        # e.g. zero noise with a zero initial state: nothing to fit
        return RunOutcome(EXIT_CONFIG, files, f"cannot estimate regularity: {e}", {"aborted": aborted})
    cl = cfg["claims"]
    region = predicted_region(cl["beta"], cl["gamma"], cl["alpha"], _claim_p(cfg))
    profile = prof.profile()
    report = consistency_verdict(estimates, region, rep["slack"], profile)

    f_rep = os.path.join(out, "regularity_report.csv")
    _write_text(f_rep, report.to_csv())
    f_prof = os.path.join(out, "spatial_profile.csv")
    _write_csv(f_prof, ["theta", "p", "sup_moment", "sup_moment_half", "ratio", "threshold", "divergent"],
               [(th, profile.p, m, mh, r, profile.threshold, d) for th, m, mh, r, d in
                zip(profile.thetas, profile.sup_moment, profile.sup_moment_half, profile.ratio, profile.divergent)])
    alpha = rep["assumption_alpha"] if rep["assumption_alpha"] is not None else cl["alpha"]
    ar = verify_assumptions(_run_kernels(cfg), min(alpha, 0.999), p.T)
    f_ass = os.path.join(out, "assumption_report.csv")
    _write_csv(f_ass, ["regime", "alpha", "quantity", "value", "convergent"],
               _assumption_rows(PATH_EXPERIMENTS[cfg["experiment"]][1].value, ar))
    summary = report.summary() + f"aborted paths: {len(aborted)} of {n_paths}\n"
    f_sum = os.path.join(out, "summary.txt")
    _write_text(f_sum, summary)
    files += [f_rep, f_prof, f_ass, f_sum]
    status = EXIT_VIOLATED if report.any_violated else EXIT_OK
    extra = {"aborted": aborted, "estimates": estimates, "report": report, "profile": profile}
    return RunOutcome(status, files, summary, extra)


def _gronwall_experiment(cfg, out) -> RunOutcome:
    from .coefficients import PowerKernel

    gc = cfg["gronwall"]
    cases = lemma_suite(cfg["mc"]["master_seed"], gc["n_cases"], gc["T"], gc["n_grid"], gc["target"],
                        gc["max_exponent"], gc["lambda_max"])
    f_csv = os.path.join(out, "gronwall_suite.csv")
    _write_csv(f_csv, ["case", "exponent", "lambda0", "kernel_mass", "hypothesis_slack", "conclusion_factor",
                       "conclusion_holds"],
               [(c.index, c.exponent, c.lambda0, c.kernel_mass, c.hypothesis_slack, c.conclusion_factor,
                 c.conclusion_holds) for c in cases])
    violations = sum(not c.conclusion_holds for c in cases)
    ref = find_lambda0(PowerKernel(1.0, 0.5), 1.0, gc["target"])
    summary = (f"cases: {len(cases)}, conclusion violations: {violations}\n"
               f"lambda0 for K(t)=t^-1/2 on [0,1]: {ref.lambda0:.10g} (mass {ref.kernel_mass_at_lambda0:.10g})\n")
    f_sum = os.path.join(out, "summary.txt")
    _write_text(f_sum, summary)
    return RunOutcome(EXIT_VIOLATED if violations else EXIT_OK, [f_csv, f_sum], summary,
                      {"cases": cases, "lambda0_half": ref.lambda0})


def expected_convergence(regime: Regime, gamma: float, alpha: float) -> dict:
    """Closed-form convergence of the six kernel integrals for the built-in regimes."""
    out = {"KF0": True, "KFgamma": True, "KFgammaAlpha": alpha < 0.5, "KG0": True, "KGgamma": True}
    if regime is Regime.WHITE_D1:
        out["KGgammaAlpha"] = alpha < 0.25
    elif regime is Regime.COLORED_Q0:
        out["KGgamma"] = gamma < 1
        out["KGgammaAlpha"] = 2 * alpha + gamma < 1
    else:
        out["KGgammaAlpha"] = alpha < 0.5
    return out


def _assumption_experiment(cfg, out) -> RunOutcome:
    ac = cfg["assumptions"]
    qeps_noise = NoiseSpec.power_law(64, 4.0, eps=ac["eps"])
    setups = [
        (Regime.WHITE_D1, 0.0, builtin_kernels(Regime.WHITE_D1, 0.0)),
        (Regime.COLORED_Q0, ac["gamma_q0"], builtin_kernels(Regime.COLORED_Q0, ac["gamma_q0"])),
        (Regime.COLORED_QEPS, ac["gamma_qeps"],
         builtin_kernels(Regime.COLORED_QEPS, ac["gamma_qeps"], eps=ac["eps"],
                         q_eps=q_eps_diagnostic(qeps_noise, ac["eps"]).value)),
    ]
    rows = []
    mismatches = 0
    for regime, gamma, kern in setups:
        for a in ac["alphas"]:
            rep = verify_assumptions(kern, a, ac["T"])
            exp = expected_convergence(regime, gamma, a)
            for name, v, c in rep.rows():
                mismatches += c != exp[name]
                rows.append((regime.value, gamma, a, name, v, c, exp[name]))
    f_csv = os.path.join(out, "assumption_suite.csv")
    _write_csv(f_csv, ["regime", "gamma", "alpha", "quantity", "value", "convergent", "expected"], rows)
    summary = f"kernel integrals: {len(rows)}, disagreements with closed-form convergence: {mismatches}\n"
    f_sum = os.path.join(out, "summary.txt")
    _write_text(f_sum, summary)
    return RunOutcome(EXIT_VIOLATED if mismatches else EXIT_OK, [f_csv, f_sum], summary, {"rows": rows})


def factorization_errors(cfg) -> list[tuple[int, float]]:
    """Relative error of the factorization reconstruction at ``n_steps`` and ``2 n_steps``.

    The coarse increments are pairwise sums of the fine ones, so both
    levels see the same Brownian paths.
    """
    p = build_problem(cfg)
    alpha = cfg["factorization"]["alpha"]
    fine = ProblemSpec(p.n_modes, p.grid_size, p.T, 2 * p.n_steps, p.x0, p.f, p.g, p.noise)
    seed = cfg["mc"]["master_seed"]
    out = []
    num = {p.n_steps: 0.0, fine.n_steps: 0.0}
    den = {p.n_steps: 0.0, fine.n_steps: 0.0}
    for a, b in _chunks(cfg["mc"]["n_paths"], cfg["mc"]["chunk_size"]):
        dWf = np.stack([fine.increments(seed, i).dW for i in range(a, b)])
        dWc = dWf[:, 0::2] + dWf[:, 1::2]
        for prob, dW in ((p, dWc), (fine, dWf)):
            ref = stochastic_convolution(prob, dW)
            rec = factorization_reconstruction(prob, dW, None, alpha)
            num[prob.n_steps] += float(np.sum((rec - ref) ** 2))
            den[prob.n_steps] += float(np.sum(ref**2))
    for n in (p.n_steps, fine.n_steps):
        out.append((n, math.sqrt(num[n] / den[n])))
    return out


def _factorization_experiment(cfg, out) -> RunOutcome:
    errs = factorization_errors(cfg)
    alpha = cfg["factorization"]["alpha"]
    tol = cfg["factorization"]["max_error"]
    f_csv = os.path.join(out, "factorization.csv")
    _write_csv(f_csv, ["n_steps", "alpha", "rel_error"], [(n, alpha, e) for n, e in errs])
    ok = errs[0][1] <= tol and errs[1][1] < errs[0][1]
    summary = "".join(f"n_steps={n} rel_error={e:.6g}\n" for n, e in errs)
    summary += f"tolerance {tol:g}, decreasing under refinement: {errs[1][1] < errs[0][1]}\n"
    f_sum = os.path.join(out, "summary.txt")
    _write_text(f_sum, summary)
    return RunOutcome(EXIT_OK if ok else EXIT_VIOLATED, [f_csv, f_sum], summary, {"errors": errs})


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def run(cfg_raw: dict, out_dir: str | None = None, dump_paths: bool = False) -> RunOutcome:
    """Validate, execute the tagged experiment and write its artifacts."""
    try:
        cfg = validate_config(cfg_raw)
        check_experiment(cfg)
    except ConfigError as e:
        return RunOutcome(EXIT_CONFIG, [], str(e))
    out = out_dir or cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    exp = cfg["experiment"]
    if exp in PATH_EXPERIMENTS:
        res = _path_experiment(cfg, out, dump_paths)
    elif exp == "gronwall_suite":
        res = _gronwall_experiment(cfg, out)
    elif exp == "assumption_suite":
        res = _assumption_experiment(cfg, out)
    else:
        res = _factorization_experiment(cfg, out)
    manifest = {
        "config": cfg,
        "versions": {"spdelab": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "exit_status": res.status,
        "aborted_paths": res.extra.get("aborted", []),
        "files": {os.path.relpath(f, out): _sha256(f) for f in res.files},
    }
    f_man = os.path.join(out, "manifest.json")
    with open(f_man, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    res.files.append(f_man)
    return res


# ---------------------------------------------------------------------------
# compare


def _read_report(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty report")
    return rows[0], rows[1:]


@dataclass(frozen=True)
class RowDiff:
    key: tuple
    column: str
    a: str
    b: str
    delta: float | None


def compare_reports(path_a, path_b) -> list[RowDiff]:
    """Per-row differences of two report CSVs with the same header and row keys."""
    ha, ra = _read_report(path_a)
    hb, rb = _read_report(path_b)
    if ha != hb:
        raise ConfigError(f"schema mismatch: {ha} vs {hb}")
    if len(ra) != len(rb):
        raise ConfigError(f"schema mismatch: {len(ra)} rows vs {len(rb)} rows")
    nkey = 2 if ha[:2] == ["theta", "p"] else 1
    diffs = []
    for i, (x, y) in enumerate(zip(ra, rb)):
        if x[:nkey] != y[:nkey]:
            raise ConfigError(f"schema mismatch: row {i} keys {x[:nkey]} vs {y[:nkey]}")
        for col, u, v in zip(ha[nkey:], x[nkey:], y[nkey:]):
            if u != v:
                try:
                    d = float(v) - float(u)
                except ValueError:
                    d = None
                diffs.append(RowDiff((i,) + tuple(x[:nkey]), col, u, v, d))
    return diffs


# ---------------------------------------------------------------------------
# CLI


def _load_config_arg(arg: str) -> dict:
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return json.load(fh)
    if arg in canned_names():
        return canned_config(arg)
    raise ConfigError(f"config {arg!r} is neither a file nor a canned experiment ({', '.join(canned_names())})")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="spdelab", description="SPDE regularity laboratory")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config (file path or canned name)")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None)
    r.add_argument("--dump-paths", action="store_true")
    c = sub.add_parser("compare", help="diff two report CSVs")
    c.add_argument("report_a")
    c.add_argument("report_b")
    sub.add_parser("list", help="list canned experiments")
    args = ap.parse_args(argv)

    if args.cmd == "list":
        print("\n".join(canned_names()))
        return EXIT_OK
    if args.cmd == "compare":
        try:
            diffs = compare_reports(args.report_a, args.report_b)
        except (ConfigError, OSError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        if not diffs:
            print("no differences")
        for d in diffs:
            extra = "" if d.delta is None else f" (delta {d.delta:+.6g})"
            print(f"row {d.key}: {d.column} {d.a} -> {d.b}{extra}")
        return EXIT_OK
    try:
        cfg = _load_config_arg(args.config)
    except (ConfigError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    res = run(cfg, args.out, args.dump_paths)
    stream = sys.stderr if res.status == EXIT_CONFIG else sys.stdout
    print(res.message, end="" if res.message.endswith("\n") else "\n", file=stream)
    return res.status
