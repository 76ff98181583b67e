"""Command-line experiment runner.

Every subcommand resolves its parameters (defaults, then ``--config`` JSON,
then explicit flags), runs seeded trials, and writes a JSON report plus an
optional CSV trace. Exit status: 0 when the run's own acceptance predicate
holds, 1 when it does not, 2 for usage or configuration errors, 3 when a
query or answer breaks an oracle contract.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from importlib import resources
from pathlib import Path

import numpy as np

from qsqlearn import __version__, kernels
from qsqlearn.adversary import ConceptClassTable, run_lower_bound_game, weak_sqdim
from qsqlearn.concepts import (
    Distribution,
    ParityConcept,
    concept_from_json,
    error_rate,
    random_concept,
)
from qsqlearn.fourier import DimensionError, MAX_N, influences
from qsqlearn.learners import (
    LearnerPreconditionError,
    PARITY_RAW_TOLERANCE,
    goldreich_levin,
    learn_dnf,
    learn_junta,
    learn_parity,
)
from qsqlearn.oracle import (
    ExampleSpec,
    Exact,
    GridAdversary,
    ObservableError,
    QstatOracle,
    Sampling,
    ToleranceError,
    UnsupportedQuery,
)
from qsqlearn.privacy import (
    dp_audit,
    exact_mean_mechanism,
    private_average_mechanism,
    private_pac_learn,
)
from qsqlearn.protocol import ProtocolConfig, run_protocol
from qsqlearn.rng import stream, trial_seed
from qsqlearn.simulation import coverage_trials

OUTPUT_ENV = "QSQLEARN_OUTPUT_DIR"
EXIT_OK, EXIT_PREDICATE, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2, 3


class ConfigError(ValueError):
    """Parameters missing, of the wrong type, or outside their ranges."""


class ContractViolation(RuntimeError):
    """An answer or query broke the oracle contract during a run."""


# ---------------------------------------------------------------- parameter checks


def _int_in(cfg, key, lo, hi=None):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(f"{key}={v} outside [{lo}, {hi if hi is not None else 'inf'}]")
    return v


def _float_in(cfg, key, lo, hi, lo_open=True, hi_open=False):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if (v <= lo if lo_open else v < lo) or (v >= hi if hi_open else v > hi):
        raise ConfigError(f"{key}={v} outside its range ({lo}, {hi})")
    return float(v)


def _seed(cfg):
    if cfg.get("seed") is None:
        raise ConfigError("this subcommand is stochastic and needs --seed")
    return _int_in(cfg, "seed", 0)


def _model(cfg, seed_stream):
    name = cfg.get("model", "exact")
    if name == "exact":
        return Exact()
    if name == "grid":
        return GridAdversary(cfg.get("grid_tau"))
    if name == "sampling":
        return Sampling(delta_share=cfg.get("delta_share", 0.01), seed=seed_stream)
    raise ConfigError(f"unknown tolerance model {name!r}")


def _binomial_slack(p, trials):
    return 3 * math.sqrt(p * (1 - p) / trials)


# ---------------------------------------------------------------- trial runners
# Top-level functions so a process pool can pickle them.


def _parity_trial(cfg, t):
    seed, n = cfg["seed"], cfg["n"]
    target = cfg.get("s")
    if target is None:
        target = int(stream(seed, "concept", t).integers(0, 1 << n))
    oracle = QstatOracle.uniform(ParityConcept(n, target), _model(cfg, stream(seed, "oracle", t)))
    rep = learn_parity(oracle)
    return {"trial": t, "s_target": target, "s_recovered": rep.details["s"],
            "queries": rep.queries_used, "exact": rep.details["s"] == target}


def _junta_trial(cfg, t):
    seed = cfg["seed"]
    c = random_concept("junta", {"n": cfg["n"], "k": cfg["k"]}, stream(seed, "concept", t))
    oracle = QstatOracle.uniform(c, _model(cfg, stream(seed, "oracle", t)))
    rep = learn_junta(oracle, k=cfg["k"], eps=cfg["eps"])
    err = error_rate(rep.hypothesis, c)
    return {"trial": t, "relevant_target": list(c.relevant), "relevant_found": rep.details["relevant"],
            "queries": rep.queries_used, "error": err, "ok": err <= cfg["eps"]}


def _gl_trial(cfg, t):
    seed, tau = cfg["seed"], cfg["tau"]
    f = random_concept("sparse", {"n": cfg["n"], "terms": cfg["terms"], "noise": cfg["noise"]},
                       stream(seed, "concept", t))
    oracle = QstatOracle.uniform(f, _model(cfg, stream(seed, "oracle", t)))
    found = goldreich_levin(oracle, tau)
    coeffs = np.abs(f.spectrum.coefficients)
    heavy = set(np.flatnonzero(coeffs >= tau).tolist())
    light = {s for s in found if coeffs[s] < tau / 2}
    return {"trial": t, "found": sorted(found), "heavy": sorted(heavy), "queries": oracle.query_count,
            "complete": heavy <= set(found), "sound": not light}


def _dnf_trial(cfg, t):
    seed = cfg["seed"]
    c = random_concept("dnf", {"n": cfg["n"], "s": cfg["s"], "literal_prob": cfg["literal_prob"]},
                       stream(seed, "concept", t))
    oracle = QstatOracle.uniform(c, _model(cfg, stream(seed, "oracle", t)))
    rep = learn_dnf(oracle, cfg["s"], cfg["eps"])
    err = error_rate(rep.hypothesis, c)
    return {"trial": t, "queries": rep.queries_used, "heavy_sets": rep.details["heavy_sets"],
            "error": err, "ok": err <= cfg["eps"]}


def _private_trial(cfg, t):
    seed, n = cfg["seed"], cfg["n"]
    rng = stream(seed, "private", t)
    target = int(stream(seed, "concept", t).integers(0, 1 << n))
    spec = ExampleSpec(ParityConcept(n, target), Distribution.uniform(n))
    rep = private_pac_learn(learn_parity, n, PARITY_RAW_TOLERANCE, spec, cfg["alpha"], cfg["delta"], rng)
    recovered = rep.hypothesis.entries[0][0]
    return {"trial": t, "s_target": target, "s_recovered": recovered, "exact": recovered == target,
            "total_samples": rep.total_samples, "copies_per_query": rep.copies_per_query,
            "answers_within_tau": rep.answers_within_tau, "noise_trace": rep.noise_trace}


def _map_trials(fn, cfg, trials, workers):
    job = partial(fn, cfg)
    if workers <= 1 or trials <= 1:
        return [job(t) for t in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so the merge is by trial index
        return list(pool.map(job, range(trials), chunksize=max(1, trials // (4 * workers))))


def _rows_csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
    return buf.getvalue()


# ---------------------------------------------------------------- subcommands
# Each returns (result dict, predicate bool, csv text or None).


def cmd_learn_parity(cfg):
    _seed(cfg)
    n = _int_in(cfg, "n", 1, MAX_N)
    if cfg.get("s") is not None and not 0 <= _int_in(cfg, "s", 0) < 1 << n:
        raise ConfigError(f"s must lie in [0, 2^{n})")
    trials = _int_in(cfg, "trials", 1)
    rows = _map_trials(_parity_trial, cfg, trials, cfg["workers"])
    ok = all(r["exact"] and r["queries"] == n for r in rows)
    result = {"runs": rows, "exact_rate": float(np.mean([r["exact"] for r in rows]))}
    if trials == 1:
        result.update(s=rows[0]["s_recovered"], queries=rows[0]["queries"])
    return result, ok, _rows_csv(rows, ["trial", "s_target", "s_recovered", "queries", "exact"])


def cmd_learn_junta(cfg):
    _seed(cfg)
    n = _int_in(cfg, "n", 1, MAX_N)
    _int_in(cfg, "k", 0, min(n, 12))
    _float_in(cfg, "eps", 0, 1, hi_open=True)
    trials = _int_in(cfg, "trials", 1)
    rows = _map_trials(_junta_trial, cfg, trials, cfg["workers"])
    ok = all(r["ok"] for r in rows)
    result = {"runs": rows, "success_rate": float(np.mean([r["ok"] for r in rows])),
              "max_error": max(r["error"] for r in rows)}
    return result, ok, _rows_csv(rows, ["trial", "queries", "error", "ok"])


def cmd_gl(cfg):
    _seed(cfg)
    _int_in(cfg, "n", 1, MAX_N)
    _float_in(cfg, "tau", 0, 1)
    _int_in(cfg, "terms", 1)
    _float_in(cfg, "noise", 0, 10, lo_open=False)
    trials = _int_in(cfg, "trials", 1)
    rows = _map_trials(_gl_trial, cfg, trials, cfg["workers"])
    ok = all(r["complete"] and r["sound"] for r in rows)
    result = {"runs": rows, "max_queries": max(r["queries"] for r in rows)}
    return result, ok, _rows_csv(rows, ["trial", "queries", "found", "heavy", "complete", "sound"])


def cmd_learn_dnf(cfg):
    _seed(cfg)
    _int_in(cfg, "n", 1, MAX_N)
    _int_in(cfg, "s", 1)
    _float_in(cfg, "eps", 0, 1, hi_open=True)
    _float_in(cfg, "literal_prob", 0, 1)
    min_success = _float_in(cfg, "min_success", 0, 1, lo_open=False)
    trials = _int_in(cfg, "trials", 1)
    rows = _map_trials(_dnf_trial, cfg, trials, cfg["workers"])
    rate = float(np.mean([r["ok"] for r in rows]))
    result = {"runs": rows, "success_rate": rate, "min_success": min_success}
    return result, rate >= min_success, _rows_csv(rows, ["trial", "queries", "error", "ok"])


def _coverage(cfg, eta):
    seed = _seed(cfg)
    n = _int_in(cfg, "n", 1, 10)
    tau = _float_in(cfg, "tau", 0, 1)
    delta = _float_in(cfg, "delta_share", 0, 1, hi_open=True)
    trials = _int_in(cfg, "trials", 1)
    if eta > 0 and math.sqrt(eta) >= tau:
        raise ConfigError(f"noise rate {eta} needs sqrt(eta) < tau = {tau}")
    rows = coverage_trials(n, tau, delta, trials, trial_seed(seed, "coverage", 0), eta=eta)
    violations = sum(not r["within_tau"] for r in rows)
    rate = violations / trials
    allowed = delta + _binomial_slack(delta, trials)
    result = {"violation_rate": rate, "allowed_rate": allowed, "copies_per_query": rows[0]["copies_used"],
              "trials": trials, "rows": rows}
    csv_text = _rows_csv(rows, ["trial", "copies_used", "alpha", "exact", "abs_error", "within_tau", "kind"])
    return result, rate <= allowed, csv_text


def cmd_sim_qstat(cfg):
    return _coverage(cfg, 0.0)


def cmd_sim_noisy(cfg):
    eta = _float_in(cfg, "eta", 0, 0.5, hi_open=True)
    return _coverage(cfg, eta)


def _load_class(ref):
    if ref is None:
        raise ConfigError("sqdim needs --class (a JSON file or a bundled class name)")
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    else:
        try:
            text = resources.files("qsqlearn").joinpath("data", f"{ref}.json").read_text()
        except FileNotFoundError:
            raise ConfigError(f"no class file or bundled class named {ref!r}") from None
    try:
        return ConceptClassTable.from_json(json.loads(text))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed class file: {exc}") from None


def cmd_sqdim(cfg):
    cls = _load_class(cfg.get("class_file"))
    mode = cfg.get("mode", "auto")
    if mode not in ("auto", "exact", "greedy"):
        raise ConfigError(f"unknown mode {mode!r}")
    res = weak_sqdim(cls, mode=mode)
    return {**res.to_json(), "class_size": len(cls), "n": cls.n}, True, None


def cmd_adversary_game(cfg):
    n = _int_in(cfg, "n", 1, 12)
    tau = _float_in(cfg, "tau", 0, 0.5, hi_open=True)
    queries = cfg.get("queries")
    if queries is not None:
        _int_in(cfg, "queries", 0, n)
    cls = ConceptClassTable.parities(n)
    report = run_lower_bound_game(lambda o: learn_parity(o, queries=queries), cls, tau=tau)
    shrink_ok = all(
        t["live_after"] >= math.ceil(t["live_before"] / math.ceil(1 / tau - 1e-12))
        for t in report.transcript
    )
    legal = all(t["max_deviation"] <= 2 * tau + 1e-12 for t in report.transcript)
    ok = shrink_ok and legal
    if report.queries < report.lower_bound_queries:
        ok &= report.surviving_count >= 2 and report.worst_error >= 0.5 - 2.0 ** -(n + 1)
    result = {**report.to_json(), "shrinkage_ok": shrink_ok, "legal": legal}
    return result, ok, report.transcript_csv()


def cmd_protocol(cfg):
    seed = _seed(cfg)
    n = _int_in(cfg, "n", 1, 12)
    tau = _float_in(cfg, "tau", 0, 1)
    trials = _int_in(cfg, "trials", 1)
    learner = cfg.get("learner", "parity")
    try:
        config = ProtocolConfig.uniform(ConceptClassTable.parities(n), tau, learner)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        res = run_protocol(config, trials, trial_seed(seed, "protocol", 0))
    except AssertionError as exc:
        raise ContractViolation(str(exc)) from None
    target = min(1.0, 0.5 + res.gamma_target)
    ok = res.success >= target - _binomial_slack(target, trials)
    rows = [{"trial": i, "bits": b} for i, b in enumerate(res.bits_per_trial)]
    return res.to_json(), ok, _rows_csv(rows, ["trial", "bits"])


def cmd_private_learn(cfg):
    _seed(cfg)
    _int_in(cfg, "n", 1, 12)
    _float_in(cfg, "alpha", 0, 1e6)
    delta = _float_in(cfg, "delta", 0, 1, hi_open=True)
    trials = _int_in(cfg, "trials", 1)
    rows = _map_trials(_private_trial, cfg, trials, cfg["workers"])
    rate = float(np.mean([r["exact"] for r in rows]))
    target = 1 - delta
    result = {"runs": rows, "exact_rate": rate, "target_rate": target,
              "total_samples": rows[0]["total_samples"], "copies_per_query": rows[0]["copies_per_query"]}
    ok = rate >= target - _binomial_slack(target, trials)
    return result, ok, _rows_csv(rows, ["trial", "s_target", "s_recovered", "exact", "total_samples"])


def cmd_dp_audit(cfg):
    seed = _seed(cfg)
    alpha = _float_in(cfg, "alpha", 0, 1e6)
    T = _int_in(cfg, "T", 1)
    samples = _int_in(cfg, "samples", 1)
    nbins = _int_in(cfg, "bins", 2)
    mech = cfg.get("mechanism", "laplace")
    if mech == "laplace":
        mechanism = private_average_mechanism(alpha)
    elif mech == "none":
        mechanism = exact_mean_mechanism
    else:
        raise ConfigError(f"unknown mechanism {mech!r}")
    first = np.zeros(T)
    second = first.copy()
    second[0] = 1.0
    # cover the central mass of both releases: +-6 noise scales around the two means
    reach = 6 / (alpha * T)
    edges = np.linspace(-reach, 1 / T + reach, nbins + 1)
    report = dp_audit(mechanism, (first, second), alpha, edges, samples, stream(seed, "audit"))
    rows = [{"lo": b["lo"], "hi": b["hi"], "count_a": b["count_a"], "count_b": b["count_b"],
             "log_ratio": b["log_ratio"], "slack": b["slack"]} for b in report.bins]
    return report.to_json(), report.verdict, _rows_csv(
        rows, ["lo", "hi", "count_a", "count_b", "log_ratio", "slack"])


def cmd_spectrum(cfg):
    ref = cfg.get("concept")
    if ref is not None:
        try:
            f = concept_from_json(json.loads(Path(ref).read_text()))
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read concept file: {exc}") from None
    else:
        seed = _seed(cfg)
        n = _int_in(cfg, "n", 1, MAX_N)
        kind = cfg.get("kind", "sparse")
        params = {"n": n, "k": cfg.get("k", 2), "s": cfg.get("s", 2)}
        try:
            f = random_concept(kind, params, stream(seed, "concept"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    from qsqlearn.concepts import as_function

    g = as_function(f)
    spec = g.spectrum
    coeffs = spec.coefficients
    parseval = float(np.sum(coeffs ** 2))
    rows = [{"set": s, "coefficient": float(coeffs[s])} for s in np.flatnonzero(np.abs(coeffs) > 1e-15)]
    result = {"n": g.n, "coefficients": spec.to_json(), "parseval": parseval,
              "influences": influences(spec).tolist()}
    return result, abs(parseval - 1) <= 1e-9, _rows_csv(rows, ["set", "coefficient"])


COMMANDS = {
    "learn-parity": (cmd_learn_parity, "recover a hidden parity from influence queries",
                     {"n": 10, "s": None, "trials": 1, "model": "exact"}),
    "learn-junta": (cmd_learn_junta, "learn a random k-junta",
                    {"n": 12, "k": 4, "eps": 0.1, "trials": 1, "model": "grid"}),
    "gl": (cmd_gl, "heavy Fourier coefficients of random sparse-spectrum functions",
           {"n": 10, "tau": 0.2, "terms": 3, "noise": 0.1, "trials": 1, "model": "grid"}),
    "learn-dnf": (cmd_learn_dnf, "learn random DNFs through their heavy coefficients",
                  {"n": 10, "s": 4, "eps": 0.15, "literal_prob": 0.3, "min_success": 0.9,
                   "trials": 1, "model": "grid"}),
    "sim-qstat": (cmd_sim_qstat, "coverage of the sampled oracle on fresh example copies",
                  {"n": 6, "tau": 0.1, "delta_share": 0.05, "trials": 1000}),
    "sim-noisy": (cmd_sim_noisy, "coverage of the sampled oracle on noisy example copies",
                  {"n": 6, "tau": 0.2, "eta": 0.01, "delta_share": 0.05, "trials": 200}),
    "sqdim": (cmd_sqdim, "weak SQ dimension of a concept class file",
              {"class_file": None, "mode": "auto"}),
    "adversary-game": (cmd_adversary_game, "play the parity learner against the covering-cell adversary",
                       {"n": 8, "tau": 1 / 12, "queries": None}),
    "protocol": (cmd_protocol, "one-way protocol with quantized answers",
                 {"n": 8, "tau": 1 / 6, "trials": 500, "learner": "parity"}),
    "private-learn": (cmd_private_learn, "parity learning through the private average",
                      {"n": 8, "alpha": 0.5, "delta": 0.05, "trials": 100}),
    "dp-audit": (cmd_dp_audit, "empirical privacy audit of the private average",
                 {"alpha": 0.5, "T": 100, "samples": 200000, "bins": 40, "mechanism": "laplace"}),
    "spectrum": (cmd_spectrum, "dump the Fourier spectrum of a concept",
                 {"concept": None, "n": 6, "kind": "sparse"}),
}

# flag name -> (dest, type)
FLAGS = {
    "learn-parity": [("--n", int), ("--s", int), ("--model", str), ("--grid-tau", float),
                     ("--delta-share", float)],
    "learn-junta": [("--n", int), ("--k", int), ("--eps", float), ("--model", str),
                    ("--grid-tau", float), ("--delta-share", float)],
    "gl": [("--n", int), ("--tau", float), ("--terms", int), ("--noise", float), ("--model", str),
           ("--grid-tau", float), ("--delta-share", float)],
    "learn-dnf": [("--n", int), ("--s", int), ("--eps", float), ("--literal-prob", float),
                  ("--min-success", float), ("--model", str), ("--grid-tau", float),
                  ("--delta-share", float)],
    "sim-qstat": [("--n", int), ("--tau", float), ("--delta-share", float)],
    "sim-noisy": [("--n", int), ("--tau", float), ("--eta", float), ("--delta-share", float)],
    "sqdim": [("--class", str, "class_file"), ("--mode", str)],
    "adversary-game": [("--n", int), ("--tau", float), ("--queries", int)],
    "protocol": [("--n", int), ("--tau", float), ("--learner", str)],
    "private-learn": [("--n", int), ("--alpha", float), ("--delta", float)],
    "dp-audit": [("--alpha", float), ("--T", int), ("--samples", int), ("--bins", int),
                 ("--mechanism", str)],
    "spectrum": [("--concept", str), ("--n", int), ("--kind", str)],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsqlearn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qsqlearn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, _defaults) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of parameters; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("--report", default=None, help="report file name inside the output directory")
        p.add_argument("--csv", action="store_true", help="also write a CSV trace")
        for spec in FLAGS[name]:
            flag, typ = spec[0], spec[1]
            kwargs = {"type": typ, "default": None}
            if len(spec) > 2:
                kwargs["dest"] = spec[2]
            p.add_argument(flag, **kwargs)
    return parser


RUN_KEYS = ("config", "out", "report", "csv", "command")


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    _, _, defaults = COMMANDS[args.command]
    cfg = {"seed": None, "workers": 1, **defaults}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key not in RUN_KEYS and value is not None:
            cfg[key] = value
    if "trials" not in defaults:
        cfg.pop("trials", None)
    _int_in(cfg, "workers", 1)
    return cfg


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _error(status, kind, message):
    print(json.dumps({"error": kind, "message": message, "exit_code": status}, sort_keys=True),
          file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    fn = COMMANDS[args.command][0]
    try:
        cfg = resolve_config(args)
        result, ok, csv_text = fn(cfg)
    except ConfigError as exc:
        return _error(EXIT_USAGE, "config", str(exc))
    except (ContractViolation, ToleranceError, ObservableError, UnsupportedQuery,
            LearnerPreconditionError, DimensionError) as exc:
        return _error(EXIT_CONTRACT, "contract", f"{type(exc).__name__}: {exc}")

    report = {
        "command": args.command,
        "config": cfg,
        "version": __version__,
        "backend": kernels.BACKEND,
        "predicate": bool(ok),
        "result": result,
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    out_dir = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    name = args.report or f"{args.command}.json"
    _write_atomic(out_dir / name, text)
    if args.csv and csv_text is not None:
        _write_atomic(out_dir / (Path(name).stem + ".csv"), csv_text)
    summary = {k: v for k, v in result.items() if not isinstance(v, (list, dict))}
    print(json.dumps({"command": args.command, "predicate": bool(ok), **summary}, sort_keys=True))
    return EXIT_OK if ok else EXIT_PREDICATE


if __name__ == "__main__":
    sys.exit(main())
