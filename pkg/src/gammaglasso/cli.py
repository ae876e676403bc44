"""Command-line front end: estimation, posterior sampling, scenario
generation, benchmark simulation, and robustness verification.

Every subcommand is deterministic given its inputs and --seed (thread count
is a performance knob only), and every artifact carries a provenance header
with the package version, a hash of the effective configuration, and the
seed.  Exit codes: 0 ok, 2 parse/input error, 3 numeric failure, 4
non-convergence (artifacts still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import CsvFormatError, DataMatrix, NotPositiveDefiniteError, sample_covariance
from .gamma_mm import GammaConfig, mm_fit
from .gibbs import GibbsChainError, GibbsConfig, bg_gibbs, bt_gibbs
from .glasso import GlassoConfig, SingularInputError, glasso_solve
from .robustness import standard_verdicts
from .selection import (
    EdgeSet,
    compute_metrics,
    edges_to_dot_text,
    edges_to_json_text,
    median_probability_select,
    point_threshold_select,
    support_edges,
)
from .simulate import (
    GraphSpec,
    ScenarioSpec,
    generate,
    hotelling_filter,
    mad_normalize,
    matrix_a,
    matrix_ar2,
    precision_from_graph,
)
from .wbb import (
    HyperPrior,
    sample_summary,
    sample_to_csv_text,
    summary_to_json_text,
    wbb_sample,
    wbbg_sample,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_NOCONV = 4

THREADS_ENV = "GAMMAGLASSO_THREADS"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _provenance(args_dict: dict, seed) -> dict:
    # hash only the semantic configuration: paths and the dispatch callable
    # would break byte-determinism of outputs across directories/processes
    semantic = {k: v for k, v in args_dict.items()
                if k not in {"func", "output_dir", "input", "spec"}}
    blob = json.dumps(semantic, sort_keys=True, default=str).encode()
    return {
        "version": __version__,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": seed,
    }


def _provenance_line(prov: dict) -> str:
    return f"gammaglasso v{prov['version']} config={prov['config_sha256'][:16]} seed={prov['seed']}"


def _default_threads(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else 1


def _load_data(path: str, mad: bool, hotelling_alpha=None) -> tuple[DataMatrix, list | None]:
    try:
        data, names = DataMatrix.from_csv(path)
    except FileNotFoundError as err:
        raise CliError(f"input file not found: {path}", EXIT_PARSE) from err
    except (CsvFormatError, ValueError) as err:
        raise CliError(f"bad input: {err}", EXIT_PARSE) from err
    if mad:
        try:
            data = mad_normalize(data)
        except ValueError as err:
            raise CliError(f"normalization failed: {err}", EXIT_NUMERIC) from err
    if hotelling_alpha is not None:
        try:
            data, _ = hotelling_filter(data, hotelling_alpha)
        except ValueError as err:
            raise CliError(f"outlier screen failed: {err}", EXIT_NUMERIC) from err
    return data, names


def _matrix_json(m: np.ndarray) -> list:
    return [[float(v) for v in row] for row in m]


def cmd_fit(args) -> int:
    data, names = _load_data(args.input, args.mad, args.hotelling_alpha)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = _provenance(vars(args), args.seed)
    converged = True
    if args.method == "fg":
        cfg = GlassoConfig(rho=args.lam)
        try:
            sol = glasso_solve(sample_covariance(data), cfg)
        except SingularInputError as err:
            raise CliError(str(err), EXIT_NUMERIC) from err
        omega = sol.omega
        converged = sol.converged
        objective = float(sol.objective_trace[-1])
        meta = {"method": "fg", "rho": args.lam}
    elif args.method == "fr":
        cfg = GammaConfig(gamma=args.gamma, lam=args.lam, eps_prime=args.eps_prime,
                          max_mm=args.max_mm)
        w = np.ones(data.n + 1)
        try:
            state = mm_fit(data, w, cfg)
        except NotPositiveDefiniteError as err:
            raise CliError(f"numeric failure: {err}", EXIT_NUMERIC) from err
        omega = state.omega
        converged = state.converged
        objective = state.objective
        meta = {"method": "fr", "gamma": args.gamma, "lambda": args.lam,
                "eps_prime": args.eps_prime}
    else:
        raise CliError("fit supports methods fr and fg (use `sample` for br/bg/bt)", EXIT_PARSE)
    edges = support_edges(omega)
    edge_set = EdgeSet(p=omega.dim, edges=edges,
                       include_prob={e: 1.0 for e in edges})
    payload = dict(meta)
    payload.update({
        "p": omega.dim,
        "n": data.n,
        "omega": _matrix_json(omega.values),
        "objective": objective,
        "converged": bool(converged),
        "provenance": prov,
    })
    (out / "estimate.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    (out / "edges.dot").write_text(edges_to_dot_text(edge_set, labels=names,
                                                     provenance=_provenance_line(prov)))
    (out / "edges.json").write_text(edges_to_json_text(edge_set, labels=names, provenance=prov))
    return EXIT_OK if converged else EXIT_NOCONV


def cmd_sample(args) -> int:
    data, names = _load_data(args.input, args.mad, args.hotelling_alpha)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = _provenance(vars(args), args.seed)
    threads = _default_threads(args.threads)
    try:
        if args.method == "br":
            cfg = GammaConfig(gamma=args.gamma, lam=args.lam, eps_prime=args.eps_prime,
                              max_mm=args.max_mm)
            sample = wbb_sample(data, cfg, args.samples, args.seed, threads=threads,
                                unit_weights=args.unit_weights)
        elif args.method == "br-wbbg":
            hp = HyperPrior(a=args.hyper_a, b=args.hyper_b)
            sample = wbbg_sample(data, args.gamma, hp, args.samples, args.burnin,
                                 args.seed, eps_prime=args.eps_prime)
        elif args.method == "bg":
            cfg = GibbsConfig(n_keep=args.samples, n_burn=args.burnin)
            sample = bg_gibbs(data, cfg, args.seed)
        elif args.method == "bt":
            cfg = GibbsConfig(nu=args.nu, n_keep=args.samples, n_burn=args.burnin)
            sample = bt_gibbs(data, cfg, args.seed)
        else:
            raise CliError("sample supports br, br-wbbg, bg, bt", EXIT_PARSE)
    except GibbsChainError as err:
        raise CliError(f"numeric failure: {err}", EXIT_NUMERIC) from err
    (out / "samples.csv").write_text(sample_to_csv_text(sample, provenance=_provenance_line(prov)))
    summary = sample_summary(sample, eps=args.eps)
    (out / "summary.json").write_text(summary_to_json_text(summary, provenance=prov))
    edge_set = median_probability_select(sample, eps=args.eps)
    (out / "edges.dot").write_text(edges_to_dot_text(edge_set, labels=names,
                                                     provenance=_provenance_line(prov)))
    (out / "edges.json").write_text(edges_to_json_text(edge_set, labels=names, provenance=prov))
    n_bad = int(np.sum(~sample.converged))
    return EXIT_OK if n_bad == 0 else EXIT_NOCONV


def _truth_matrix(name: str, p: int, rng: np.random.Generator):
    if name == "A":
        return matrix_a()
    if name == "B":
        return matrix_ar2(p)
    if name in {"small-world", "scale-free"}:
        return precision_from_graph(GraphSpec(family=name, p=p), rng)
    raise CliError(f"unknown truth matrix {name!r}", EXIT_PARSE)


def cmd_gen(args) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = _provenance(vars(args), args.seed)
    rng = np.random.default_rng(np.random.SeedSequence((int(args.seed), 0)))
    truth = _truth_matrix(args.matrix, args.p, rng)
    try:
        spec = ScenarioSpec(kind=args.kind, omega=truth, n=args.n, eps_c=args.eps_c,
                            eta=args.eta, seed=args.seed)
    except ValueError as err:
        raise CliError(str(err), EXIT_PARSE) from err
    data, labels = generate(spec, rng)
    lines = [f"# {_provenance_line(prov)}"]
    lines.append(",".join(f"x{j + 1}" for j in range(data.p)))
    for row in data.values:
        lines.append(",".join(format(v, ".17g") for v in row))
    (out / "data.csv").write_text("\n".join(lines) + "\n")
    sidecar = {
        "kind": args.kind,
        "matrix": args.matrix,
        "n": args.n,
        "p": truth.dim,
        "eps_c": args.eps_c,
        "eta": args.eta,
        "seed": args.seed,
        "truth": _matrix_json(truth.values),
        "contaminated": [bool(b) for b in labels],
        "provenance": prov,
    }
    (out / "truth.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _simulate_method(name: str, mdef: dict, data: DataMatrix, truth, rep_seed: int,
                     eps: float, threads: int):
    if name == "br":
        cfg = GammaConfig(gamma=mdef.get("gamma", 0.1), lam=mdef.get("lambda", 0.02),
                          eps_prime=mdef.get("eps_prime", 1e-4))
        sample = wbb_sample(data, cfg, mdef.get("samples", 1000), rep_seed, threads=threads)
    elif name == "br-wbbg":
        hp = HyperPrior(a=mdef.get("hyper_a", 0.1), b=mdef.get("hyper_b", 0.1))
        sample = wbbg_sample(data, mdef.get("gamma", 0.1), hp, mdef.get("samples", 1000),
                             mdef.get("burnin", 200), rep_seed)
    elif name == "bg":
        cfg = GibbsConfig(n_keep=mdef.get("samples", 6000), n_burn=mdef.get("burnin", 4000))
        sample = bg_gibbs(data, cfg, rep_seed)
    elif name == "bt":
        cfg = GibbsConfig(nu=mdef.get("nu", 3.0), n_keep=mdef.get("samples", 6000),
                          n_burn=mdef.get("burnin", 4000))
        sample = bt_gibbs(data, cfg, rep_seed)
    elif name in {"fr", "fg"}:
        if name == "fr":
            cfg = GammaConfig(gamma=mdef.get("gamma", 0.1), lam=mdef.get("lambda", 0.02),
                              eps_prime=mdef.get("eps_prime", 1e-4))
            omega = mm_fit(data, np.ones(data.n + 1), cfg).omega
        else:
            omega = glasso_solve(sample_covariance(data),
                                 GlassoConfig(rho=mdef.get("lambda", 0.04))).omega
        edges = support_edges(omega)
        edge_set = EdgeSet(p=omega.dim, edges=edges, include_prob={e: 1.0 for e in edges})
        return compute_metrics(truth, omega, sample=None, edges=edge_set)
    else:
        raise CliError(f"unknown method {name!r}", EXIT_PARSE)
    est = sample.draws.mean(axis=0)
    if name in {"bg", "bt"}:
        # continuous-posterior chains carry no exact zeros; threshold the
        # posterior mean like the frequentist baselines
        edge_set = point_threshold_select(est, eps=eps)
    else:
        edge_set = median_probability_select(sample, eps=eps)
    return compute_metrics(truth, est, sample=sample, edges=edge_set)


def cmd_simulate(args) -> int:
    try:
        spec = json.loads(Path(args.spec).read_text())
    except FileNotFoundError as err:
        raise CliError(f"spec file not found: {args.spec}", EXIT_PARSE) from err
    except json.JSONDecodeError as err:
        raise CliError(f"malformed spec: {err}", EXIT_PARSE) from err
    for key in ("scenario", "methods", "replications"):
        if key not in spec:
            raise CliError(f"spec missing {key!r}", EXIT_PARSE)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = int(spec.get("seed", args.seed))
    eps = float(spec.get("eps", 1e-2))
    scen = spec["scenario"]
    reps = int(spec["replications"])
    threads = _default_threads(args.threads)
    prov = _provenance(spec, seed)

    rows = []
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
        truth = _truth_matrix(scen.get("matrix", "A"), int(scen.get("p", 12)), rng)
        try:
            scenario = ScenarioSpec(kind=scen.get("kind", "a"), omega=truth,
                                    n=int(scen.get("n", 200)),
                                    eps_c=float(scen.get("eps_c", 0.1)),
                                    eta=scen.get("eta"), seed=seed)
        except ValueError as err:
            raise CliError(str(err), EXIT_PARSE) from err
        data, _ = generate(scenario, rng)
        for mdef in spec["methods"]:
            name = mdef["name"]
            label = mdef.get("label", name)
            rep_seed = seed * 100003 + rep
            metrics = _simulate_method(name, mdef, data, truth, rep_seed, eps, threads)
            row = {"rep": rep, "method": label}
            row.update({k: (v if v is not None else "") for k, v in metrics.as_dict().items()})
            rows.append(row)

    cols = ["rep", "method", "rmse", "al", "cp", "tpr", "fpr", "fdr"]
    lines = [f"# {_provenance_line(prov)} replications={reps}", ",".join(cols)]
    for row in rows:
        lines.append(",".join(format(row[c], ".17g") if isinstance(row[c], float) else str(row[c])
                              for c in cols))
    (out / "replicates.csv").write_text("\n".join(lines) + "\n")

    agg_lines = [f"# {_provenance_line(prov)} replications={reps}",
                 "method,rmse,al,cp,tpr,fpr,fdr"]
    labels = [m.get("label", m["name"]) for m in spec["methods"]]
    for name in labels:
        sub = [r for r in rows if r["method"] == name]
        vals = []
        for c in ("rmse", "al", "cp", "tpr", "fpr", "fdr"):
            xs = [r[c] for r in sub if r[c] != ""]
            vals.append(format(float(np.mean(xs)), ".17g") if xs else "")
        agg_lines.append(",".join([name] + vals))
    (out / "aggregate.csv").write_text("\n".join(agg_lines) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = _provenance(vars(args), args.seed)
    verdicts = standard_verdicts(lam=args.lam, gamma=args.gamma, nu=args.nu,
                                 alpha=args.alpha, seed=args.seed)
    all_pass = True
    for tag, entry in verdicts.items():
        lines = [f"# {_provenance_line(prov)} kind={tag}", "z,l1_distance"]
        for z, d in entry["curve"]:
            lines.append(f"{format(z, '.17g')},{format(d, '.17g')}")
        (out / f"curve_{tag}.csv").write_text("\n".join(lines) + "\n")
        expected = "robust" if tag == "gamma" else "not-robust"
        if entry["verdict"] != expected or not all(entry["checks"].values()):
            all_pass = False
    payload = {"verdicts": {k: {kk: vv for kk, vv in v.items() if kk != "curve"}
                            for k, v in verdicts.items()},
               "all_pass": all_pass,
               "provenance": prov}
    (out / "verdict.json").write_text(json.dumps(payload, indent=2, sort_keys=True, default=bool) + "\n")
    return EXIT_OK if all_pass else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gammaglasso",
                                     description="Robust sparse Gaussian graphical models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, input_file=True):
        if input_file:
            sp.add_argument("--input", required=True, help="CSV of observations (rows)")
            sp.add_argument("--mad", action="store_true",
                            help="median/MAD-normalize columns before fitting")
            sp.add_argument("--hotelling-alpha", type=float, default=None,
                            help="screen outliers at this chi-square level first")
        sp.add_argument("--output-dir", required=True)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("fit", help="point estimation (fr: robust, fg: plain glasso)")
    common(sp)
    sp.add_argument("--method", choices=["fr", "fg"], default="fr")
    sp.add_argument("--gamma", type=float, default=0.1)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.1)
    sp.add_argument("--eps-prime", type=float, default=1e-4)
    sp.add_argument("--max-mm", type=int, default=200)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("sample", help="posterior sampling (br, br-wbbg, bg, bt)")
    common(sp)
    sp.add_argument("--method", choices=["br", "br-wbbg", "bg", "bt"], default="br")
    sp.add_argument("--samples", type=int, default=1000, metavar="M")
    sp.add_argument("--burnin", type=int, default=200)
    sp.add_argument("--gamma", type=float, default=0.1)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.1)
    sp.add_argument("--eps", type=float, default=1e-2)
    sp.add_argument("--eps-prime", type=float, default=1e-4)
    sp.add_argument("--nu", type=float, default=3.0)
    sp.add_argument("--hyper-a", type=float, default=0.1)
    sp.add_argument("--hyper-b", type=float, default=0.1)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--max-mm", type=int, default=200)
    sp.add_argument("--unit-weights", action="store_true",
                    help="debug: force all bootstrap weights to 1")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("gen", help="generate a contamination-scenario dataset")
    common(sp, input_file=False)
    sp.add_argument("--kind", choices=["a", "b", "c"], default="a")
    sp.add_argument("--matrix", default="A",
                    help="A, B, small-world, or scale-free")
    sp.add_argument("--p", type=int, default=12)
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--eps-c", type=float, default=0.1)
    sp.add_argument("--eta", type=float, default=None)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("simulate", help="replicated benchmark from a JSON spec")
    common(sp, input_file=False)
    sp.add_argument("--spec", required=True, help="scenario/methods JSON")
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="posterior-robustness verification suite")
    common(sp, input_file=False)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=0.1)
    sp.add_argument("--nu", type=float, default=3.0)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_PARSE if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except (NotPositiveDefiniteError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
