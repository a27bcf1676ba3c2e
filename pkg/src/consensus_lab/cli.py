"""Command-line entry point: ``run``, ``verify``, ``sweep`` and ``graphgen``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine, metrics, suites
from .graph import format_graphs, generate, model_from_dict

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

RUN_ALGORITHMS = (*engine.AGENT_ALGORITHMS, engine.METROPOLIS)
TRACE_COLUMNS = ("round", "diameter", "variance_uniform", "mean", "min", "max",
                 "d_prime_sum", "learning_round")
REPORT_COLUMNS = ("algorithm", "model", "n", "seed", "epsilon", "t_eps", "bound", "ratio", "converged")
EQUIVALENCE_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _fmt(x) -> str:
    """Shortest round-trip text for floats, plain text for ints, empty for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return data


def _graph_descriptor(value) -> dict:
    # a bare family name is shorthand for a static graph of that family
    if isinstance(value, str):
        return {"kind": "Static", "graph": value}
    if not isinstance(value, dict) or "kind" not in value:
        raise ConfigError("graph", "expected a model descriptor with a 'kind' key or a graph family name")
    return value


def _epsilon(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 < value < 1:
        raise ConfigError("epsilon", f"must lie strictly between 0 and 1, got {value!r}")
    return float(value)


def _positive_int(field: str, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(field, f"must be an integer >= {minimum}, got {value!r}")
    return value


def _seeds(value) -> tuple[int, ...]:
    if not isinstance(value, list) or not value or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in value):
        raise ConfigError("seeds", f"must be a non-empty list of integers, got {value!r}")
    return tuple(value)


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    graph: dict
    n: int
    mu: object = "indicator"
    epsilon: float = 1e-3
    max_rounds: int = 1000
    seeds: tuple[int, ...] = (0,)
    output: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        for key in ("algorithm", "graph", "n"):
            if key not in data:
                raise ConfigError(key, "missing required key")
        if data["algorithm"] not in RUN_ALGORITHMS:
            raise ConfigError("algorithm", f"expected one of {list(RUN_ALGORITHMS)}, got {data['algorithm']!r}")
        cfg = cls(
            algorithm=data["algorithm"],
            graph=_graph_descriptor(data["graph"]),
            n=_positive_int("n", data["n"]),
            mu=data.get("mu", "indicator"),
            epsilon=_epsilon(data.get("epsilon", 1e-3)),
            max_rounds=_positive_int("max_rounds", data.get("max_rounds", 1000)),
            seeds=_seeds(data.get("seeds", [0])),
            output=data.get("output"),
        )
        cfg.model(cfg.seeds[0])
        cfg.initial(cfg.seeds[0])
        return cfg

    def model(self, seed: int):
        try:
            model = model_from_dict(self.graph, n=self.n, seed=seed)
        except (ValueError, KeyError, TypeError, OSError) as exc:
            raise ConfigError("graph", str(exc)) from None
        if model.n != self.n:
            raise ConfigError("n", f"is {self.n} but the graph has {model.n} vertices")
        return model

    def initial(self, seed: int) -> np.ndarray:
        try:
            return metrics.make_mu(self.mu, self.n, seed)
        except (ValueError, TypeError) as exc:
            raise ConfigError("mu", str(exc)) from None


# -- serialization ----------------------------------------------------------

def trace_csv(trace: engine.Trace) -> str:
    est = trace.estimates
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    lo, hi = est.min(axis=1), est.max(axis=1)
    for t in range(len(est)):
        w.writerow([
            t,
            _fmt(hi[t] - lo[t]),
            _fmt(np.var(est[t])),
            _fmt(np.mean(est[t])),
            _fmt(lo[t]),
            _fmt(hi[t]),
            int(trace.d_prime_history[t].sum()),
            int(t in trace.learning_rounds),
        ])
    return buf.getvalue()


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- commands ---------------------------------------------------------------

def cmd_run(cfg: ExperimentConfig, seed: int | None = None, check_equivalence: bool = False,
            output=None) -> int:
    seed = cfg.seeds[0] if seed is None else seed
    model = cfg.model(seed)
    mu = cfg.initial(seed)
    if cfg.algorithm in engine.AGENT_ALGORITHMS:
        trace = engine.run_agents(cfg.algorithm, model, mu, cfg.max_rounds)
    else:
        if check_equivalence:
            raise ConfigError("algorithm", f"{cfg.algorithm} has no local algorithm to compare against")
        trace = engine.run_matrix(cfg.algorithm, model, mu, cfg.max_rounds, keep_matrices=False)
    output = output if output is not None else cfg.output
    _emit(trace_csv(trace), output)

    t_eps = metrics.convergence_time(trace, cfg.epsilon)
    bound = metrics.bound_for(cfg.algorithm, trace.final_d_prime, cfg.n, cfg.epsilon) if cfg.n >= 2 else None
    ratio = t_eps / bound if (t_eps is not None and bound) else None
    report = (f"algorithm={cfg.algorithm} model={metrics.model_label(cfg.graph)} n={cfg.n} seed={seed} "
              f"epsilon={_fmt(cfg.epsilon)} t_eps={_fmt(t_eps) or 'none'} bound={_fmt(bound) or 'none'} "
              f"ratio={_fmt(ratio) or 'none'}")
    print(report, file=sys.stdout if output is not None else sys.stderr)

    if check_equivalence:
        other = engine.run_matrix(cfg.algorithm, model, mu, cfg.max_rounds, keep_matrices=False)
        dev = engine.max_deviation(trace, other)
        if dev > EQUIVALENCE_TOL or not np.array_equal(trace.d_prime_history, other.d_prime_history):
            print(f"equivalence mismatch: agent and matrix traces differ by {dev:.3e}", file=sys.stderr)
            return EXIT_MISMATCH
    if t_eps is None:
        print(f"not converged within {cfg.max_rounds} rounds", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_verify(n_max: int, cases: int, seed: int, engine_rounds: int = 100) -> int:
    if isinstance(n_max, bool) or n_max < 2:
        raise ConfigError("n_max", f"must be >= 2, got {n_max}")
    if cases < 1:
        raise ConfigError("cases", f"must be >= 1, got {cases}")
    results = suites.run_all(n_max, cases, seed, engine_rounds)
    for r in results:
        print(r.line())
        if r.first_failure:
            print(f"  first failure: {r.first_failure}")
    ok = all(r.passed for r in results)
    print("all suites passed" if ok else "some suites FAILED")
    return EXIT_OK if ok else EXIT_MISMATCH


def sweep_spec_from_dict(data: dict, epsilon=None, rounds=None) -> metrics.SweepSpec:
    """Sweep files use ``algorithms``, ``models``, ``n_values``, ``seeds``,
    ``epsilon``, ``max_rounds``, ``mu``, ``engine`` and ``output``."""
    known = {"algorithms", "models", "n_values", "seeds", "epsilon", "max_rounds", "mu", "engine", "output"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown sweep key")
    algorithms = data.get("algorithms")
    if not isinstance(algorithms, list) or not algorithms:
        raise ConfigError("algorithms", "must be a non-empty list")
    for a in algorithms:
        if a not in RUN_ALGORITHMS:
            raise ConfigError("algorithms", f"unknown algorithm {a!r}")
    models = data.get("models")
    if not isinstance(models, list) or not models:
        raise ConfigError("models", "must be a non-empty list of model descriptors")
    models = [_graph_descriptor(m) for m in models]
    n_values = data.get("n_values")
    if not isinstance(n_values, list) or not n_values:
        raise ConfigError("n_values", "must be a non-empty list of integers")
    n_values = [_positive_int("n_values", n) for n in n_values]
    engine_kind = data.get("engine", "agents")
    if engine_kind not in ("agents", "matrix"):
        raise ConfigError("engine", f"must be 'agents' or 'matrix', got {engine_kind!r}")
    spec = metrics.SweepSpec(
        algorithms=tuple(algorithms),
        models=tuple(models),
        n_values=tuple(n_values),
        seeds=_seeds(data.get("seeds", [0])),
        epsilon=_epsilon(epsilon if epsilon is not None else data.get("epsilon", 1e-3)),
        horizon=_positive_int("max_rounds", rounds if rounds is not None else data.get("max_rounds", 1000)),
        mu=data.get("mu", "uniform-random"),
        engine=engine_kind,
    )
    for desc in spec.models:
        for n in spec.n_values:
            try:
                model = model_from_dict(desc, n=n, seed=spec.seeds[0])
            except (ValueError, KeyError, TypeError, OSError) as exc:
                raise ConfigError("models", str(exc)) from None
            try:
                metrics.make_mu(spec.mu, model.n, spec.seeds[0])
            except (ValueError, TypeError) as exc:
                raise ConfigError("mu", str(exc)) from None
    return spec


def cmd_sweep(spec: metrics.SweepSpec, output=None) -> int:
    rows = metrics.sweep(spec)
    _emit(report_csv(rows), output)
    bad = [r for r in rows if r.ratio is not None and r.ratio > 1]
    unconverged = [r for r in rows if not r.converged]
    print(f"{len(rows)} cells, {len(unconverged)} not converged, {len(bad)} above bound", file=sys.stderr)
    return EXIT_NOT_CONVERGED if unconverged else EXIT_OK


def cmd_graphgen(desc: dict, n: int | None, seed: int, t: int, output=None) -> int:
    try:
        model = model_from_dict(desc, n=n, seed=seed)
        g = generate(model, t)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise ConfigError("graph", str(exc)) from None
    _emit(format_graphs([g]), output)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="consensus-lab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its trace CSV")
    run.add_argument("--config", required=True, help="JSON experiment configuration")
    run.add_argument("--check-equivalence", action="store_true",
                     help="also run the matrix engine and compare traces")
    run.add_argument("--rounds", type=int, help="override max_rounds")
    run.add_argument("--epsilon", type=float, help="override epsilon")
    run.add_argument("--seed", type=int, help="seed to run (default: first of seeds)")
    run.add_argument("--output", help="trace CSV path (default: config output, else stdout)")

    ver = sub.add_parser("verify", help="run the randomized verification suites")
    ver.add_argument("--n-max", type=int, default=12)
    ver.add_argument("--cases", type=int, default=1000)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--rounds", type=int, default=100, help="horizon of engine suites")

    sw = sub.add_parser("sweep", help="run a sweep and write the report CSV")
    sw.add_argument("--config", required=True, help="JSON sweep specification")
    sw.add_argument("--rounds", type=int, help="override max_rounds")
    sw.add_argument("--epsilon", type=float, help="override epsilon")
    sw.add_argument("--output", help="report CSV path (default: config output, else stdout)")

    gg = sub.add_parser("graphgen", help="print a model's round-t graph in the graph file format")
    gg.add_argument("--config", help="JSON file holding a model descriptor (or an experiment config)")
    gg.add_argument("--graph", help="inline JSON model descriptor or family name")
    gg.add_argument("--n", type=int)
    gg.add_argument("--round", type=int, default=1, dest="t")
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("--output")
    return p


def _dispatch(args) -> int:
    if args.command == "run":
        data = _load_json(args.config)
        if args.rounds is not None:
            data["max_rounds"] = args.rounds
        if args.epsilon is not None:
            data["epsilon"] = args.epsilon
        cfg = ExperimentConfig.from_dict(data)
        return cmd_run(cfg, args.seed, args.check_equivalence, args.output)
    if args.command == "verify":
        return cmd_verify(args.n_max, args.cases, args.seed, args.rounds)
    if args.command == "sweep":
        data = _load_json(args.config)
        spec = sweep_spec_from_dict(data, args.epsilon, args.rounds)
        return cmd_sweep(spec, args.output if args.output is not None else data.get("output"))
    if args.command == "graphgen":
        if args.graph is not None:
            try:
                raw = json.loads(args.graph)
            except json.JSONDecodeError:
                raw = args.graph
            data = {"graph": raw}
        elif args.config is not None:
            data = _load_json(args.config)
        else:
            raise ConfigError("graph", "give --graph or --config")
        desc = _graph_descriptor(data["graph"] if "graph" in data else data)
        n = args.n if args.n is not None else data.get("n")
        return cmd_graphgen(desc, n, args.seed, args.t, args.output)
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
