"""Batch experiments: config parsing, multi-chain runs and comparisons.

A run directory looks like::

    out/
      config.yaml            resolved configuration
      summary.csv            one row of ESS and ESS/L summaries per chain
      chain_000/
        samples.csv          header dim_0..dim_{D-1}, one row per sample
        trace.csv            '# '-prefixed config echo, then one row per round
        diagnostics.txt      key = value block

Chain ``c`` is seeded with ``SeedSequence(master, spawn_key=(c,))`` so adding
chains never changes the streams of existing ones.
"""

import csv
import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import targets
from .bayes_opt import Schedules
from .diagnostics import report
from .gp import SearchSpace
from .hmc import HyperParams
from .sampler import AdaptiveRunConfig, child_seed, run_adaptive, run_fixed

MODEL_NAMES = ("gaussian", "ill_conditioned_gaussian", "logistic", "lgc", "sv")
SUMMARY_FIELDS = ("chain", "ess_min", "ess_median", "ess_max",
                  "ess_per_leapfrog_min", "ess_per_leapfrog_median",
                  "ess_per_leapfrog_max", "total_leapfrog", "acceptance_rate")
TRACE_FIELDS = ("i", "eps", "L", "reward", "p_i", "s", "adapted", "phase")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``line`` is 1-based when known."""

    def __init__(self, message, field=None, line=None):
        where = ""
        if field:
            where += f" [field {field}]"
        if line:
            where += f" [line {line}]"
        super().__init__(message + where)
        self.field = field
        self.line = line


class DataError(ValueError):
    """Model data missing, unreadable or inconsistent."""


@dataclass
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)


@dataclass
class SamplerSpec:
    kind: str = "adaptive"
    eps_bounds: list = None
    L_bounds: list = None
    eps: float = None
    L: int = None
    burnin: int = 1000
    n_samples: int = 5000
    window: int = None
    k: int = 100
    scale_alpha: float = 4.0
    kernel_width: float = 0.2
    delta: float = 0.1
    noise: float = 0.1
    eps_grid_size: int = 200
    fixed_length: bool = False


@dataclass
class ExperimentConfig:
    model: ModelSpec
    sampler: SamplerSpec
    chains: int = 1
    seed: int = 0
    workers: int = 1
    out: str = "run"

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, raw, base_dir=".", node=None):
        """Validate a parsed mapping.  ``node`` is the YAML node tree, used
        only to attach line numbers to errors."""
        return _build_config(raw, Path(base_dir), node)


def _line_of(node, path):
    """1-based line of the key at ``path`` in a composed YAML node."""
    line = None
    for key in path:
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if k.value == key:
                line = k.start_mark.line + 1
                node = v
                break
        else:
            break
    return line


def _build_config(raw, base_dir, node):
    def fail(msg, *path):
        raise ConfigError(msg, ".".join(path), _line_of(node, path))

    if not isinstance(raw, dict):
        fail("config must be a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in raw:
        if key not in known:
            fail(f"unknown key {key!r}", key)
    if "model" not in raw or not isinstance(raw["model"], dict):
        fail("missing 'model' section", "model")
    mraw = dict(raw["model"])
    for key in mraw:
        if key not in {f.name for f in dataclasses.fields(ModelSpec)}:
            fail(f"unknown key {key!r}", "model", key)
    if mraw.get("name") not in MODEL_NAMES:
        fail(f"model.name must be one of {MODEL_NAMES}", "model", "name")
    for key in ("params", "data", "simulate"):
        if not isinstance(mraw.get(key) or {}, dict):
            fail("must be a mapping", "model", key)
    data = {}
    for key, value in (mraw.get("data") or {}).items():
        path = Path(str(value))
        data[key] = str(path if path.is_absolute() else (base_dir / path).resolve())
    model = ModelSpec(mraw["name"], dict(mraw.get("params") or {}), data,
                      dict(mraw.get("simulate") or {}))

    sraw = raw.get("sampler") or {}
    if not isinstance(sraw, dict):
        fail("sampler must be a mapping", "sampler")
    sfields = {f.name: f for f in dataclasses.fields(SamplerSpec)}
    for key in sraw:
        if key not in sfields:
            fail(f"unknown key {key!r}", "sampler", key)
    sampler = SamplerSpec(**sraw)
    # YAML 1.1 reads '1e-4' (no dot) as a string
    for name in ("eps", "scale_alpha", "kernel_width", "delta", "noise"):
        value = getattr(sampler, name)
        if value is None:
            continue
        try:
            setattr(sampler, name, float(value))
        except (TypeError, ValueError):
            fail(f"{name} must be a number", "sampler", name)
    if sampler.kind not in ("adaptive", "fixed"):
        fail("kind must be 'adaptive' or 'fixed'", "sampler", "kind")
    for name in ("burnin", "n_samples", "k", "eps_grid_size"):
        value = getattr(sampler, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < (0 if name == "burnin" else 1):
            fail(f"{name} must be a positive integer", "sampler", name)
    if sampler.window is not None and (not isinstance(sampler.window, int) or sampler.window < 1):
        fail("window must be a positive integer", "sampler", "window")
    if sampler.kind == "fixed":
        if sampler.eps is None or sampler.L is None:
            fail("fixed sampler needs eps and L", "sampler")
        try:
            HyperParams(sampler.eps, sampler.L)
        except ValueError as exc:
            fail(str(exc), "sampler", "eps")
    else:
        for name in ("eps_bounds", "L_bounds"):
            value = getattr(sampler, name)
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                fail(f"{name} must be a two-element list", "sampler", name)
        try:
            sampler.eps_bounds = [float(v) for v in sampler.eps_bounds]
            sampler.L_bounds = [int(v) for v in sampler.L_bounds]
            space = _space(sampler)
            Schedules(sampler.k, sampler.delta, sampler.scale_alpha)
        except (TypeError, ValueError) as exc:
            fail(str(exc), "sampler")
        if sampler.eps is not None or sampler.L is not None:
            try:
                gamma0 = HyperParams(
                    space.eps_bounds[0] if sampler.eps is None else sampler.eps,
                    space.L_bounds[0] if sampler.L is None else sampler.L)
            except ValueError as exc:
                fail(str(exc), "sampler", "eps")
            if not space.contains(gamma0):
                fail("initial (eps, L) outside the bounds", "sampler", "eps")
        if not sampler.noise > 0:
            fail("noise must be positive", "sampler", "noise")

    cfg = ExperimentConfig(model, sampler, raw.get("chains", 1),
                           raw.get("seed", 0), raw.get("workers", 1),
                           str(raw.get("out", "run")))
    for name in ("chains", "workers"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            fail(f"{name} must be a positive integer", name)
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        fail("seed must be a nonnegative integer", "seed")
    return cfg


def _space(sampler):
    return SearchSpace(tuple(sampler.eps_bounds), tuple(sampler.L_bounds),
                       sampler.eps_grid_size)


def parse_config(text, base_dir="."):
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {exc}",
                          line=mark.line + 1 if mark else None) from exc
    return ExperimentConfig.from_dict(raw, base_dir, node)


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


# --- models --------------------------------------------------------------

def _read(data, key):
    if key not in data:
        raise DataError(f"model.data.{key} is required")
    try:
        return targets.load_csv(data[key])
    except OSError as exc:
        raise DataError(f"cannot read {data[key]}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"cannot parse {data[key]}: {exc}") from exc


def build_model(spec):
    """Instantiate the target named in ``spec`` from files or simulation."""
    p, data, sim = spec.params, spec.data, spec.simulate
    try:
        if spec.name == "gaussian":
            if "dim" in p:
                dim = int(p["dim"])
                return targets.GaussianTarget(np.zeros(dim), np.eye(dim))
            return targets.GaussianTarget(p["mean"], p["covariance"])
        if spec.name == "ill_conditioned_gaussian":
            return targets.ill_conditioned_gaussian(
                int(p.get("dim", 10)), float(p.get("condition", 100.0)),
                int(p.get("seed", 0)))
        if spec.name == "logistic":
            if data:
                X = _read(data, "X")
                y = _read(data, "y").ravel()
                if np.all(np.isin(y, (0.0, 1.0))):
                    y = 2.0 * y - 1.0
            else:
                X, y, _ = targets.simulate_logistic_data(
                    int(sim.get("n", 200)), int(sim.get("n_features", 5)),
                    int(sim.get("seed", 0)))
            return targets.LogisticRegressionModel(
                X, y, float(p.get("prior_variance", 100.0)))
        if spec.name == "lgc":
            mu = float(p.get("mu", np.log(126.0) - 1.91 / 2))
            sigma2 = float(p.get("sigma2", 1.91))
            beta = float(p.get("beta", 1 / 33))
            if data:
                counts = _read(data, "counts")
            else:
                counts, _ = targets.simulate_lgc_data(
                    int(sim.get("d", 16)), mu, sigma2, beta,
                    int(sim.get("seed", 0)))
            return targets.LogGaussianCoxModel(counts, mu, sigma2, beta)
        if spec.name == "sv":
            if data:
                y = _read(data, "y").ravel()
            else:
                y = targets.simulate_sv_data(
                    int(sim.get("T", 2000)), float(sim.get("beta", 0.65)),
                    float(sim.get("phi", 0.98)), float(sim.get("sigma", 0.15)),
                    int(sim.get("seed", 0)))
            return targets.StochasticVolatilityModel(y)
    except DataError:
        raise
    except (KeyError, ValueError, np.linalg.LinAlgError) as exc:
        raise DataError(f"cannot build model {spec.name!r}: {exc}") from exc
    raise DataError(f"unknown model {spec.name!r}")


# --- running -------------------------------------------------------------

def run_chain(config, chain, model=None):
    """Run one chain; returns ``(RunResult, DiagnosticsReport)``."""
    if model is None:
        model = build_model(config.model)
    s = config.sampler
    seed = child_seed(config.seed, chain)
    if s.kind == "fixed":
        result = run_fixed(model, HyperParams(s.eps, s.L), s.burnin,
                           s.n_samples, seed, fixed_length=s.fixed_length)
    else:
        space = _space(s)
        gamma0 = HyperParams(
            space.eps_bounds[0] if s.eps is None else s.eps,
            space.L_bounds[0] if s.L is None else s.L)
        rc = AdaptiveRunConfig(
            space, gamma0, s.burnin, s.n_samples,
            Schedules(s.k, s.delta, s.scale_alpha), s.window, seed,
            s.noise, s.kernel_width, fixed_length=s.fixed_length)
        result = run_adaptive(model, rc)
    rep = report(result.samples, result.sampling_leapfrog,
                 result.sampling_records)
    return result, rep


def _fmt(v):
    return repr(float(v))


def config_header(config):
    return "".join(f"# {line}\n" for line in config.to_yaml().splitlines())


def read_config_header(path):
    """Re-parse the config echoed at the top of a trace file."""
    lines = []
    with open(path) as fh:
        for line in fh:
            # the echo ends where the run metadata starts
            if not line.startswith("# ") or line.startswith("# chain:"):
                break
            lines.append(line[2:])
    text = "".join(lines)
    return ExperimentConfig.from_dict(yaml.safe_load(text), ".",
                                      yaml.compose(text))


def write_chain(directory, config, chain, result, rep):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dim = result.samples.shape[1]
    with open(directory / "samples.csv", "w", newline="") as fh:
        fh.write(",".join(f"dim_{j}" for j in range(dim)) + "\n")
        for row in result.samples:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    with open(directory / "trace.csv", "w") as fh:
        fh.write(config_header(config))
        fh.write(f"# chain: {chain}\n")
        fh.write(f"# total_leapfrog: {result.trace.total_leapfrog}\n")
        fh.write(",".join(TRACE_FIELDS) + "\n")
        for r in result.trace.rounds:
            fh.write(f"{r.i},{_fmt(r.gamma.eps)},{r.gamma.L},{_fmt(r.reward)},"
                     f"{_fmt(r.p)},{_fmt(r.s)},{int(r.adapted)},{r.phase}\n")
    (directory / "diagnostics.txt").write_text(rep.to_text())


def _chain_job(args):
    config, chain, directory = args
    result, rep = run_chain(config, chain)
    write_chain(directory, config, chain, result, rep)
    return chain, rep.summary()


def run_experiment(config):
    """Run every chain of ``config`` and write the run directory.

    Returns the list of per-chain summary dicts.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(config.to_yaml())
    build_model(config.model)  # fail fast on data errors
    jobs = [(config, c, out / f"chain_{c:03d}") for c in range(config.chains)]
    if config.workers > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_chain_job, jobs))
    else:
        results = [_chain_job(job) for job in jobs]
    rows = []
    for chain, summary in sorted(results, key=lambda r: r[0]):
        rows.append({"chain": chain, **{k: summary[k] for k in SUMMARY_FIELDS[1:]}})
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (_fmt(v) if isinstance(v, float) else v)
                             for k, v in row.items()})
    return rows


# --- comparison ----------------------------------------------------------

def _read_run(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"run directory not found: {directory}")
    summary = directory / "summary.csv"
    cfg = directory / "config.yaml"
    if not summary.exists() or not cfg.exists():
        raise FileNotFoundError(f"incomplete run directory: {directory}")
    config = yaml.safe_load(cfg.read_text())
    with open(summary) as fh:
        rows = list(csv.DictReader(fh))
    return config["model"], rows


def compare(run_dirs):
    """Side-by-side per-chain ESS/L summaries as CSV text.

    Ratio columns divide each run by the first one.  Returns
    ``(csv_text, warnings)``; a non-empty ``warnings`` list means the runs
    are not directly comparable.
    """
    if len(run_dirs) < 2:
        raise ValueError("compare needs at least two run directories")
    runs = [_read_run(d) for d in run_dirs]
    problems = []
    ref_model = runs[0][0]
    for d, (model, _) in zip(run_dirs[1:], runs[1:]):
        if model != ref_model:
            problems.append(f"model of {d} differs from {run_dirs[0]}")
    n_chains = min(len(rows) for _, rows in runs)
    if any(len(rows) != n_chains for _, rows in runs):
        problems.append("runs have different chain counts; truncated")
    stats = ("min", "median", "max")
    buf = io.StringIO()
    for j, d in enumerate(run_dirs):
        buf.write(f"# run{j} = {d}\n")
    header = ["chain"]
    header += [f"run{j}_esspl_{s}" for j in range(len(runs)) for s in stats]
    header += [f"ratio_run{j}_{s}" for j in range(1, len(runs)) for s in stats]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for c in range(n_chains):
        vals = [[float(rows[c][f"ess_per_leapfrog_{s}"]) for s in stats]
                for _, rows in runs]
        row = [c] + [_fmt(v) for v3 in vals for v in v3]
        for v3 in vals[1:]:
            row += [_fmt(a / b) if b > 0 else "nan" for a, b in zip(v3, vals[0])]
        writer.writerow(row)
    return buf.getvalue(), problems


def median_min_esspl(rows):
    return float(np.median([float(r["ess_per_leapfrog_min"]) for r in rows]))


__all__ = [
    "ConfigError", "DataError", "ExperimentConfig", "ModelSpec", "SamplerSpec",
    "build_model", "compare", "load_config", "parse_config",
    "read_config_header", "run_chain", "run_experiment",
]
