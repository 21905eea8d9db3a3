"""Declarative experiment runner for decoder robustness sweeps.

A run is a full factorial over (distribution, m, trial): each such cell
draws one (matrix, signal, noise) triple from its own derived seed and
feeds the same triple to every decoder, so decoder comparisons are
paired.  Records serialize to CSV with a fixed header, summaries carry
means and standard errors of the l2 error over converged trials, and an
emitted gnuplot script renders error-vs-m curves.

Reproducibility contract: identical config and master seed give
byte-identical CSV output, sequential or parallel.  Wall times are
recorded as 0.0 unless timing is explicitly enabled, because real
timings would break that contract.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import parse_distribution
from .ensembles import (
    sample_heavy_noise,
    sample_matrix,
    sample_sparse_vector,
    sample_spherical_noise,
)
from .errors import EmptyCell, HarnessError, NoiseBlindError, ParamError
from .rng import derive_seed
from .solvers import DecodeProblem, decode, factorize

TRIALS_HEADER = (
    "distribution,m,decoder,eta_factor,trial,seed,"
    "l2_error,l1_error,residual,converged,wall_time"
)
SUMMARY_HEADER = "distribution,m,decoder,eta_factor,count,mean_l2_error,stderr_l2_error"


@dataclass(frozen=True)
class NoiseModel:
    """Noise drawn per trial: uniform on a sphere of the given radius,
    or heavy-tailed with tail exponent ``alpha`` rescaled to that exact
    radius.  Radius 0 means noiseless."""

    kind: str
    radius: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("spherical", "psi"):
            raise ParamError(f"unknown noise kind {self.kind!r}")
        if self.radius < 0.0:
            raise ParamError("noise radius must be >= 0")
        if self.kind == "psi" and self.alpha <= 0.0:
            raise ParamError("psi noise requires alpha > 0")

    @property
    def label(self) -> str:
        if self.kind == "spherical":
            return f"spherical({self.radius:g})"
        return f"psi({self.alpha:g},{self.radius:g})"


def Spherical(radius: float) -> NoiseModel:
    return NoiseModel("spherical", float(radius))


def Psi(alpha: float, radius: float) -> NoiseModel:
    return NoiseModel("psi", float(radius), float(alpha))


@dataclass(frozen=True)
class DecoderSpec:
    """Equality decoder (``bp``) or ball decoder (``bpdn``) whose radius
    is ``eta_factor`` times the realized noise norm of the trial."""

    kind: str
    eta_factor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("bp", "bpdn"):
            raise ParamError(f"unknown decoder kind {self.kind!r}")
        if self.eta_factor < 0.0:
            raise ParamError("eta_factor must be >= 0")
        if self.kind == "bp" and self.eta_factor != 0.0:
            raise ParamError("bp takes no eta_factor")

    @property
    def label(self) -> str:
        if self.kind == "bp":
            return "bp"
        return f"bpdn({self.eta_factor:g})"


def BP() -> DecoderSpec:
    return DecoderSpec("bp")


def BPDN(eta_factor: float) -> DecoderSpec:
    return DecoderSpec("bpdn", float(eta_factor))


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    s: int
    m_list: tuple
    distributions: tuple
    noise: NoiseModel
    decoders: tuple
    trials: int
    master_seed: int
    tol_abs: float = 1e-8
    tol_rel: float = 1e-8
    max_iters: int = 50000
    raw_student_t: bool = False

    def __post_init__(self):
        if self.N < 1 or self.s < 1:
            raise ParamError("N and s must be >= 1")
        if not self.m_list:
            raise ParamError("m_list must be nonempty")
        for m in self.m_list:
            if not self.s < m <= self.N:
                raise ParamError(f"need s < m <= N, got m={m} with s={self.s}, N={self.N}")
        if not self.distributions:
            raise ParamError("distributions must be nonempty")
        if not self.decoders:
            raise ParamError("decoders must be nonempty")
        if self.trials < 1:
            raise ParamError("trials must be >= 1")
        # parse eagerly so bad names fail at config time
        for name in self.distributions:
            parse_distribution(name)


@dataclass(frozen=True)
class TrialRecord:
    distribution: str
    m: int
    decoder: str
    eta_factor: float
    trial: int
    seed: int
    l2_error: float
    l1_error: float
    residual: float
    solve_converged: bool
    wall_time: float


@dataclass(frozen=True)
class CellSummary:
    mean: float
    stderr: float
    count: int


def _split_top_level(text: str):
    """Split on commas that are not inside parentheses."""
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p]


def _parse_noise(text: str) -> NoiseModel:
    t = text.strip().lower()
    if t.startswith("spherical(") and t.endswith(")"):
        return Spherical(float(t[len("spherical("):-1]))
    if t.startswith("psi(") and t.endswith(")"):
        args = [a.strip() for a in t[len("psi("):-1].split(",")]
        if len(args) != 2:
            raise ParamError(f"psi noise takes (alpha, radius): {text!r}")
        return Psi(float(args[0]), float(args[1]))
    raise ParamError(f"cannot parse noise model {text!r}")


def _parse_decoder(text: str) -> DecoderSpec:
    t = text.strip().lower()
    if t == "bp":
        return BP()
    if t.startswith("bpdn(") and t.endswith(")"):
        return BPDN(float(t[len("bpdn("):-1]))
    raise ParamError(f"cannot parse decoder {text!r}")


_BOOL_WORDS = {"true": True, "1": True, "yes": True,
               "false": False, "0": False, "no": False}


def parse_config(text: str) -> ExperimentConfig:
    """Flat key = value format; '#' starts a comment; lists are
    comma-separated (commas inside parentheses bind to their entry)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()

    required = ("N", "s", "m_list", "distributions", "noise", "decoders",
                "trials", "master_seed")
    missing = [k for k in required if k not in values]
    if missing:
        raise ParamError(f"config missing keys: {', '.join(missing)}")
    kwargs = dict(
        N=int(values["N"]),
        s=int(values["s"]),
        m_list=tuple(int(v) for v in _split_top_level(values["m_list"])),
        distributions=tuple(_split_top_level(values["distributions"])),
        noise=_parse_noise(values["noise"]),
        decoders=tuple(_parse_decoder(d) for d in _split_top_level(values["decoders"])),
        trials=int(values["trials"]),
        master_seed=int(values["master_seed"]),
    )
    if "tol_abs" in values:
        kwargs["tol_abs"] = float(values["tol_abs"])
    if "tol_rel" in values:
        kwargs["tol_rel"] = float(values["tol_rel"])
    if "max_iters" in values:
        kwargs["max_iters"] = int(values["max_iters"])
    if "raw_student_t" in values:
        word = values["raw_student_t"].lower()
        if word not in _BOOL_WORDS:
            raise ParamError(f"raw_student_t must be boolean, got {word!r}")
        kwargs["raw_student_t"] = _BOOL_WORDS[word]
    return ExperimentConfig(**kwargs)


def read_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def desk_preset(master_seed: int = 0) -> ExperimentConfig:
    """Laptop-scale sweep: N=500, s=5, m from 25 to 350 in steps of 25,
    100 paired trials of the standard three ensembles under small
    spherical noise."""
    n_total = 500
    return ExperimentConfig(
        N=n_total,
        s=5,
        m_list=tuple(range(25, 351, 25)),
        distributions=("gaussian", "rademacher",
                       f"student_t({math.ceil(math.log(n_total))})"),
        noise=Spherical(1e-2),
        decoders=(BP(), BPDN(0.5), BPDN(1.0), BPDN(2.0)),
        trials=100,
        master_seed=master_seed,
    )


def paper_preset(master_seed: int = 0) -> ExperimentConfig:
    """Full-scale sweep: N=5000, s=10, m = ceil(k*N/20) for k=1..14,
    500 trials; expect long runtimes."""
    n_total = 5000
    return ExperimentConfig(
        N=n_total,
        s=10,
        m_list=tuple(math.ceil(k * n_total / 20) for k in range(1, 15)),
        distributions=("gaussian", "rademacher",
                       f"student_t({math.ceil(math.log(n_total))})"),
        noise=Spherical(1e-2),
        decoders=(BP(), BPDN(0.5), BPDN(1.0), BPDN(2.0)),
        trials=500,
        master_seed=master_seed,
    )


def _resolve_distribution(name: str, raw_student_t: bool):
    dist = parse_distribution(name)
    if raw_student_t and dist.family == "student_t":
        dist = parse_distribution(name, normalized=False)
    return dist


def _cell_seed(master_seed: int, dist_name: str, m: int, trial: int) -> int:
    # shared by all decoders of the trial: the paired-design contract
    return derive_seed(master_seed, dist_name, m, trial)


def _run_cell(config: ExperimentConfig, dist_name: str, m: int, trial: int,
              include_timing: bool):
    dist = _resolve_distribution(dist_name, config.raw_student_t)
    seed = _cell_seed(config.master_seed, dist_name, m, trial)
    A = sample_matrix(dist, m, config.N, True, seed)
    x0 = sample_sparse_vector(config.N, config.s, seed)
    if config.noise.radius == 0.0:
        w = np.zeros(m)
    elif config.noise.kind == "spherical":
        w = sample_spherical_noise(m, config.noise.radius, seed)
    else:
        w = sample_heavy_noise(m, config.noise.radius, config.noise.alpha, seed)
    y = A.entries @ x0.x0 + w
    w_norm = float(np.linalg.norm(w))
    factor = factorize(A.entries)

    records = []
    for dec in config.decoders:
        eta = 0.0 if dec.kind == "bp" else dec.eta_factor * w_norm
        problem = DecodeProblem(
            A.entries, y, eta=eta, tol_abs=config.tol_abs,
            tol_rel=config.tol_rel, max_iters=config.max_iters, factor=factor,
        )
        started = time.perf_counter() if include_timing else 0.0
        try:
            result = decode(problem)
            elapsed = time.perf_counter() - started if include_timing else 0.0
            diff = result.z - x0.x0
            records.append(TrialRecord(
                distribution=dist_name, m=m, decoder=dec.kind,
                eta_factor=dec.eta_factor, trial=trial, seed=seed,
                l2_error=float(np.linalg.norm(diff)),
                l1_error=float(np.abs(diff).sum()),
                residual=float(result.residual_norm),
                solve_converged=bool(result.converged),
                wall_time=float(elapsed),
            ))
        except NoiseBlindError:
            elapsed = time.perf_counter() - started if include_timing else 0.0
            records.append(TrialRecord(
                distribution=dist_name, m=m, decoder=dec.kind,
                eta_factor=dec.eta_factor, trial=trial, seed=seed,
                l2_error=math.nan, l1_error=math.nan, residual=math.nan,
                solve_converged=False, wall_time=float(elapsed),
            ))
    return records


def _cell_args(config: ExperimentConfig, include_timing: bool):
    for dist_name in config.distributions:
        for m in config.m_list:
            for trial in range(config.trials):
                yield (config, dist_name, m, trial, include_timing)


def run_experiment(config: ExperimentConfig, threads: int | None = None,
                   include_timing: bool = False):
    """Run the full factorial and return records in deterministic order
    (distribution, then m, then trial, then decoder as configured).

    Raises HarnessError when more than 5% of trial cells contain a
    failed solve; those records stay in the output with
    ``solve_converged`` false either way.
    """
    args = list(_cell_args(config, include_timing))
    if threads is not None and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            cell_results = list(pool.map(_run_cell_star, args, chunksize=4))
    else:
        cell_results = [_run_cell(*a) for a in args]

    records = [rec for cell in cell_results for rec in cell]
    failed_cells = sum(
        1 for cell in cell_results if any(not r.solve_converged for r in cell)
    )
    if failed_cells > 0.05 * len(cell_results):
        raise HarnessError(
            f"{failed_cells} of {len(cell_results)} trial cells failed to converge"
        )
    return records


def _run_cell_star(args):
    return _run_cell(*args)


def summarize(records):
    """Per-cell mean and standard error of the l2 error over converged
    trials, keyed by (distribution, m, decoder, eta_factor)."""
    cells = {}
    for rec in records:
        key = (rec.distribution, rec.m, rec.decoder, rec.eta_factor)
        cells.setdefault(key, []).append(rec)
    out = {}
    for key, recs in cells.items():
        errors = [r.l2_error for r in recs if r.solve_converged]
        if not errors:
            raise EmptyCell(f"cell {key} has zero converged trials")
        n = len(errors)
        mean = float(np.mean(errors))
        stderr = float(np.std(errors, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out[key] = CellSummary(mean=mean, stderr=stderr, count=n)
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def _records_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIALS_HEADER.split(","))
    for r in records:
        writer.writerow([
            r.distribution, r.m, r.decoder, _fmt(r.eta_factor), r.trial,
            r.seed, _fmt(r.l2_error), _fmt(r.l1_error), _fmt(r.residual),
            "true" if r.solve_converged else "false", _fmt(r.wall_time),
        ])
    return buf.getvalue()


def _summary_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER.split(","))
    if records:
        summary = summarize(records)
        for key in sorted(summary, key=lambda k: (k[0], k[1], k[2], k[3])):
            cell = summary[key]
            writer.writerow([
                key[0], key[1], key[2], _fmt(key[3]),
                cell.count, _fmt(cell.mean), _fmt(cell.stderr),
            ])
    return buf.getvalue()


def _plot_script(records) -> str:
    lines = [
        "set datafile separator ','",
        "set xlabel 'm'",
        "set ylabel 'mean l2 error'",
        "set logscale y",
        "set key outside",
        "set terminal pngcairo size 960,640",
        "set output 'errors.png'",
        "",
    ]
    if not records:
        lines.append("# no records; nothing to plot")
        return "\n".join(lines) + "\n"
    summary = summarize(records)
    curves = {}
    for (dist, m, decoder, eta), cell in summary.items():
        label = decoder if decoder == "bp" else f"{decoder}({eta:g})"
        curves.setdefault((dist, label), []).append((m, cell.mean, cell.stderr))
    blocks = []
    plot_terms = []
    for idx, key in enumerate(sorted(curves)):
        dist, label = key
        name = f"$curve_{idx}"
        rows = "\n".join(
            f"{m} {_fmt(mean)} {_fmt(err)}"
            for m, mean, err in sorted(curves[key])
        )
        blocks.append(f"{name} << EOD\n{rows}\nEOD")
        plot_terms.append(
            f"{name} using 1:2:3 with yerrorlines title '{dist} {label}'"
        )
    lines.extend(blocks)
    lines.append("")
    lines.append("plot \\")
    lines.append(", \\\n".join("  " + t for t in plot_terms))
    return "\n".join(lines) + "\n"


def emit_outputs(records, path):
    """Write trials.csv, summary.csv, and plot.gnuplot under ``path``."""
    import os

    os.makedirs(path, exist_ok=True)
    targets = {
        "trials.csv": _records_csv(records),
        "summary.csv": _summary_csv(records),
        "plot.gnuplot": _plot_script(records),
    }
    for name, content in targets.items():
        target = os.path.join(path, name)
        try:
            with open(target, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
        except OSError as exc:
            raise HarnessError(f"cannot write {target}: {exc}") from exc


def parse_trials(path):
    """Inverse of the trials.csv writer."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRIALS_HEADER.split(","):
            raise HarnessError(f"unexpected trials.csv header in {path}")
        for row in reader:
            if len(row) != 11:
                raise HarnessError(f"malformed trials.csv row: {row!r}")
            records.append(TrialRecord(
                distribution=row[0], m=int(row[1]), decoder=row[2],
                eta_factor=float(row[3]), trial=int(row[4]), seed=int(row[5]),
                l2_error=float(row[6]), l1_error=float(row[7]),
                residual=float(row[8]), solve_converged=row[9] == "true",
                wall_time=float(row[10]),
            ))
    return records
