"""Point-process samplers and stochastic-domination checks.

Reproducibility: every sample index gets its own counter-based stream
(Philox keyed by (seed, index)), so batches are bit-identical for a
given (seed, parameters) regardless of chunking.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadBound, DomainError, NumericalBreakdown
from .geometry import Configuration, Window, count_in
from .kernels import Kernel
from .operators import (
    DiscretizedOperator,
    discretize,
    interaction_diagonal,
    interaction_values,
    local_interaction,
    operator_trace,
)

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one sample index."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleBatch:
    """A batch of configurations drawn by one sampler on one window."""

    window: Window
    configurations: tuple[Configuration, ...]
    seed: int
    method: str
    params: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.configurations)

    def counts(self) -> np.ndarray:
        return np.array([len(c) for c in self.configurations], dtype=int)


def _uniform_in(window: Window, rng: np.random.Generator, count: int) -> np.ndarray:
    lo = np.asarray(window.lower)
    hi = np.asarray(window.upper)
    return lo + (hi - lo) * rng.random((count, window.dimension))


def sample_poisson(
    intensity: float | Callable[[np.ndarray], np.ndarray],
    bound: float,
    window: Window,
    count: int,
    seed: int,
    index_offset: int = 0,
) -> SampleBatch:
    """Inhomogeneous Poisson samples by thinning a homogeneous envelope.

    `bound` must dominate the intensity everywhere; a drawn point where
    the intensity exceeds the bound raises BadBound.  `index_offset`
    shifts the per-sample stream indices so a batch can be produced in
    chunks without changing its contents.
    """
    if bound < 0 or not np.isfinite(bound):
        raise DomainError(f"envelope bound must be finite and nonnegative, got {bound}")
    constant = not callable(intensity)
    if constant and intensity > bound * (1 + 1e-12):
        raise BadBound(f"intensity {intensity} exceeds the envelope {bound}")
    rate = bound * window.volume
    configs = []
    for i in range(count):
        rng = stream(seed, index_offset + i)
        n = int(rng.poisson(rate)) if rate > 0 else 0
        pts = _uniform_in(window, rng, n)
        if n and not constant:
            vals = np.asarray(intensity(pts), dtype=float)
            if np.any(vals > bound * (1 + 1e-12)):
                raise BadBound(
                    f"intensity {vals.max():.6g} above the envelope {bound} at a drawn point"
                )
            keep = rng.random(n) * bound < vals
            pts = pts[keep]
        elif n and constant and intensity < bound:
            keep = rng.random(n) * bound < intensity
            pts = pts[keep]
        configs.append(Configuration.from_coords(pts, dimension=window.dimension))
    return SampleBatch(
        window=window,
        configurations=tuple(configs),
        seed=seed,
        method="poisson",
        params={"bound": bound, "count": count},
    )


def _orthonormalize(V: np.ndarray) -> np.ndarray:
    # modified Gram-Schmidt; the column count stays small
    k = V.shape[1]
    for c in range(k):
        col = V[:, c]
        for p in range(c):
            col -= (V[:, p] @ col) * V[:, p]
        norm = np.linalg.norm(col)
        if norm < 1e-12:
            raise NumericalBreakdown("projection basis collapsed during sampling")
        V[:, c] = col / norm
    return V


def _projection_sample(U: np.ndarray, rng: np.random.Generator) -> list[int]:
    """Sequential sample of |cols| node indices from a projection kernel."""
    V = U.copy()
    chosen: list[int] = []
    for remaining in range(V.shape[1], 0, -1):
        p = np.einsum("nj,nj->n", V, V)
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if not np.isfinite(total) or total <= 0:
            raise NumericalBreakdown("projection marginals vanished")
        idx = int(np.searchsorted(np.cumsum(p), rng.random() * total))
        idx = min(idx, len(p) - 1)
        chosen.append(idx)
        if remaining == 1:
            break
        j = int(np.argmax(np.abs(V[idx])))
        pivot = V[idx, j]
        col = V[:, j].copy()
        V = np.delete(V, j, axis=1)
        V -= np.outer(col, V[idx] / pivot)
        V = _orthonormalize(V)
    return chosen


def sample_dpp_spectral(
    spec: Kernel,
    window: Window,
    n: int,
    count: int,
    seed: int,
    *,
    panels: int | None = None,
    disc: DiscretizedOperator | None = None,
    index_offset: int = 0,
) -> SampleBatch:
    """Spectral sampler on the Nystrom nodes.

    Eigenfunctions enter independently with probability lambda_i, then
    that many nodes are drawn sequentially from the projection kernel.
    The law converges to the window restriction of the process as the
    rule refines.
    """
    disc = disc or discretize(spec, "K", window, n, panels=panels)
    spect = disc.spectral()
    lams = np.clip(spect.eigenvalues, 0.0, None)
    keep = lams > 1e-12
    lams = lams[keep]
    U = spect.eigenvectors[:, keep]
    if lams.size and lams[0] >= 1.0:
        raise NumericalBreakdown(f"eigenvalue {lams[0]} >= 1 in the sampler")
    nodes = disc.quad.nodes
    configs = []
    for i in range(count):
        rng = stream(seed, index_offset + i)
        select = rng.random(lams.size) < lams
        if not np.any(select):
            configs.append(Configuration.empty(window.dimension))
            continue
        idx = _projection_sample(U[:, select], rng)
        configs.append(Configuration.from_coords(nodes[idx], dimension=window.dimension))
    return SampleBatch(
        window=window,
        configurations=tuple(configs),
        seed=seed,
        method="dpp-spectral",
        params={"n": n, "count": count},
        metadata={"expected_count": float(lams.sum()), "nodes": nodes.shape[0]},
    )


def _interaction_sup(disc: DiscretizedOperator, window: Window, grid: int = 512) -> float:
    """Grid estimate of sup_x J_[Lambda](x, x) with a small safety factor."""
    if window.dimension == 1:
        xs = np.linspace(window.lower[0], window.upper[0], grid)[:, None]
    else:
        g = int(np.sqrt(grid)) + 1
        ax = [np.linspace(lo, hi, g) for lo, hi in zip(window.lower, window.upper)]
        g0, g1 = np.meshgrid(*ax, indexing="ij")
        xs = np.column_stack([g0.ravel(), g1.ravel()])
    vals = interaction_diagonal(disc, xs)
    return float(vals.max() * 1.0001 + 1e-12)


def sample_dpp_birth_death(
    spec: Kernel,
    window: Window,
    n: int,
    count: int,
    seed: int,
    *,
    burn_in: float | None = None,
    thinning: float | None = None,
    chains: int = 8,
    panels: int | None = None,
    disc: DiscretizedOperator | None = None,
    threads: int = 1,
) -> SampleBatch:
    """Spatial birth-death chain with the local compound intensity.

    Births are proposed uniformly at envelope rate sup_x J(x,x) * |window|
    and accepted with probability c(x, xi) / envelope; each point dies at
    rate 1.  The acceptance ratio c(x, xi) / J(x, x) must stay in [0, 1]
    (hard assertion).  Time is measured in death-rate units; defaults for
    `burn_in` and `thinning` convert the usual event-count heuristics
    (20x and 5x the expected population).
    """
    disc = disc or discretize(spec, "K", window, n, panels=panels)
    jmax = _interaction_sup(disc, window)
    expected = max(operator_trace(disc), 1e-9)
    birth_rate = jmax * window.volume
    event_rate = birth_rate + max(expected, 1.0)
    if burn_in is None:
        burn_in = 20.0 * max(expected, 1.0) / event_rate
    if thinning is None:
        thinning = 5.0 * max(expected, 1.0) / event_rate
    chains = max(1, min(chains, count))
    per_chain = [count // chains + (1 if c < count % chains else 0) for c in range(chains)]

    def one_chain(chain_idx: int) -> list[Configuration]:
        rng = stream(seed, chain_idx)
        return _run_birth_death_chain(
            disc, window, rng, per_chain[chain_idx], burn_in, thinning, jmax, birth_rate
        )

    if threads > 1 and chains > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(threads, chains)) as pool:
            configs_by_chain = list(pool.map(one_chain, range(chains)))
    else:
        configs_by_chain = [one_chain(c) for c in range(chains)]
    configs = [cfg for chain in configs_by_chain for cfg in chain]
    return SampleBatch(
        window=window,
        configurations=tuple(configs),
        seed=seed,
        method="dpp-birth-death",
        params={
            "n": n,
            "count": count,
            "burn_in": burn_in,
            "thinning": thinning,
            "chains": chains,
        },
        metadata={"envelope": jmax, "expected_count": expected},
    )


def _run_birth_death_chain(
    disc: DiscretizedOperator,
    window: Window,
    rng: np.random.Generator,
    wanted: int,
    burn_in: float,
    thinning: float,
    jmax: float,
    birth_rate: float,
) -> list[Configuration]:
    pts: list[np.ndarray] = []
    jmat = np.zeros((0, 0))
    out: list[Configuration] = []
    t = 0.0
    next_sample = burn_in
    while len(out) < wanted:
        m = len(pts)
        rate = birth_rate + m
        if rate <= 0:
            # absorbing empty state: emit the remaining samples directly
            while len(out) < wanted:
                out.append(Configuration.empty(window.dimension))
            break
        dt = rng.exponential(1.0 / rate)
        while t + dt >= next_sample and len(out) < wanted:
            coords = np.array(pts).reshape(m, window.dimension)
            out.append(Configuration.from_coords(coords, dimension=window.dimension))
            next_sample += thinning
        t += dt
        if rng.random() * rate < birth_rate:
            x = _uniform_in(window, rng, 1)[0]
            jxx = float(interaction_values(disc, x[None, :])[0, 0])
            if m:
                cross = interaction_values(disc, x[None, :], np.array(pts))[0]
                try:
                    sol = np.linalg.solve(jmat, cross)
                    c = jxx - float(cross @ sol)
                except np.linalg.LinAlgError:
                    c = 0.0
            else:
                cross = np.zeros(0)
                c = jxx
            c = max(c, 0.0)
            if c > jxx * (1 + 1e-10) or c > jmax * (1 + 1e-10):
                raise NumericalBreakdown(
                    f"birth acceptance {c:.6g} above its envelope (J(x,x)={jxx:.6g}, sup={jmax:.6g})"
                )
            if rng.random() * jmax < c:
                if m:
                    jmat = np.block(
                        [[jmat, cross[:, None]], [cross[None, :], np.array([[jxx]])]]
                    )
                else:
                    jmat = np.array([[jxx]])
                pts.append(x)
        elif m:
            kill = int(rng.integers(m))
            pts.pop(kill)
            keep = [i for i in range(m) if i != kill]
            jmat = jmat[np.ix_(keep, keep)]
    return out


# ---------------------------------------------------------------------------
# increasing statistics and the domination check


def total_count(config: Configuration, window: Window) -> float:
    return float(len(config))


def max_quadrant_count(config: Configuration, window: Window) -> float:
    """Largest count over a fixed split into 4 congruent subwindows."""
    if len(config) == 0:
        return 0.0
    if window.dimension == 1:
        lo, hi = window.lower[0], window.upper[0]
        edges = np.linspace(lo, hi, 5)
        best = 0
        for k in range(4):
            sub = Window.interval(edges[k], edges[k + 1])
            best = max(best, count_in(config, sub))
        return float(best)
    (lx, ly), (ux, uy) = window.lower, window.upper
    mx, my = 0.5 * (lx + ux), 0.5 * (ly + uy)
    best = 0
    for a, b in ((lx, ly), (lx, my), (mx, ly), (mx, my)):
        sub = Window.box((a, b), (a + (ux - lx) / 2, b + (uy - ly) / 2))
        best = max(best, count_in(config, sub))
    return float(best)


def neighbor_count(radius: float) -> Callable[[Configuration, Window], float]:
    """Number of points having another point within `radius` (increasing)."""

    def stat(config: Configuration, window: Window) -> float:
        m = len(config)
        if m < 2:
            return 0.0
        diff = config.coords[:, None, :] - config.coords[None, :, :]
        dist2 = np.sum(diff * diff, axis=2)
        np.fill_diagonal(dist2, np.inf)
        return float(np.sum(np.any(dist2 <= radius * radius, axis=1)))

    return stat


@dataclass(frozen=True)
class FunctionalComparison:
    name: str
    mean_lower: float
    mean_upper: float
    se_diff: float
    zscore: float
    ok: bool


@dataclass(frozen=True)
class DominationReport:
    comparisons: tuple[FunctionalComparison, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.comparisons)


def domination_test(
    dominated: SampleBatch,
    dominating: SampleBatch,
    functionals: Sequence[tuple[str, Callable[[Configuration, Window], float]]] | None = None,
    z_threshold: float = 3.0,
) -> DominationReport:
    """Compare means of increasing statistics between two batches.

    Stochastic domination of `dominated` by `dominating` implies every
    increasing statistic has a smaller (or equal) mean; a violation
    beyond `z_threshold` standard errors flags the pair.
    """
    window = dominated.window
    if functionals is None:
        r = min(window.sides) / 8.0
        functionals = [
            ("total_count", total_count),
            ("max_quadrant_count", max_quadrant_count),
            (f"neighbor_count(r={r:.4g})", neighbor_count(r)),
        ]
    rows = []
    for name, fn in functionals:
        a = np.array([fn(c, window) for c in dominated.configurations])
        b = np.array([fn(c, window) for c in dominating.configurations])
        se = float(np.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b)))
        diff = float(a.mean() - b.mean())
        z = diff / se if se > 0 else (0.0 if diff <= 0 else np.inf)
        rows.append(
            FunctionalComparison(
                name=name,
                mean_lower=float(a.mean()),
                mean_upper=float(b.mean()),
                se_diff=se,
                zscore=z,
                ok=bool(diff <= z_threshold * se),
            )
        )
    return DominationReport(tuple(rows))


# ---------------------------------------------------------------------------
# persistence: CSV of points plus a key=value sidecar


def save_batch(batch: SampleBatch, prefix) -> tuple[str, str]:
    """Write `<prefix>.csv` (sample_id, x[, y]) and `<prefix>.meta`."""
    prefix = str(prefix)
    csv_path = prefix + ".csv"
    meta_path = prefix + ".meta"
    d = batch.window.dimension
    header = "sample_id,x" if d == 1 else "sample_id,x,y"
    lines = [header]
    for i, cfg in enumerate(batch.configurations):
        for row in cfg.coords:
            coords = ",".join(f"{c:.17g}" for c in row)
            lines.append(f"{i},{coords}")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    meta = [
        "[batch]",
        f"method = {batch.method}",
        f"seed = {batch.seed}",
        f"count = {len(batch.configurations)}",
        f"dimension = {d}",
        f"window_lower = {','.join(str(v) for v in batch.window.lower)}",
        f"window_upper = {','.join(str(v) for v in batch.window.upper)}",
        "",
        "[params]",
    ]
    meta += [f"{k} = {v}" for k, v in sorted(batch.params.items())]
    meta += ["", "[metadata]"]
    meta += [f"{k} = {v}" for k, v in sorted(batch.metadata.items())]
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(meta) + "\n")
    return csv_path, meta_path


def load_batch(prefix) -> SampleBatch:
    import configparser

    prefix = str(prefix)
    parser = configparser.ConfigParser()
    with open(prefix + ".meta", "r", encoding="utf-8") as fh:
        parser.read_string(fh.read())
    sec = parser["batch"]
    d = sec.getint("dimension")
    count = sec.getint("count")
    window = Window(
        tuple(float(v) for v in sec["window_lower"].split(",")),
        tuple(float(v) for v in sec["window_upper"].split(",")),
    )
    rows: dict[int, list] = {}
    with open(prefix + ".csv", "r", encoding="utf-8") as fh:
        header = fh.readline()
        expected = "sample_id,x" if d == 1 else "sample_id,x,y"
        if header.strip() != expected:
            raise DomainError(f"unexpected batch header {header.strip()!r}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 1 + d:
                raise DomainError(f"malformed batch row {line.strip()!r}")
            rows.setdefault(int(parts[0]), []).append(tuple(float(v) for v in parts[1:]))
    configs = [
        Configuration(rows.get(i, ()), dimension=d) for i in range(count)
    ]
    params = dict(parser["params"]) if parser.has_section("params") else {}
    metadata = dict(parser["metadata"]) if parser.has_section("metadata") else {}
    return SampleBatch(
        window=window,
        configurations=tuple(configs),
        seed=sec.getint("seed"),
        method=sec["method"],
        params=params,
        metadata=metadata,
    )
