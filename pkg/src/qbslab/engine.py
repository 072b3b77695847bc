"""Interacting-particle engine.

Each step estimates the ensemble law on a uniform bucket grid, computes a
per-path variance scaling factor by convolving the bucket probabilities
with the blur kernel at the path's own location, and advances every path
with an independent zero-drift Euler increment:

    x_i <- x_i + sqrt(factor_i * g1(x_i, e_i) * dt) * Z1_i

The first step starts from a point mass, where the kernel normalization
makes the factor exactly 1 (bootstrap).  A Dirac kernel (eps_transform = 0)
skips the interaction entirely and reproduces the classical engine bit for
bit under the same seed.

The interaction term costs O(paths * buckets) per step.  It is evaluated in
fixed-size path chunks; worker threads only distribute whole chunks, and
each path's bucket sum runs in a fixed order, so results are byte-identical
for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .blur import BlurKernel1D, BlurKernel2D, fit_rotation_kernel, fit_translation_kernel
from .core import CoefficientFunctions, ModelConfig, ModelKind, ParticleEnsemble, eval_coefficients
from .moments import Variable, solve_rotation_moments
from .rng import normal_stream

# paths per interaction chunk; fixed so chunk boundaries never depend on the
# thread count (byte-identical outputs across --threads settings)
CHUNK = 8192

FACTOR_MIN = 0.0
FACTOR_MAX = 100.0

# below this blur variance a path's kernel is numerically a point mass; its
# scaling factor limit is the kernel mass, i.e. 1
_VAR_TINY = 1e-30


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class HistogramGrid:
    """Uniform bucket grid over the ensemble, one or two dimensional.

    Bucket edges span [min - w, max + w] per dimension, where w is one
    bucket width of the unpadded range, so every particle lands strictly
    inside the grid.  `indices` caches each path's bucket per dimension.
    """

    lows: tuple
    widths: tuple
    shape: tuple
    counts: np.ndarray
    probability: np.ndarray
    indices: tuple

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def centers(self, dim: int) -> np.ndarray:
        lo, w, n = self.lows[dim], self.widths[dim], self.shape[dim]
        return lo + (np.arange(n) + 0.5) * w

    def edges(self, dim: int) -> np.ndarray:
        lo, w, n = self.lows[dim], self.widths[dim], self.shape[dim]
        return lo + np.arange(n + 1) * w

    @property
    def cell_measure(self) -> float:
        out = 1.0
        for w in self.widths:
            out *= w
        return out


def _axis_grid(values: np.ndarray, n_buckets: int):
    lo0 = float(values.min())
    hi0 = float(values.max())
    if hi0 > lo0:
        pad = (hi0 - lo0) / n_buckets
        lo = lo0 - pad
        width = (hi0 - lo0 + 2.0 * pad) / n_buckets
    else:
        # degenerate ensemble: one occupied bucket over a tiny range
        half = 0.5e-12 * max(abs(lo0), 1.0)
        lo = lo0 - half
        width = 2.0 * half / n_buckets
    idx = np.floor((values - lo) / width).astype(np.int64)
    np.clip(idx, 0, n_buckets - 1, out=idx)
    return lo, width, idx


def build_histogram(ensemble: ParticleEnsemble, n_buckets: int) -> HistogramGrid:
    """Bucket the ensemble on a padded uniform grid (per dimension)."""
    if n_buckets < 2:
        raise EngineError("n_buckets must be >= 2")
    n = ensemble.n_paths
    lo_x, w_x, ix = _axis_grid(ensemble.x, n_buckets)
    if ensemble.spread is None:
        counts = np.bincount(ix, minlength=n_buckets)
        return HistogramGrid(lows=(lo_x,), widths=(w_x,), shape=(n_buckets,),
                             counts=counts, probability=counts / n, indices=(ix,))
    lo_e, w_e, ie = _axis_grid(ensemble.spread, n_buckets)
    flat = ix * n_buckets + ie
    counts = np.bincount(flat, minlength=n_buckets * n_buckets).reshape(n_buckets, n_buckets)
    return HistogramGrid(lows=(lo_x, lo_e), widths=(w_x, w_e),
                         shape=(n_buckets, n_buckets), counts=counts,
                         probability=counts / n, indices=(ix, ie))


def _normal_pdf_grid(points: np.ndarray, centers: np.ndarray, mean, variance) -> np.ndarray:
    """Kernel density at points[:, None] - centers[None, :].

    variance is a scalar or a per-point array (location-dependent kernels);
    per-point kernels are always zero-mean.
    """
    d = points[:, None] - centers[None, :]
    if np.ndim(variance) == 0:
        inv = 1.0 / math.sqrt(2.0 * math.pi * float(variance))
        return inv * np.exp(-((d - mean) ** 2) / (2.0 * float(variance)))
    v = variance[:, None]
    inv = 1.0 / np.sqrt(2.0 * math.pi * v)
    return inv * np.exp(-(d * d) / (2.0 * v))


def _factors_chunk_1d(x, idx, grid: HistogramGrid, kernel: BlurKernel1D, floor: float):
    pdf = _normal_pdf_grid(x, grid.centers(0), kernel.mean, kernel.variance)
    num = np.einsum("ib,b->i", pdf, grid.probability, optimize=False)
    p_hat = grid.probability[idx] / grid.widths[0]
    fac = num / np.maximum(p_hat, floor)
    return np.clip(fac, FACTOR_MIN, FACTOR_MAX)


def _factors_chunk_2d(x, e, ix, ie, grid: HistogramGrid, kernel: BlurKernel2D, floor: float):
    vx = np.asarray(kernel.variance_x.evaluate(x, e), dtype=float)
    ve = np.asarray(kernel.variance_spread.evaluate(x, e), dtype=float)
    if np.any(vx < 0) or np.any(ve < 0):
        raise EngineError("negative blur variance encountered")
    degenerate = (vx <= _VAR_TINY) | (ve <= _VAR_TINY)
    vx = np.where(degenerate, 1.0, vx)
    ve = np.where(degenerate, 1.0, ve)
    pdf_x = _normal_pdf_grid(x, grid.centers(0), 0.0, vx)
    pdf_e = _normal_pdf_grid(e, grid.centers(1), 0.0, ve)
    num = np.einsum("ib,bc,ic->i", pdf_x, grid.probability, pdf_e, optimize=False)
    p_hat = grid.probability[ix, ie] / grid.cell_measure
    fac = num / np.maximum(p_hat, floor)
    fac = np.where(degenerate, 1.0, fac)
    return np.clip(fac, FACTOR_MIN, FACTOR_MAX)


def scaling_factors(ensemble: ParticleEnsemble, grid: HistogramGrid,
                    kernel, floor_mult: float = 1.0, threads: int = 1) -> np.ndarray:
    """Per-path variance scaling factors against the bucketed ensemble law.

    factor_i = sum_b P(b) * kernel(state_i - center_b) / max(p_hat(state_i), floor)
    with p_hat the path's own bucket density and
    floor = floor_mult * (1/n_paths) / cell_measure.  Factors are clamped to
    [0, 100].  The two-dimensional kernel is the product of the independent
    coordinate Gaussians with variances evaluated at the receiving path.
    """
    n = ensemble.n_paths
    floor = floor_mult * (1.0 / n) / grid.cell_measure
    out = np.empty(n)
    spans = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]

    if grid.ndim == 1:
        if not isinstance(kernel, BlurKernel1D):
            raise EngineError("one-dimensional grid requires a BlurKernel1D")
        ix = grid.indices[0]

        def work(span):
            a, b = span
            out[a:b] = _factors_chunk_1d(ensemble.x[a:b], ix[a:b], grid, kernel, floor)
    else:
        if not isinstance(kernel, BlurKernel2D):
            raise EngineError("two-dimensional grid requires a BlurKernel2D")
        ix, ie = grid.indices

        def work(span):
            a, b = span
            out[a:b] = _factors_chunk_2d(ensemble.x[a:b], ensemble.spread[a:b],
                                         ix[a:b], ie[a:b], grid, kernel, floor)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return out


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    returns: np.ndarray
    factors: np.ndarray


def make_kernel(config: ModelConfig):
    """Blur kernel implied by the configuration."""
    if config.model_kind is ModelKind.TRANSLATION_1D:
        return fit_translation_kernel(config.eps_transform, config.blur_mean_sign)
    mx = solve_rotation_moments(Variable.X, config.eps_transform, 2)
    me = solve_rotation_moments(Variable.SPREAD, config.eps_transform, 2)
    return fit_rotation_kernel(mx, me)


def _geometric_step(v: np.ndarray, gv: np.ndarray, dt: float, z: np.ndarray) -> np.ndarray:
    # exact step of the geometric diffusion dv = sqrt(g(v)) dW with g = c v^2:
    # the no-blur law must stay exactly lognormal (symmetric in log), which
    # the additive discretization does not give at day-sized steps
    v2 = v * v
    vol2 = np.divide(gv, v2, out=np.zeros_like(v2), where=v2 != 0.0)
    return v * np.exp(np.sqrt(vol2 * dt) * z - 0.5 * vol2 * dt)


def step(ensemble: ParticleEnsemble, grid: HistogramGrid | None, kernel,
         coeffs: CoefficientFunctions, config: ModelConfig,
         threads: int = 1) -> tuple:
    """Advance every path one step; returns (ensemble', StepRecord).

    A Dirac kernel routes to classical stepping (the exact geometric form,
    same arithmetic as classical_simulate).  Non-Dirac kernels take the
    additive interacting form x + sqrt(factor g dt) Z, whose density the
    truncated-equation oracle models; grid=None there is the first-step
    bootstrap with factor identically 1.
    """
    k = ensemble.step_index
    n = ensemble.n_paths
    x = ensemble.x
    e = ensemble.spread
    dirac = getattr(kernel, "is_dirac", True)

    if dirac or grid is None:
        factors = np.ones(n)
    else:
        factors = scaling_factors(ensemble, grid, kernel, config.density_floor_mult, threads)

    g1v = coeffs.g1(x, e)
    if g1v.min() < 0:
        raise EngineError("g1 evaluated negative on the ensemble")
    z1 = normal_stream(config.seed, k, 0, n)
    if dirac:
        x_new = _geometric_step(x, g1v, config.dt, z1)
    elif grid is None:
        x_new = x + np.sqrt(g1v * config.dt) * z1
    else:
        x_new = x + np.sqrt(factors * g1v * config.dt) * z1

    e_new = None
    if e is not None:
        g2v = coeffs.g2(x, e)
        if g2v.min() < 0:
            raise EngineError("g2 evaluated negative on the ensemble")
        z2 = normal_stream(config.seed, k, 1, n)
        if dirac:
            e_new = _geometric_step(e, g2v, config.dt, z2)
        elif grid is None:
            e_new = e + np.sqrt(g2v * config.dt) * z2
        else:
            e_new = e + np.sqrt(factors * g2v * config.dt) * z2

    r = (x_new - x) / x
    ens2 = ParticleEnsemble(x=x_new, spread=e_new,
                            returns=ensemble.returns + (r,), step_index=k + 1)
    return ens2, StepRecord(step_index=k, returns=r, factors=factors)


@dataclass(frozen=True)
class SimOutput:
    """Full record of one simulation run."""

    config: ModelConfig
    kernel: object
    ensemble: ParticleEnsemble
    records: tuple

    @property
    def x_final(self) -> np.ndarray:
        return self.ensemble.x

    @property
    def spread_final(self) -> np.ndarray | None:
        return self.ensemble.spread

    @property
    def returns_matrix(self) -> np.ndarray:
        return np.stack([r.returns for r in self.records])

    @property
    def factors_matrix(self) -> np.ndarray:
        return np.stack([r.factors for r in self.records])


def _initial_ensemble(config: ModelConfig) -> ParticleEnsemble:
    x = np.full(config.n_paths, float(config.x0))
    spread = None
    if config.model_kind is ModelKind.ROTATION_2D:
        spread = np.full(config.n_paths, float(config.spread0))
    return ParticleEnsemble(x=x, spread=spread)


def simulate(config: ModelConfig, threads: int = 1) -> SimOutput:
    """Run the interacting-particle method for the configured model.

    eps_transform = 0 yields a Dirac kernel; every step then takes the
    classical branch and the trajectory is bit-identical to
    classical_simulate under the same seed.
    """
    coeffs = eval_coefficients(config)
    kernel = make_kernel(config)
    ens = _initial_ensemble(config)
    records = []
    for k in range(config.n_steps):
        if kernel.is_dirac or ens.step_index == 0:
            grid = None
        else:
            grid = build_histogram(ens, config.n_buckets)
        ens, rec = step(ens, grid, kernel, coeffs, config, threads)
        records.append(rec)
    return SimOutput(config=config, kernel=kernel, ensemble=ens, records=tuple(records))


def classical_simulate(config: ModelConfig) -> SimOutput:
    """Geometric-diffusion engine with no interaction, as a direct reference.

    Steps in log space, so the terminal law is exactly lognormal at any
    step size; sharing streams and arithmetic with the Dirac branch of
    step() makes the eps_transform = 0 run of simulate bit-identical.
    """
    coeffs = eval_coefficients(config)
    ens = _initial_ensemble(config)
    records = []
    for k in range(config.n_steps):
        n = ens.n_paths
        x = ens.x
        e = ens.spread
        g1v = coeffs.g1(x, e)
        z1 = normal_stream(config.seed, k, 0, n)
        x_new = _geometric_step(x, g1v, config.dt, z1)
        e_new = None
        if e is not None:
            g2v = coeffs.g2(x, e)
            z2 = normal_stream(config.seed, k, 1, n)
            e_new = _geometric_step(e, g2v, config.dt, z2)
        r = (x_new - x) / x
        records.append(StepRecord(step_index=k, returns=r, factors=np.ones(n)))
        ens = ParticleEnsemble(x=x_new, spread=e_new,
                               returns=ens.returns + (r,), step_index=k + 1)
    return SimOutput(config=config, kernel=None, ensemble=ens, records=tuple(records))
