"""Run statistics and file emission.

All numeric CSV fields are written with 17 significant digits so every
float round-trips exactly; given identical inputs the emitted bytes are
identical, whatever thread count produced the run.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blur import BlurKernel1D, BlurKernel2D
from .engine import SimOutput


class ReportError(RuntimeError):
    pass


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass(frozen=True)
class ScatterData:
    """First- and second-step proportional returns per path."""

    path_id: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


@dataclass(frozen=True)
class VolProfile:
    """Second-step return dispersion conditional on first-step return bins."""

    bin_lo: np.ndarray
    bin_hi: np.ndarray
    count: np.ndarray
    r2_std: np.ndarray
    stderr: np.ndarray


@dataclass(frozen=True)
class DistributionSummary:
    n_paths: int
    n_excluded: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    mean_se: float
    variance_se: float
    skewness_se: float
    kurtosis_se: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray


def step_scatter(sim: SimOutput) -> ScatterData:
    """Pair each path's first two proportional returns."""
    if len(sim.records) < 2:
        raise ReportError("step_scatter needs a run with at least two steps")
    r1 = sim.records[0].returns
    r2 = sim.records[1].returns
    return ScatterData(path_id=np.arange(len(r1)), r1=r1, r2=r2)


def conditional_vol_profile(scatter: ScatterData, n_bins: int = 10) -> VolProfile:
    """Equal-count bins over r1; per-bin sample std of r2.

    The std standard error uses the normal-theory approximation
    std / sqrt(2 count).
    """
    n = len(scatter.r1)
    if n_bins < 3:
        raise ReportError("conditional_vol_profile needs n_bins >= 3")
    if n < 2 * n_bins:
        raise ReportError("need at least two paths per bin")
    order = np.argsort(scatter.r1, kind="stable")
    splits = np.array_split(order, n_bins)
    lo, hi, cnt, std, se = [], [], [], [], []
    for part in splits:
        r1p = scatter.r1[part]
        r2p = scatter.r2[part]
        m = len(part)
        s = float(np.std(r2p, ddof=1))
        lo.append(float(r1p.min()))
        hi.append(float(r1p.max()))
        cnt.append(m)
        std.append(s)
        se.append(s / math.sqrt(2.0 * m))
    return VolProfile(bin_lo=np.array(lo), bin_hi=np.array(hi),
                      count=np.array(cnt), r2_std=np.array(std), stderr=np.array(se))


def final_distribution(sim: SimOutput) -> DistributionSummary:
    """Moments of log final mid-price, plus a histogram of the log prices.

    Paths with non-positive final price are excluded and counted; more than
    1% of them is a hard error.
    """
    x = sim.x_final
    n_total = len(x)
    good = x > 0.0
    n_excluded = int(n_total - good.sum())
    if n_excluded > 0.01 * n_total:
        raise ReportError(
            f"{n_excluded} of {n_total} paths ended non-positive (> 1%); "
            "log-price statistics are not meaningful")
    lx = np.log(x[good])
    n = len(lx)
    if n < 4:
        raise ReportError("too few surviving paths for moment statistics")
    mean = float(lx.mean())
    d = lx - mean
    m2 = float(np.mean(d * d))
    m3 = float(np.mean(d * d * d))
    m4 = float(np.mean(d * d * d * d))
    var = float(lx.var(ddof=1))
    skew = m3 / m2 ** 1.5
    kurt = m4 / (m2 * m2) - 3.0
    edges, counts = _log_histogram(lx, sim.config.n_buckets)
    return DistributionSummary(
        n_paths=n, n_excluded=n_excluded, mean=mean, variance=var,
        skewness=skew, excess_kurtosis=kurt,
        mean_se=math.sqrt(var / n),
        variance_se=var * math.sqrt(2.0 / (n - 1)),
        skewness_se=math.sqrt(6.0 / n),
        kurtosis_se=math.sqrt(24.0 / n),
        hist_edges=edges, hist_counts=counts)


def _log_histogram(lx: np.ndarray, n_buckets: int):
    lo0 = float(lx.min())
    hi0 = float(lx.max())
    if hi0 > lo0:
        pad = (hi0 - lo0) / n_buckets
        lo = lo0 - pad
        width = (hi0 - lo0 + 2.0 * pad) / n_buckets
    else:
        half = 0.5e-12 * max(abs(lo0), 1.0)
        lo = lo0 - half
        width = 2.0 * half / n_buckets
    idx = np.floor((lx - lo) / width).astype(np.int64)
    np.clip(idx, 0, n_buckets - 1, out=idx)
    counts = np.bincount(idx, minlength=n_buckets)
    edges = lo + np.arange(n_buckets + 1) * width
    return edges, counts


def kernel_parameters(kernel) -> dict:
    """JSON-ready echo of the fitted kernel (or the classical no-blur case)."""
    if isinstance(kernel, BlurKernel1D):
        return {"kind": "normal_1d", "mean": kernel.mean, "variance": kernel.variance,
                "eps_transform": kernel.eps_transform}
    if isinstance(kernel, BlurKernel2D):
        return {"kind": "product_normal_2d",
                "variance_x": kernel.variance_x.to_text(),
                "variance_spread": kernel.variance_spread.to_text(),
                "eps_transform": kernel.eps_transform}
    return {"kind": "classical"}


def run_id(config) -> str:
    """Forty-hex-digit id derived from the configuration (stable across runs)."""
    blob = json.dumps(config.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:40]


def emit(sim: SimOutput, out_dir: str | Path, versions: dict | None = None) -> dict:
    """Write the run artifact tree; returns {name: path}.

    Files: scatter.csv (path_id,r1,r2), profile.csv
    (bin_lo,bin_hi,count,r2_std,stderr), hist.csv
    (bucket_left,bucket_right,count,probability), summary.json,
    manifest.json.  Writing twice from the same run produces byte-identical
    files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = sim.config
    written = {}

    def write_text(name: str, text: str):
        path = out / name
        path.write_text(text, encoding="utf-8", newline="")
        written[name] = path

    lines = ["path_id,r1,r2"]
    if len(sim.records) >= 2:
        sc = step_scatter(sim)
        for i in range(len(sc.path_id)):
            lines.append(f"{sc.path_id[i]},{_fmt(sc.r1[i])},{_fmt(sc.r2[i])}")
        profile = conditional_vol_profile(sc, 10)
    else:
        sc = None
        profile = None
    write_text("scatter.csv", "\n".join(lines) + "\n")

    lines = ["bin_lo,bin_hi,count,r2_std,stderr"]
    if profile is not None:
        for i in range(len(profile.count)):
            lines.append(",".join([_fmt(profile.bin_lo[i]), _fmt(profile.bin_hi[i]),
                                   str(int(profile.count[i])), _fmt(profile.r2_std[i]),
                                   _fmt(profile.stderr[i])]))
    write_text("profile.csv", "\n".join(lines) + "\n")

    summary = final_distribution(sim)
    edges, counts = summary.hist_edges, summary.hist_counts
    n = summary.n_paths
    lines = ["bucket_left,bucket_right,count,probability"]
    for i in range(len(counts)):
        lines.append(",".join([_fmt(edges[i]), _fmt(edges[i + 1]),
                               str(int(counts[i])), _fmt(counts[i] / n)]))
    write_text("hist.csv", "\n".join(lines) + "\n")

    rid = run_id(cfg)
    summary_doc = {
        "run_id": rid,
        "config": cfg.as_dict(),
        "kernel": kernel_parameters(sim.kernel),
        "log_price": {
            "n_paths": summary.n_paths,
            "n_excluded": summary.n_excluded,
            "mean": summary.mean,
            "variance": summary.variance,
            "skewness": summary.skewness,
            "excess_kurtosis": summary.excess_kurtosis,
            "mean_se": summary.mean_se,
            "variance_se": summary.variance_se,
            "skewness_se": summary.skewness_se,
            "kurtosis_se": summary.kurtosis_se,
        },
        "martingale": {
            "x0": cfg.x0,
            "x_final_mean": float(sim.x_final.mean()),
            "x_final_se": float(sim.x_final.std(ddof=1) / math.sqrt(len(sim.x_final))),
        },
    }
    write_text("summary.json", json.dumps(summary_doc, indent=2) + "\n")

    config_hash = hashlib.sha256(
        json.dumps(cfg.as_dict(), sort_keys=True).encode()).hexdigest()
    manifest = {
        "run_id": rid,
        "config_hash": config_hash,
        "seed": cfg.seed,
        "versions": versions or {},
    }
    write_text("manifest.json", json.dumps(manifest, indent=2) + "\n")
    return written
