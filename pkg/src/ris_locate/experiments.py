"""Monte Carlo orchestration: seeded sweeps, RMSE summaries and PEB maps."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .aoa import AoaEstimate, SensingMatrix, build_dictionary, estimate_los
from .channel import generate_paths, observe
from .codebook import Codebook, dft_codebook, directive_subset, quantize
from .config import ExperimentConfig, validate
from .fisher import position_error_bound
from .fusion import LineBundle, ls_intersect, ml_refine
from .geometry import local_aoa

log = logging.getLogger(__name__)

CSV_HEADER = ["sweep_value", "trial", "x_true", "y_true", "z_true", "x_ls", "y_ls", "z_ls",
              "x_ml", "y_ml", "z_ml", "err_ls_m", "err_ml_m", "peb_m"]

THREADS_ENV = "RIS_LOCATE_THREADS"


@dataclass(frozen=True)
class TrialRecord:
    sweep_index: int
    sweep_value: float
    trial: int
    p_true: np.ndarray
    p_ls: np.ndarray
    p_ml: np.ndarray
    est_angles: np.ndarray   # (M, 2) azimuth, elevation
    true_angles: np.ndarray  # (M, 2)
    err_ls: float
    err_ml: float
    peb: float


@dataclass(frozen=True)
class SweepSummary:
    sweep_value: float
    trials: int
    rmse_ls: float
    rmse_ml: float
    peb: float


class _Point:
    """Everything fixed at one sweep value: scenario, RISs, dictionaries, fixed codebooks."""

    def __init__(self, cfg: ExperimentConfig, index: int):
        value = cfg.sweep_values[index]
        scenario, user, rows = cfg.scenario, np.array(cfg.user, dtype=float), None
        if cfg.sweep_axis == "power_dbm":
            scenario = replace(scenario, power_dbm=float(value))
        elif cfg.sweep_axis == "elements_L":
            rows = math.isqrt(int(value))
        else:
            user = np.array(value, dtype=float)
        self.index = index
        self.value = float(index if cfg.sweep_axis == "positions_grid" else value)
        self.scenario = scenario
        self.user = user
        self.noise = 0.0 if cfg.noise_free else scenario.noise_w
        self.s = scenario.pilot
        self.specs = cfg.ris
        self.ris = [sp.descriptor(scenario.wavelength, rows, rows) for sp in cfg.ris]
        est = cfg.estimator
        self.dicts = []
        self.fixed = []
        for sp, ris in zip(cfg.ris, self.ris):
            d = _dictionary(ris.rows, ris.cols, ris.wavelength, ris.element_spacing,
                            est.azimuth_range, est.elevation_range,
                            est.azimuth_resolution, est.elevation_resolution)
            self.dicts.append(d)
            if sp.codebook == "directive" or sp.random_columns:
                self.fixed.append(None)
            else:
                cb = _finish(dft_codebook(ris.num_elements, sp.profiles_for(ris.num_elements)), sp)
                self.fixed.append((cb, SensingMatrix.build(cb, d)))
        self.true_angles = np.array([[a.azimuth, a.elevation]
                                     for a in (local_aoa(r, user) for r in self.ris)])
        self._peb = None
        if all(f is not None for f in self.fixed):
            self._peb = self.peb([f[0] for f in self.fixed])

    def codebooks(self, rng):
        out = []
        for sp, ris, d, fixed, ang in zip(self.specs, self.ris, self.dicts, self.fixed, self.true_angles):
            if fixed is not None:
                out.append(fixed)
                continue
            L = ris.num_elements
            T = sp.profiles_for(L)
            if sp.codebook == "directive":
                cb = directive_subset(ris, T, local_aoa(ris, self.user), sp.uncertainty, rng)
            else:
                cb = dft_codebook(L, T, rng=rng)
            cb = _finish(cb, sp)
            out.append((cb, SensingMatrix.build(cb, d)))
        return out

    def peb(self, codebooks) -> float:
        try:
            return position_error_bound(self.user, self.ris, codebooks,
                                        self.scenario.power_w, self.scenario.noise_w)
        except (np.linalg.LinAlgError, ValueError):
            return float("nan")


def _finish(cb: Codebook, spec) -> Codebook:
    return quantize(cb, spec.bits) if spec.bits else cb


@lru_cache(maxsize=16)
def _dictionary(rows, cols, wavelength, spacing, az_range, el_range, az_res, el_res):
    # dictionaries only depend on the local array, so RISs of equal shape share one
    from .geometry import RisDescriptor

    ris = RisDescriptor(np.zeros(3), 0.0, rows, cols, wavelength, spacing)
    return build_dictionary(ris, az_range, el_range, az_res, el_res)


def trial_seed(master: int, sweep_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, int(sweep_index), int(trial)])


def run_trial(cfg: ExperimentConfig, point: _Point, trial: int) -> TrialRecord:
    rng = np.random.default_rng(trial_seed(cfg.seed, point.index, trial))
    books = point.codebooks(rng)
    est_cfg = cfg.estimator
    estimates = []
    for m, (ris, d, (cb, sensing)) in enumerate(zip(point.ris, point.dicts, books)):
        paths = generate_paths(point.scenario, ris, point.user, rng, ris_index=m)
        y = observe(paths, ris, cb, point.s, point.noise, rng, point.scenario.field_model)
        est = estimate_los(y, cb, d, ris, point.s, point.noise, est_cfg.sparsity, sensing)
        if est_cfg.covariance == "isotropic":
            est = AoaEstimate(est.aoa, np.eye(2) * est_cfg.isotropic_std**2, m, est.gain)
        estimates.append(est)
    ls = ls_intersect(LineBundle.from_estimates(estimates, point.ris))
    try:
        ml = ml_refine(estimates, point.ris, ls.position, est_cfg.ml_max_iters, est_cfg.ml_tol,
                       bounds=(np.zeros(3), np.array(point.scenario.room)))
        p_ml = ml.position
    except ValueError:
        p_ml = ls.position
    peb = point._peb if point._peb is not None else point.peb([b[0] for b in books])
    return TrialRecord(
        point.index, point.value, trial, point.user.copy(), ls.position, p_ml,
        np.array([[e.aoa.azimuth, e.aoa.elevation] for e in estimates]), point.true_angles,
        float(np.linalg.norm(ls.position - point.user)), float(np.linalg.norm(p_ml - point.user)), peb,
    )


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> list:
    """All trials of all sweep points, ordered by (sweep index, trial).

    Each trial draws from its own generator seeded by (seed, sweep index,
    trial), so the result does not depend on the thread count.
    """
    validate(cfg)
    threads = resolve_threads(threads)
    records = []
    for i in range(len(cfg.sweep_values)):
        point = _Point(cfg, i)
        if threads == 1:
            recs = [run_trial(cfg, point, t) for t in range(cfg.trials)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                recs = list(pool.map(lambda t: run_trial(cfg, point, t), range(cfg.trials)))
        records.extend(sorted(recs, key=lambda r: r.trial))
        log.info("sweep value %s: %d trials", point.value, cfg.trials)
    return records


def rmse(errors) -> float:
    e = np.asarray(errors, dtype=float)
    return float(np.sqrt(np.mean(e**2)))


def summarize(records) -> list:
    groups: dict = {}
    for r in records:
        groups.setdefault(r.sweep_index, []).append(r)
    out = []
    for _, recs in sorted(groups.items()):
        out.append(SweepSummary(recs[0].sweep_value, len(recs),
                                rmse([r.err_ls for r in recs]), rmse([r.err_ml for r in recs]),
                                float(np.nanmean([r.peb for r in recs]))))
    return out


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([repr(r.sweep_value), r.trial, *map(repr, map(float, r.p_true)),
                        *map(repr, map(float, r.p_ls)), *map(repr, map(float, r.p_ml)),
                        repr(r.err_ls), repr(r.err_ml), repr(r.peb)])


@dataclass(frozen=True)
class PebMap:
    points: np.ndarray   # (N, 3)
    values: np.ndarray   # (N,) PEB in meters, same order as points
    sorted_values: np.ndarray
    cdf: np.ndarray

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))

    def rows(self):
        return [(*p, v) for p, v in zip(self.points, self.values)]


def peb_map(cfg: ExperimentConfig, z: float, step: float, exclusion: float = 0.1) -> PebMap:
    """PEB over a horizontal grid at height ``z`` and its empirical CDF.

    Grid points sit at cell centers so none lie on a wall. Points within
    ``exclusion`` meters of a RIS, behind one, or where a bound is undefined
    are skipped.
    """
    if not step > 0:
        raise ValueError("grid step must be positive")
    sc = cfg.scenario
    ris = [sp.descriptor(sc.wavelength) for sp in cfg.ris]
    books = []
    for sp, r in zip(cfg.ris, ris):
        if sp.codebook == "directive":
            raise ValueError("peb_map needs position-independent codebooks")
        books.append(_finish(dft_codebook(r.num_elements, sp.profiles_for(r.num_elements)), sp))
    xs = np.arange(step / 2, sc.room[0], step)
    ys = np.arange(step / 2, sc.room[1], step)
    pts, vals = [], []
    for x in xs:
        for y in ys:
            p = np.array([x, y, z])
            if any(np.linalg.norm(p - r.position) < exclusion or not r.in_front(p) for r in ris):
                continue
            try:
                v = position_error_bound(p, ris, books, sc.power_w, sc.noise_w)
            except (np.linalg.LinAlgError, ValueError):
                continue
            pts.append(p)
            vals.append(v)
    values = np.array(vals)
    srt = np.sort(values)
    cdf = np.arange(1, len(srt) + 1) / max(len(srt), 1)
    return PebMap(np.array(pts).reshape(-1, 3), values, srt, cdf)
