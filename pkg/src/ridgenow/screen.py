"""Targeted preselection of candidate predictors.

Each candidate is judged by the t-statistic of its coefficient in an OLS
regression of the target on the official variables plus that one candidate
(never all candidates at once). Candidates whose |t| strictly exceeds a
threshold are kept; the threshold is either given directly or derived from a
tolerated false-positive rate tau as the (1 - tau) standard normal quantile.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InsufficientSampleError, SingularDesignError

log = logging.getLogger(__name__)

# Gram matrices with condition number beyond this are treated as singular.
CONDITION_LIMIT = 1e12

# Relative residual sum of squares below which a fit counts as exact.
_PERFECT_FIT_RTOL = 1e-24


@dataclass(frozen=True)
class ScreenConfig:
    """Exactly one of ``tau`` (false-positive rate) or ``threshold`` is set."""

    tau: float | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        if (self.tau is None) == (self.threshold is None):
            raise ValueError("set exactly one of tau or threshold")
        if self.tau is not None and not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.threshold is not None and self.threshold <= 0.0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")

    def resolved_threshold(self) -> float:
        if self.threshold is not None:
            return float(self.threshold)
        return float(stats.norm.ppf(1.0 - self.tau))


@dataclass(frozen=True)
class ScreenResult:
    """t-statistics per candidate, the threshold used, and the kept index set.

    ``selected`` holds 0-based candidate indices, ascending. ``skipped`` lists
    candidates dropped for numerical reasons; their tstats entry is NaN.
    """

    tstats: np.ndarray
    threshold: float
    selected: np.ndarray
    skipped: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tstats", np.asarray(self.tstats, dtype=float))
        object.__setattr__(self, "selected", np.asarray(self.selected, dtype=int))


def _gram_usable(grams: np.ndarray) -> np.ndarray:
    """Condition-number guard on a stack of Gram matrices.

    Columns are rescaled to unit norm first so the guard measures angular
    degeneracy only; selection must be invariant to column units.
    """
    diag = np.einsum("kii->ki", grams)
    bad = (diag <= 0.0).any(axis=1) | ~np.isfinite(grams).all(axis=(1, 2))
    safe_diag = np.where(diag > 0.0, diag, 1.0)
    inv_scale = 1.0 / np.sqrt(safe_diag)
    scaled = grams * inv_scale[:, :, None] * inv_scale[:, None, :]
    scaled[bad] = np.eye(grams.shape[-1])
    eigs = np.linalg.eigvalsh(scaled)
    return ~bad & (eigs[:, 0] > 0.0) & (eigs[:, -1] <= CONDITION_LIMIT * eigs[:, 0])


def tstat_single(y: np.ndarray, officials: np.ndarray, candidate: np.ndarray) -> float:
    """t-statistic of ``candidate`` in OLS of y on [officials | candidate].

    Standard errors are homoskedastic with residual variance RSS/(T - N1 - 1),
    where N1 counts the official columns (intercept included). An exact fit
    returns a signed infinity.
    """
    y = np.asarray(y, dtype=float).ravel()
    officials = np.atleast_2d(np.asarray(officials, dtype=float))
    candidate = np.asarray(candidate, dtype=float).ravel()
    t_obs, n_official = officials.shape
    if y.shape[0] != t_obs or candidate.shape[0] != t_obs:
        raise ValueError("y, officials and candidate must share the sample length")
    if t_obs <= n_official + 1:
        raise InsufficientSampleError(
            f"need T > {n_official + 1} observations, got {t_obs}"
        )

    design = np.column_stack([officials, candidate])
    gram = design.T @ design
    if not _gram_usable(gram[None])[0]:
        raise SingularDesignError(
            f"design Gram condition number exceeds {CONDITION_LIMIT:.0e}"
        )

    coefs = np.linalg.solve(gram, design.T @ y)
    resid = y - design @ coefs
    rss = float(resid @ resid)
    dof = t_obs - n_official - 1
    unit = np.zeros(n_official + 1)
    unit[-1] = 1.0
    gram_inv_last = float(np.linalg.solve(gram, unit)[-1])

    yss = float(y @ y)
    if rss <= _PERFECT_FIT_RTOL * max(yss, np.finfo(float).tiny):
        beta = coefs[-1]
        return math.copysign(math.inf, beta) if beta != 0.0 else 0.0
    return float(coefs[-1] / math.sqrt(rss / dof * gram_inv_last))


def candidate_tstats(
    y: np.ndarray, officials: np.ndarray, candidates: np.ndarray
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Per-candidate t-statistics for every column of ``candidates`` at once.

    Equivalent to calling :func:`tstat_single` per column (the official block
    is residualised once and reused). Numerically unusable candidates are
    reported in the second return value with a NaN statistic.
    """
    y = np.asarray(y, dtype=float).ravel()
    officials = np.atleast_2d(np.asarray(officials, dtype=float))
    candidates = np.asarray(candidates, dtype=float)
    if candidates.ndim == 1:
        candidates = candidates[:, None]
    t_obs, n_official = officials.shape
    n_candidates = candidates.shape[1]
    if t_obs <= n_official + 1:
        raise InsufficientSampleError(
            f"need T > {n_official + 1} observations, got {t_obs}"
        )
    if n_candidates == 0:
        return np.empty(0), ()

    gram_official = officials.T @ officials
    if not _gram_usable(gram_official[None])[0]:
        raise SingularDesignError("official block is rank deficient")

    # stacked (N1+1)x(N1+1) Grams, one per candidate, for the condition guard
    cross = officials.T @ candidates
    col_ss = np.einsum("ij,ij->j", candidates, candidates)
    grams = np.empty((n_candidates, n_official + 1, n_official + 1))
    grams[:, :n_official, :n_official] = gram_official
    grams[:, :n_official, -1] = cross.T
    grams[:, -1, :n_official] = cross.T
    grams[:, -1, -1] = col_ss
    usable = _gram_usable(grams)
    usable &= np.all(np.isfinite(candidates), axis=0)

    # residualise against the officials (Frisch-Waugh)
    q, _ = np.linalg.qr(officials)
    resid_y = y - q @ (q.T @ y)
    resid_c = candidates - q @ (q.T @ candidates)

    dof = t_obs - n_official - 1
    denom = np.einsum("ij,ij->j", resid_c, resid_c)
    inner = resid_c.T @ resid_y
    yss = float(y @ y)
    perfect_scale = _PERFECT_FIT_RTOL * max(yss, np.finfo(float).tiny)

    tstats = np.full(n_candidates, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        rss = float(resid_y @ resid_y) - inner**2 / denom
        rss = np.clip(rss, 0.0, None)
        scale = np.sqrt(rss / dof * denom)
        raw = np.where(scale > 0.0, inner / np.where(scale > 0.0, scale, 1.0), np.nan)
    for j in range(n_candidates):
        if not usable[j]:
            continue
        if rss[j] <= perfect_scale:
            beta = inner[j] / denom[j] if denom[j] > 0.0 else 0.0
            tstats[j] = math.copysign(math.inf, beta) if beta != 0.0 else 0.0
        else:
            tstats[j] = raw[j]
    skipped = tuple(int(j) for j in np.nonzero(~usable)[0])
    if skipped:
        log.warning("screening skipped %d ill-conditioned candidate(s): %s", len(skipped), skipped)
    return tstats, skipped


def screen(
    y: np.ndarray,
    officials: np.ndarray,
    candidates: np.ndarray,
    cfg: ScreenConfig,
) -> ScreenResult:
    """Threshold per-candidate |t| statistics at the configured level.

    Selection uses a strict inequality, so ties at the threshold are dropped.
    Candidates skipped for rank problems are reported, not fatal.
    """
    threshold = cfg.resolved_threshold()
    tstats, skipped = candidate_tstats(y, officials, candidates)
    with np.errstate(invalid="ignore"):
        keep = np.abs(tstats) > threshold
    selected = np.nonzero(keep)[0]
    return ScreenResult(tstats=tstats, threshold=threshold, selected=selected, skipped=skipped)
