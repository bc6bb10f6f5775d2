"""Ridge estimation with a GCV-chosen penalty.

The estimator minimises (1/T)||y - X b||^2 + alpha ||b||^2, whose unique
solution is b(alpha) = (X'X/T + alpha I)^{-1} X'y/T. The penalty covers every
coefficient, intercept included; an opt-out flag exists on the pipeline entry
points. GCV(alpha) = RSS / [T (1 - tr(H_alpha)/T)^2] with H_alpha the ridge
influence matrix; the trace is taken from the singular values of the design so
a whole penalty grid costs one decomposition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import NumericalBreakdownError
from .screen import ScreenConfig, ScreenResult, screen

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlphaGrid:
    """Strictly increasing positive penalty grid searched by GCV."""

    lo: float = 1e-6
    hi: float = 1e2
    count: int = 100
    spacing: str = "log"

    def __post_init__(self) -> None:
        if self.lo <= 0.0:
            raise ValueError("grid lower bound must be positive")
        if self.hi <= self.lo:
            raise ValueError("grid upper bound must exceed the lower bound")
        if self.count < 2:
            raise ValueError("grid needs at least two points")
        if self.spacing not in ("log", "linear"):
            raise ValueError(f"unknown spacing {self.spacing!r}")

    def points(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(np.log10(self.lo), np.log10(self.hi), self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class RidgeFit:
    """Fitted coefficients with the GCV search trace.

    ``coefficients`` spans the full column set of the originating problem and
    is zero outside ``selected``. ``gcv_path`` pairs every grid alpha with its
    criterion value; ``gcv_value`` is the attained minimum.
    """

    coefficients: np.ndarray
    alpha: float
    gcv_value: float
    gcv_path: tuple[tuple[float, float], ...]
    selected: np.ndarray
    meta: Mapping[str, object] = field(default_factory=dict)

    def predict(self, design: np.ndarray) -> np.ndarray:
        return np.asarray(design, dtype=float) @ self.coefficients


class RidgeProblem:
    """One SVD of a design, shared across all penalty evaluations."""

    def __init__(self, design: np.ndarray, y: np.ndarray):
        design = np.atleast_2d(np.asarray(design, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if design.shape[0] != y.shape[0]:
            raise ValueError("design and target lengths differ")
        if design.shape[0] < 1 or design.shape[1] < 1:
            raise ValueError("design must have at least one row and one column")
        self.n_obs, self.n_cols = design.shape
        u, sing, vt = np.linalg.svd(design, full_matrices=False)
        self._v = vt.T
        self._uty = u.T @ y
        self._sing = sing
        self._eigs = sing**2 / self.n_obs  # eigenvalues of X'X/T
        # residual energy orthogonal to the column space, formed as a vector
        # difference so small residuals are not lost to cancellation
        perp = y - u @ self._uty
        self._perp_ss = float(perp @ perp)

    def solve(self, alpha: float) -> np.ndarray:
        _check_alpha(alpha)
        factors = (self._sing / self.n_obs) / (self._eigs + alpha)
        return self._v @ (factors * self._uty)

    def trace(self, alpha: float) -> float:
        _check_alpha(alpha)
        return float(np.sum(self._eigs / (self._eigs + alpha)))

    def rss(self, alpha: float) -> float:
        _check_alpha(alpha)
        keep = alpha / (self._eigs + alpha)
        return self._perp_ss + float((keep * self._uty) @ (keep * self._uty))

    def gcv(self, alpha: float) -> float:
        margin = 1.0 - self.trace(alpha) / self.n_obs
        if margin <= 0.0:
            raise NumericalBreakdownError(
                f"effective degrees of freedom reached T at alpha={alpha:g}"
            )
        return self.rss(alpha) / (self.n_obs * margin**2)


def ridge_solve(design: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """Closed-form ridge coefficients; valid for any p, including p > T."""
    return RidgeProblem(design, y).solve(alpha)


def gcv(design: np.ndarray, y: np.ndarray, alpha: float) -> float:
    return RidgeProblem(design, y).gcv(alpha)


def gcv_minimize(
    design: np.ndarray,
    y: np.ndarray,
    grid: AlphaGrid,
    *,
    problem: RidgeProblem | None = None,
) -> RidgeFit:
    """Evaluate GCV on the whole grid and fit at its arg-min.

    Ties are broken toward the larger alpha (more regularisation).
    """
    problem = problem if problem is not None else RidgeProblem(design, y)
    path: list[tuple[float, float]] = []
    best_alpha, best_value = None, np.inf
    for alpha in grid.points():
        try:
            value = problem.gcv(alpha)
        except NumericalBreakdownError as exc:
            raise NumericalBreakdownError(f"{exc} (alpha={alpha:g})") from exc
        path.append((float(alpha), float(value)))
        if value <= best_value:
            best_alpha, best_value = float(alpha), float(value)
    coefs = problem.solve(best_alpha)
    return RidgeFit(
        coefficients=coefs,
        alpha=best_alpha,
        gcv_value=best_value,
        gcv_path=tuple(path),
        selected=np.arange(problem.n_cols),
    )


def _check_alpha(alpha: float) -> None:
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise ValueError(f"penalty must be a positive real, got {alpha!r}")


# ---------------------------------------------------------------------------
# standardised pipeline used by the selection estimator, bridge and MC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Scaler:
    means: np.ndarray
    scales: np.ndarray
    adjusted: np.ndarray  # boolean mask of standardised columns
    center: bool


def _fit_scaler(design: np.ndarray, standardize: bool) -> _Scaler:
    p = design.shape[1]
    means = design.mean(axis=0) if design.size else np.zeros(p)
    stds = design.std(axis=0) if design.size else np.zeros(p)
    adjusted = (stds > 0.0) & np.full(p, standardize)
    # without a nonzero constant column there is nothing to absorb centering into
    center = bool(np.any((stds == 0.0) & (design[0] != 0.0))) if design.size else False
    scales = np.where(adjusted, stds, 1.0)
    means = np.where(adjusted, means, 0.0) if center else np.zeros(p)
    return _Scaler(means=means, scales=scales, adjusted=adjusted, center=center)


def _apply_scaler(design: np.ndarray, scaler: _Scaler) -> np.ndarray:
    return (design - scaler.means) / scaler.scales


def _original_scale(coefs: np.ndarray, scaler: _Scaler, design: np.ndarray) -> np.ndarray:
    out = coefs / scaler.scales
    if scaler.center:
        shift = float(np.sum(coefs * scaler.means / scaler.scales))
        if shift != 0.0:
            const = _constant_column(design)
            # absorb the centering offset into the constant column
            out[const] += -shift / design[0, const]
    return out


def _constant_column(design: np.ndarray) -> int:
    stds = design.std(axis=0)
    zeros = np.nonzero(stds == 0.0)[0]
    for j in zeros:
        if design[0, j] != 0.0:
            return int(j)
    raise ValueError("no usable constant column in design")


def fit_gcv_pipeline(
    design: np.ndarray,
    y: np.ndarray,
    grid: AlphaGrid,
    *,
    standardize: bool = True,
    penalize_intercept: bool = True,
) -> RidgeFit:
    """Standardise, search the penalty grid by GCV, and map coefficients back.

    Non-constant columns are scaled to unit variance (and centered when a
    constant column exists to absorb the offset); returned coefficients apply
    to the design as given. With ``penalize_intercept=False`` the problem is
    demeaned and the constant coefficient recovered without shrinkage.
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    scaler = _fit_scaler(design, standardize)
    work = _apply_scaler(design, scaler)

    if penalize_intercept:
        fit = gcv_minimize(work, y, grid)
        coefs = _original_scale(np.array(fit.coefficients), scaler, design)
        meta = {"standardized": standardize, "penalize_intercept": True}
        return RidgeFit(coefs, fit.alpha, fit.gcv_value, fit.gcv_path, fit.selected, meta)

    const = _constant_column(design)
    keep = [j for j in range(design.shape[1]) if j != const]
    if not keep:
        coefs = np.zeros(design.shape[1])
        coefs[const] = float(y.mean()) / design[0, const]
        margin = 1.0 - 1.0 / len(y)
        if margin <= 0.0:
            raise NumericalBreakdownError("one observation cannot carry a free intercept")
        value = float(np.var(y)) / margin**2
        alphas = grid.points()
        path = tuple((float(a), value) for a in alphas)
        meta = {"standardized": standardize, "penalize_intercept": False}
        return RidgeFit(coefs, float(alphas[-1]), value, path, np.array([const]), meta)
    sub = work[:, keep] - work[:, keep].mean(axis=0)
    y_mean = float(y.mean())
    problem = RidgeProblem(sub, y - y_mean)
    best_alpha, best_value = None, np.inf
    path: list[tuple[float, float]] = []
    for alpha in grid.points():
        # unpenalised intercept contributes one effective degree of freedom
        margin = 1.0 - (problem.trace(alpha) + 1.0) / problem.n_obs
        if margin <= 0.0:
            raise NumericalBreakdownError(
                f"effective degrees of freedom reached T at alpha={alpha:g}"
            )
        value = problem.rss(alpha) / (problem.n_obs * margin**2)
        path.append((float(alpha), float(value)))
        if value <= best_value:
            best_alpha, best_value = float(alpha), float(value)
    slope_std = problem.solve(best_alpha)
    coefs_work = np.zeros(design.shape[1])
    coefs_work[keep] = slope_std
    intercept_work = y_mean - float(work[:, keep].mean(axis=0) @ slope_std)
    coefs_work[const] = intercept_work / work[0, const]
    coefs = _original_scale(coefs_work, scaler, design)
    meta = {"standardized": standardize, "penalize_intercept": False}
    return RidgeFit(
        coefs, best_alpha, best_value, tuple(path), np.arange(design.shape[1]), meta
    )


def ridge_after_selection(
    y: np.ndarray,
    officials: np.ndarray,
    candidates: np.ndarray,
    screen_cfg: ScreenConfig,
    grid: AlphaGrid,
    *,
    standardize: bool = True,
    penalize_intercept: bool = True,
) -> RidgeFit:
    """Screen the candidates, then ridge the officials plus the survivors.

    Returns coefficients over the full [officials | candidates] column order,
    zero outside the evaluated set. Officials are always kept. An empty
    selection falls back to the officials alone (logged, not an error).
    """
    y = np.asarray(y, dtype=float).ravel()
    officials = np.atleast_2d(np.asarray(officials, dtype=float))
    candidates = np.asarray(candidates, dtype=float)
    if candidates.ndim == 1:
        candidates = candidates[:, None]
    if candidates.size == 0:
        candidates = candidates.reshape(len(y), 0)
    n_official = officials.shape[1]
    n_candidates = candidates.shape[1]

    if n_candidates > 0:
        result = screen(y, officials, candidates, screen_cfg)
        picked = result.selected
    else:
        result = ScreenResult(np.empty(0), screen_cfg.resolved_threshold(), np.empty(0, int))
        picked = result.selected
    if picked.size == 0 and n_candidates > 0:
        log.info("screening kept no candidates; fitting officials only")

    design = np.column_stack([officials, candidates[:, picked]]) if picked.size else officials
    fit = fit_gcv_pipeline(
        design, y, grid, standardize=standardize, penalize_intercept=penalize_intercept
    )

    full = np.zeros(n_official + n_candidates)
    full[:n_official] = fit.coefficients[:n_official]
    full[n_official + picked] = fit.coefficients[n_official:]
    selected = np.concatenate([np.arange(n_official), n_official + picked])
    meta = dict(fit.meta)
    meta.update(
        {
            "screen_threshold": result.threshold,
            "n_candidates": n_candidates,
            "n_selected_candidates": int(picked.size),
            "skipped_candidates": result.skipped,
        }
    )
    return RidgeFit(full, fit.alpha, fit.gcv_value, fit.gcv_path, selected, meta)


# ---------------------------------------------------------------------------
# support diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportDiagnostics:
    """Extremal eigenvalues of the selected-support Gram matrix X'X/T."""

    kappa0_sq: float
    phi0: float
    condition_number: float


def restricted_eigenvalues(design: np.ndarray, selected: np.ndarray) -> SupportDiagnostics:
    design = np.atleast_2d(np.asarray(design, dtype=float))
    sub = design[:, np.asarray(selected, dtype=int)]
    gram = sub.T @ sub / sub.shape[0]
    eigs = np.linalg.eigvalsh(gram)
    lo, hi = float(eigs[0]), float(eigs[-1])
    mu = float(np.sqrt(hi / lo)) if lo > 0.0 else np.inf
    return SupportDiagnostics(kappa0_sq=lo, phi0=hi, condition_number=mu)
