"""Shot-noise estimation and the two-curve linearity gate.

Per (attenuation, quadrature) group, Bob's samples ``y`` are split into a part
proportional to Alice's symbols ``x`` and an orthogonal remainder. Across
groups, noise variance must be affine in signal variance and signal variance
affine in the attenuation ratio; the intercept of the first fit is the shot
noise. All variances use the ``1/N`` (population) convention after
mean-centering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

NOISE_FIT_R2 = "NOISE_FIT_R2"
RESIDUAL_BUDGET = "RESIDUAL_BUDGET"
ATTEN_FIT_R2 = "ATTEN_FIT_R2"
FIT_DEGENERATE = "FIT_DEGENERATE"
SHOT_NONPOSITIVE = "SHOT_NONPOSITIVE"

R2_MIN = 0.99
RESIDUAL_MAX_SNU = 2e-4


class EstimatorError(ValueError):
    code = "ESTIMATOR"


class VarianceZeroError(EstimatorError):
    code = "VAR_ZERO"


class DegenerateFitError(EstimatorError):
    code = FIT_DEGENERATE


class NonPositiveShotNoiseError(EstimatorError):
    code = SHOT_NONPOSITIVE


def estimator_sigma(n: int) -> float:
    """Relative standard deviation of a Gaussian variance estimate, ``sqrt(2/n)``."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return math.sqrt(2.0 / n)


@dataclass
class GroupMoments:
    """Centered first and second moments of paired ``(alice, bob)`` samples.

    Instances built from disjoint chunks of a group merge exactly, so a group
    can be accumulated in pieces or in parallel.
    """

    n: int = 0
    mean_a: float = 0.0
    mean_y: float = 0.0
    m_aa: float = 0.0
    m_yy: float = 0.0
    m_ay: float = 0.0

    @classmethod
    def from_arrays(cls, alice, bob) -> "GroupMoments":
        a = np.asarray(alice, dtype=float)
        y = np.asarray(bob, dtype=float)
        if a.shape != y.shape:
            raise ValueError(f"alice and bob lengths differ: {a.shape} vs {y.shape}")
        n = a.size
        if n == 0:
            return cls()
        ma = a.mean()
        my = y.mean()
        da = a - ma
        dy = y - my
        return cls(n, ma, my, float(da @ da), float(dy @ dy), float(da @ dy))

    def merge(self, other: "GroupMoments") -> "GroupMoments":
        if other.n == 0:
            return GroupMoments(**asdict(self))
        if self.n == 0:
            return GroupMoments(**asdict(other))
        n = self.n + other.n
        da = other.mean_a - self.mean_a
        dy = other.mean_y - self.mean_y
        w = self.n * other.n / n
        return GroupMoments(
            n=n,
            mean_a=self.mean_a + da * other.n / n,
            mean_y=self.mean_y + dy * other.n / n,
            m_aa=self.m_aa + other.m_aa + da * da * w,
            m_yy=self.m_yy + other.m_yy + dy * dy * w,
            m_ay=self.m_ay + other.m_ay + da * dy * w,
        )

    def __add__(self, other):
        return self.merge(other)

    def project(self, bypass: bool = False):
        """Return ``(signal_var, noise_var, correlation)``.

        With ``bypass`` (the fully blocked ``r = 0`` group) the signal is
        taken as zero and the whole variance is noise.
        """
        if self.n < 2:
            raise ValueError(f"need at least 2 samples, got {self.n}")
        var_y = self.m_yy / self.n
        if bypass:
            return 0.0, var_y, 0.0
        if self.m_aa <= 0:
            raise VarianceZeroError("alice vector has zero variance")
        signal = self.m_ay * self.m_ay / (self.m_aa * self.n)
        noise = var_y - signal
        corr = self.m_ay / math.sqrt(self.m_aa * self.m_yy) if self.m_yy > 0 else 0.0
        return signal, noise, corr


def project_signal_noise(alice, bob):
    """Split Bob's samples into Alice-proportional signal and orthogonal noise.

    Both vectors are mean-centered, then ``S = (<X,Y>/<X,X>) X``. Returns
    ``(Var(S), Var(Y - S), corr(X, Y))``; the two variances sum to ``Var(Y)``.

    Raises
    ------
    VarianceZeroError
        If Alice's vector is constant.
    """
    return GroupMoments.from_arrays(alice, bob).project()


@dataclass(frozen=True)
class GroupStats:
    atten_index: int
    quadrature: str
    n: int
    s: float
    n_var: float
    unit: str = "V2"
    ratio: float = float("nan")

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"group needs n >= 2, got {self.n}")
        if self.unit not in ("V2", "SNU"):
            raise ValueError(f"unit must be 'V2' or 'SNU', got {self.unit!r}")


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray = field(repr=False)

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def fit_affine(xs, ys) -> LinearFit:
    """Ordinary least-squares line through ``(xs, ys)``.

    ``r_squared`` is ``Cov(x, y)^2 / (Var(x) Var(y))``; a constant ``ys`` is a
    perfect fit and gets ``1.0``. Residuals are ``observed - fitted`` in input
    order.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("xs and ys must be 1-D and of equal length")
    if x.size < 3:
        raise DegenerateFitError(f"need at least 3 points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateFitError("non-finite input")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    if sxx <= 1e-28 * max(float(x @ x), 1e-300):
        raise DegenerateFitError("xs have (numerically) zero variance")
    sxy = float(dx @ dy)
    syy = float(dy @ dy)
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    r2 = sxy * sxy / (sxx * syy) if syy > 0 else 1.0
    residuals = y - (intercept + slope * x)
    return LinearFit(slope, intercept, min(max(r2, 0.0), 1.0), residuals)


def normalize_to_snu(stats, fit: LinearFit):
    """Divide every variance by the noise-fit intercept (the shot noise)."""
    if not fit.intercept > 0:
        raise NonPositiveShotNoiseError(f"shot-noise intercept {fit.intercept} is not positive")
    out = []
    for g in stats:
        if g.unit == "SNU":
            raise ValueError("group statistics are already in SNU")
        out.append(GroupStats(g.atten_index, g.quadrature, g.n, g.s / fit.intercept,
                              g.n_var / fit.intercept, "SNU", g.ratio))
    return out


@dataclass
class GateVerdict:
    accepted: bool
    r2_noise_signal: float
    r2_signal_atten: float
    max_residual_snu: float
    shot_noise_estimate: float
    shot_noise_snu: float
    excess_noise_slope: float
    reject_reasons: list

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BlockVerdict:
    """Verdicts for both quadratures; the block is usable only if both accept."""

    quadratures: dict

    @property
    def accepted(self) -> bool:
        return all(v.accepted for v in self.quadratures.values())

    @property
    def reject_reasons(self) -> list:
        reasons = []
        for v in self.quadratures.values():
            reasons.extend(r for r in v.reject_reasons if r not in reasons)
        return reasons

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "reject_reasons": self.reject_reasons,
            "quadratures": {q: v.to_dict() for q, v in self.quadratures.items()},
        }


def gate(stats, r2_min: float = R2_MIN, residual_max_snu: float = RESIDUAL_MAX_SNU,
         atten_r2_min: float | None = None):
    """Accept or reject one quadrature's groups.

    Parameters
    ----------
    stats : sequence of GroupStats
        One entry per attenuation level, in volts squared, each carrying its
        nominal ``ratio``.
    r2_min : float
        Minimum R^2 of the noise-vs-signal fit.
    residual_max_snu : float
        Largest allowed |residual| of the noise fit, in SNU.
    atten_r2_min : float, optional
        Minimum R^2 of the signal-vs-attenuation fit; defaults to ``r2_min``.

    Returns
    -------
    GateVerdict, LinearFit or None, LinearFit or None
        The verdict plus the noise and attenuation fits (``None`` when the
        fit was degenerate).
    """
    if atten_r2_min is None:
        atten_r2_min = r2_min
    stats = sorted(stats, key=lambda g: g.atten_index)
    if len(stats) < 3:
        raise ValueError(f"gate needs at least 3 groups, got {len(stats)}")
    s = np.array([g.s for g in stats])
    n = np.array([g.n_var for g in stats])
    r = np.array([g.ratio for g in stats])
    reasons = []
    nan = float("nan")

    try:
        noise_fit = fit_affine(s, n)
    except DegenerateFitError:
        noise_fit = None
        reasons.append(FIT_DEGENERATE)
    try:
        atten_fit = fit_affine(r, s)
    except DegenerateFitError:
        atten_fit = None
        if FIT_DEGENERATE not in reasons:
            reasons.append(FIT_DEGENERATE)

    r2_noise = noise_fit.r_squared if noise_fit else nan
    r2_atten = atten_fit.r_squared if atten_fit else nan
    shot = noise_fit.intercept if noise_fit else nan
    slope = noise_fit.slope if noise_fit else nan
    max_res = nan
    if noise_fit is not None:
        if r2_noise < r2_min:
            reasons.append(NOISE_FIT_R2)
        if shot > 0:
            max_res = noise_fit.max_abs_residual / shot
            if max_res > residual_max_snu:
                reasons.append(RESIDUAL_BUDGET)
        else:
            reasons.append(SHOT_NONPOSITIVE)
    if atten_fit is not None and r2_atten < atten_r2_min:
        reasons.append(ATTEN_FIT_R2)

    verdict = GateVerdict(
        accepted=not reasons,
        r2_noise_signal=r2_noise,
        r2_signal_atten=r2_atten,
        max_residual_snu=max_res,
        shot_noise_estimate=shot,
        shot_noise_snu=1.0,
        excess_noise_slope=slope,
        reject_reasons=reasons,
    )
    return verdict, noise_fit, atten_fit


def gate_block(stats_by_quadrature: dict, **thresholds) -> BlockVerdict:
    return BlockVerdict({q: gate(st, **thresholds)[0] for q, st in stats_by_quadrature.items()})


def group_stats(alice, bob, atten_index, ratios, quadrature: str = "X", unit: str = "V2"):
    """GroupStats for every attenuation level present in one quadrature."""
    alice = np.asarray(alice, dtype=float)
    bob = np.asarray(bob, dtype=float)
    idx = np.asarray(atten_index)
    order = np.argsort(idx, kind="stable")
    counts = np.bincount(idx, minlength=len(ratios))
    out = []
    start = 0
    for k, c in enumerate(counts):
        sel = order[start:start + c]
        start += c
        if c == 0:
            continue
        m = GroupMoments.from_arrays(alice[sel], bob[sel])
        s, nv, _ = m.project(bypass=ratios[k] == 0)
        out.append(GroupStats(k, quadrature, int(c), s, nv, unit, float(ratios[k])))
    return out


class ShotNoiseGate(TransformerMixin, BaseEstimator):
    """Fit the shot noise of one quadrature and apply the linearity gate.

    Parameters
    ----------
    ratios : sequence of float
        Nominal attenuation ratio of each level, indexed by ``atten_index``.
    r2_min : float, default=0.99
        Minimum R^2 of the noise-vs-signal fit.
    residual_max_snu : float, default=2e-4
        Largest allowed noise-fit residual, SNU.
    atten_r2_min : float, default=0.99
        Minimum R^2 of the signal-vs-attenuation fit.

    Attributes
    ----------
    group_stats_ : list of GroupStats
        Per-level signal and noise variances in volts squared.
    noise_fit_, atten_fit_ : LinearFit
    verdict_ : GateVerdict
    shot_noise_ : float
        Noise-fit intercept, volts squared.
    excess_noise_slope_ : float
        Noise-fit slope, SNU of noise per SNU of signal.

    Examples
    --------
    ``X`` holds one row per pulse: ``(atten_index, alice_value, bob_value_volts)``.

    >>> gate = ShotNoiseGate(ratios=schedule.ratios).fit(X)   # doctest: +SKIP
    >>> gate.verdict_.accepted                                # doctest: +SKIP
    True
    """

    def __init__(self, ratios=None, r2_min=R2_MIN, residual_max_snu=RESIDUAL_MAX_SNU,
                 atten_r2_min=R2_MIN):
        self.ratios = ratios
        self.r2_min = r2_min
        self.residual_max_snu = residual_max_snu
        self.atten_r2_min = atten_r2_min

    def _check_ratios(self):
        if self.ratios is None or len(self.ratios) < 3:
            raise ValueError("ShotNoiseGate needs at least 3 attenuation ratios")
        return np.asarray(self.ratios, dtype=float)

    def fit(self, X, y=None):
        ratios = self._check_ratios()
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        if X.shape[1] != 3:
            raise ValueError(f"X must have 3 columns (atten_index, alice, bob), got {X.shape[1]}")
        idx = X[:, 0].astype(np.int64)
        if np.any(idx != X[:, 0]) or idx.min() < 0 or idx.max() >= len(ratios):
            raise ValueError("atten_index column must hold integers in [0, K)")
        self.n_features_in_ = X.shape[1]
        return self.fit_stats(group_stats(X[:, 1], X[:, 2], idx, ratios))

    def fit_stats(self, stats):
        """Fit from precomputed per-group statistics (volts squared)."""
        self._check_ratios()
        self.group_stats_ = sorted(stats, key=lambda g: g.atten_index)
        self.verdict_, self.noise_fit_, self.atten_fit_ = gate(
            self.group_stats_, r2_min=self.r2_min,
            residual_max_snu=self.residual_max_snu, atten_r2_min=self.atten_r2_min)
        self.shot_noise_ = self.verdict_.shot_noise_estimate
        self.excess_noise_slope_ = self.verdict_.excess_noise_slope
        return self

    def transform(self, X):
        """Return ``X`` with the Bob column rescaled to shot-noise amplitude units."""
        check_is_fitted(self, "verdict_")
        X = check_array(X, dtype=np.float64, copy=True)
        if not self.shot_noise_ > 0:
            raise NonPositiveShotNoiseError("fitted shot noise is not positive")
        X[:, 2] /= math.sqrt(self.shot_noise_)
        return X

    def snu_stats(self):
        check_is_fitted(self, "verdict_")
        return normalize_to_snu(self.group_stats_, self.noise_fit_)
