"""Test statistics for watermark detection.

Two families are provided.

* The truncated goodness-of-fit family: a phi_s-divergence between the
  empirical p-value CDF and uniform,

      S_n_plus(s) = max over admissible t of K_s_plus(t/n, p_(t)),

  with p-values sorted ascending, the convention p_(n+1) = 1, and the
  admissible set {t : p_(t+1) >= c_plus}. K_s_plus truncates the Bernoulli
  phi_s-divergence K_s to positive deviations (0 unless v < u). Higher
  Criticism is the s = 2 member: n * S_n_plus(2) = max(HC_n_plus, 0)**2 / 2.

* Sum rules: T_h = sum of a score h(Y_t), rejecting above a threshold.
  Scores: ars(y) = -log(1-y), log(y), the indicator 1{y >= delta}, and the
  least-favorable log-density log f_P*(y) for a singularity guess Delta0.

Detector objects follow the familiar estimator surface: constructor
parameters are stored as-is, ``fit`` calibrates the critical value against
the null and sets ``critical_value_``, ``decision_function`` returns the
statistic, and ``predict`` returns the reject decision.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ._validation import check_unit_open
from .pivotal import PivotSeries, alt_pdf
from .tokensource import least_favorable

S_BRANCH_TOL = 1e-9  # |s| or |s-1| below this selects the limit branch of phi_s
_P_CLIP_LO = 1e-300
_P_CLIP_HI = 1.0 - 1e-16


# ---------------------------------------------------------------------------
# phi_s divergence and its Bernoulli form
# ---------------------------------------------------------------------------

def phi_s(x, s: float):
    """The convex generator phi_s, minimized at x = 1 with value 0.

    phi_1(x) = x log x - x + 1, phi_0(x) = -log x + x - 1, and otherwise
    (1 - s + s x - x**s) / (s (1 - s)). The limit branches are selected within
    1e-9 of s = 0, 1 to avoid catastrophic cancellation in the generic form.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("phi_s requires x > 0")
    if abs(s - 1.0) < S_BRANCH_TOL:
        out = x_arr * np.log(x_arr) - x_arr + 1.0
    elif abs(s) < S_BRANCH_TOL:
        out = -np.log(x_arr) + x_arr - 1.0
    else:
        out = (1.0 - s + s * x_arr - x_arr**s) / (s * (1.0 - s))
    return out if x_arr.ndim else float(out)


def k_s(u: float, v: float, s: float) -> float:
    """phi_s-divergence between Bernoulli(u) and Bernoulli(v).

    Finite closed forms are used at the endpoints u in {0, 1} where they
    exist (s = 1 via the 0 log 0 = 0 convention, otherwise the generic
    closed form); genuinely divergent endpoint cases return +inf.
    """
    u, v = float(u), float(v)
    if not 0.0 < v < 1.0:
        raise ValueError(f"v must lie in (0, 1), got {v!r}")
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u!r}")
    near1 = abs(s - 1.0) < S_BRANCH_TOL
    near0 = abs(s) < S_BRANCH_TOL
    if u == 1.0:
        if near1:
            return -math.log(v)
        if s > 0.0:
            return (1.0 - v ** (1.0 - s)) / (s * (1.0 - s))
        return math.inf
    if u == 0.0:
        if near1:
            return -math.log(1.0 - v)
        if s > 0.0:
            return (1.0 - (1.0 - v) ** (1.0 - s)) / (s * (1.0 - s))
        return math.inf
    if near1:
        return u * math.log(u / v) + (1.0 - u) * math.log((1.0 - u) / (1.0 - v))
    if near0:
        return v * math.log(v / u) + (1.0 - v) * math.log((1.0 - v) / (1.0 - u))
    return (1.0 - u**s * v ** (1.0 - s) - (1.0 - u) ** s * (1.0 - v) ** (1.0 - s)) / (s * (1.0 - s))


def k_s_plus(u: float, v: float, s: float) -> float:
    """Positive-part truncation of k_s: k_s(u, v) when 0 < v < u < 1, else 0.

    The u = 1 boundary is included through the finite closed form when one
    exists (all s > 0); for s <= 0 no finite form exists there and the term
    truncates to 0, which keeps the s <= 0 statistics finite.
    """
    u, v = float(u), float(v)
    if not 0.0 < v < 1.0:
        raise ValueError(f"v must lie in (0, 1), got {v!r}")
    if u <= v:
        return 0.0
    if u >= 1.0 and s <= S_BRANCH_TOL:
        return 0.0
    return k_s(min(u, 1.0), v, s)


def _k_s_plus_terms(u: np.ndarray, v: np.ndarray, s: float) -> np.ndarray:
    """Vectorized k_s_plus over aligned arrays; u in (0, 1], v in (0, 1)."""
    out = np.zeros_like(v)
    pos = u > v
    inner = pos & (u < 1.0)
    near1 = abs(s - 1.0) < S_BRANCH_TOL
    near0 = abs(s) < S_BRANCH_TOL
    if inner.any():
        ui, vi = u[inner], v[inner]
        if near1:
            vals = ui * np.log(ui / vi) + (1.0 - ui) * np.log((1.0 - ui) / (1.0 - vi))
        elif near0:
            vals = vi * np.log(vi / ui) + (1.0 - vi) * np.log((1.0 - vi) / (1.0 - ui))
        else:
            vals = (1.0 - ui**s * vi ** (1.0 - s) - (1.0 - ui) ** s * (1.0 - vi) ** (1.0 - s)) / (
                s * (1.0 - s)
            )
        out[inner] = vals
    edge = pos & (u >= 1.0)
    if edge.any():
        ve = v[edge]
        if near1:
            out[edge] = -np.log(ve)
        elif s > S_BRANCH_TOL:
            out[edge] = (1.0 - ve ** (1.0 - s)) / (s * (1.0 - s))
        # s <= 0: no finite closed form at u = 1; truncated to 0
    return out


# ---------------------------------------------------------------------------
# statistics over a pivot series
# ---------------------------------------------------------------------------

def _as_pvalues(series) -> np.ndarray:
    if isinstance(series, PivotSeries):
        p = series.p
    else:
        p = np.asarray(series, dtype=float)
    if p.size == 0:
        raise ValueError("empty pivot series")
    return np.clip(p, _P_CLIP_LO, _P_CLIP_HI)


def _sorted_terms(p: np.ndarray, c_plus: float):
    n = p.size
    ps = np.sort(p)
    u = np.arange(1, n + 1) / n
    p_next = np.append(ps[1:], 1.0)  # convention p_(n+1) = 1
    return ps, u, p_next >= c_plus


def trgof_stat(series, s: float, c_plus: float) -> float:
    """S_n_plus(s): max of K_s_plus(t/n, p_(t)) over {t : p_(t+1) >= c_plus}.

    Returns 0 when the admissible set is empty or every term truncates to 0.
    """
    if not 0.0 <= c_plus <= 1.0:
        raise ValueError(f"c_plus must lie in [0, 1], got {c_plus!r}")
    p = _as_pvalues(series)
    ps, u, admissible = _sorted_terms(p, c_plus)
    vals = _k_s_plus_terms(u, ps, s)[admissible]
    return float(vals.max()) if vals.size else 0.0


def hc_plus(series, c_plus: float) -> float:
    """Higher Criticism HC_n_plus: max of sqrt(n) (t/n - p_(t)) / sqrt(p_(t)(1 - p_(t)))
    over the admissible set {t : p_(t+1) >= c_plus}.

    The t = n index is always admissible (p_(n+1) = 1) and its deviation is
    positive, so the maximum is positive for any p-value vector.
    """
    if not 0.0 <= c_plus <= 1.0:
        raise ValueError(f"c_plus must lie in [0, 1], got {c_plus!r}")
    p = _as_pvalues(series)
    n = p.size
    ps, u, admissible = _sorted_terms(p, c_plus)
    terms = math.sqrt(n) * (u - ps) / np.sqrt(ps * (1.0 - ps))
    terms = terms[admissible]
    if not terms.size:
        raise ValueError("no admissible index for HC (c_plus too large)")
    return float(terms.max())


def reject_rule(stat: float, n: int, delta: float) -> bool:
    """The asymptotic rule: reject when n * stat >= (1 + delta) log log n."""
    n = int(n)
    if n < 3:
        raise ValueError("log log n <= 0 for n < 3; rule needs n >= 3")
    return n * float(stat) >= (1.0 + delta) * math.log(math.log(n))


# ---------------------------------------------------------------------------
# sum-based scores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreKind:
    """One of the sum-rule score functions: ars, log, ind(delta0), opt(delta0)."""

    name: str
    param: float | None = None

    def __post_init__(self):
        if self.name not in ("ars", "log", "ind", "opt"):
            raise ValueError(f"unknown score {self.name!r}")
        if self.name in ("ind", "opt"):
            if self.param is None or not 0.0 < self.param < 1.0:
                raise ValueError(f"score {self.name!r} needs a parameter in (0, 1)")
        elif self.param is not None:
            raise ValueError(f"score {self.name!r} takes no parameter")

    def label(self) -> str:
        return self.name if self.param is None else f"{self.name}({self.param:g})"


ARS = ScoreKind("ars")
LOG = ScoreKind("log")


def ind(delta0: float) -> ScoreKind:
    return ScoreKind("ind", float(delta0))


def opt(delta0: float) -> ScoreKind:
    return ScoreKind("opt", float(delta0))


def score(y, kind: ScoreKind):
    """Evaluate a score function on pivot value(s) in (0, 1)."""
    y_arr = check_unit_open(y, "y")
    if kind.name == "ars":
        out = -np.log1p(-y_arr)
    elif kind.name == "log":
        out = np.log(y_arr)
    elif kind.name == "ind":
        out = (y_arr >= kind.param).astype(float)
    else:  # opt: log-density of the least-favorable watermarked pivot law
        out = np.log(alt_pdf(least_favorable(kind.param), y_arr))
    return out if np.ndim(y) else float(out)


def null_moments(kind: ScoreKind) -> tuple[float, float]:
    """Mean and variance of the score under the U(0, 1) null.

    ars and log are standard exponential in disguise, ind is Bernoulli; the
    opt moments have no simple closed form and come from adaptive quadrature
    (absolute tolerance 1e-10, with the integrable log singularity at 0).
    """
    if kind.name == "ars":
        return 1.0, 1.0
    if kind.name == "log":
        return -1.0, 1.0
    if kind.name == "ind":
        d = kind.param
        return 1.0 - d, d * (1.0 - d)

    def h(y):
        return score(min(max(y, _P_CLIP_LO), _P_CLIP_HI), kind)

    mean = quad(h, 0.0, 1.0, epsabs=1e-12, limit=300)[0]
    second = quad(lambda y: h(y) ** 2, 0.0, 1.0, epsabs=1e-12, limit=300)[0]
    return mean, second - mean * mean


def sum_test(series, kind: ScoreKind, threshold: float) -> bool:
    """Reject when the summed score reaches ``threshold`` (supplied by calibrate)."""
    if isinstance(series, PivotSeries):
        y = series.y
    else:
        y = np.asarray(series, dtype=float)
    y = np.clip(y, 1.0 - _P_CLIP_HI, _P_CLIP_HI)
    return bool(score(y, kind).sum() >= threshold)


# ---------------------------------------------------------------------------
# detector objects
# ---------------------------------------------------------------------------

class Detector:
    """Base detector: estimator-style params plus statistic/predict.

    Detector objects uniformly take pivots (a PivotSeries or a raw array of
    pivot values y); the module-level functions instead follow each test's
    native convention (p-values for the goodness-of-fit family, pivots for
    the sum rules).
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "Detector":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    # -- statistic / decision -------------------------------------------------

    def statistic(self, series) -> float:
        raise NotImplementedError

    def decision_function(self, series) -> float:
        return self.statistic(series)

    @property
    def threshold(self) -> float:
        cv = getattr(self, "critical_value_", None)
        if cv is None:
            cv = self.critical_value
        if cv is None:
            raise ValueError("no critical value: call fit() or set critical_value")
        return float(cv)

    def predict(self, series) -> bool:
        """True when the watermark hypothesis is accepted (H0 rejected)."""
        return bool(self.statistic(series) >= self.threshold)

    def fit(self, n: int, alpha: float = 0.01, reps: int = 10_000, outer: int = 10, seed: int = 0):
        """Monte Carlo-calibrate the critical value for length-n null series."""
        from .calibrate import mc_critical

        result = mc_critical(self, n, alpha, reps=reps, outer=outer, seed=seed)
        self.critical_value_ = result.critical_value
        self.calibration_ = result
        return self

    # -- serialization ----------------------------------------------------------

    def _effective_cv(self):
        cv = getattr(self, "critical_value_", None)
        return self.critical_value if cv is None else cv

    def to_config(self) -> dict:
        raise NotImplementedError


class TrGoF(Detector):
    """Truncated goodness-of-fit detector S_n_plus(s)."""

    def __init__(self, s: float = 2.0, c_plus: float = 0.0, critical_value: float | None = None):
        if not -1.0 <= s <= 2.0:
            raise ValueError(f"s must lie in [-1, 2], got {s!r}")
        if not 0.0 <= c_plus <= 1.0:
            raise ValueError(f"c_plus must lie in [0, 1], got {c_plus!r}")
        self.s = float(s)
        self.c_plus = float(c_plus)
        self.critical_value = critical_value

    def statistic(self, series) -> float:
        if not isinstance(series, PivotSeries):
            series = PivotSeries.from_y(np.asarray(series, dtype=float))
        return trgof_stat(series, self.s, self.c_plus)

    def to_config(self) -> dict:
        return {
            "kind": "trgof",
            "s": self.s,
            "c_plus": self.c_plus,
            "critical_value": self._effective_cv(),
        }


class HigherCriticism(Detector):
    """HC_n_plus, the s = 2 member on the square-root scale."""

    def __init__(self, c_plus: float = 0.0, critical_value: float | None = None):
        if not 0.0 <= c_plus <= 1.0:
            raise ValueError(f"c_plus must lie in [0, 1], got {c_plus!r}")
        self.c_plus = float(c_plus)
        self.critical_value = critical_value

    def statistic(self, series) -> float:
        if not isinstance(series, PivotSeries):
            series = PivotSeries.from_y(np.asarray(series, dtype=float))
        return hc_plus(series, self.c_plus)

    def to_config(self) -> dict:
        return {
            "kind": "hc",
            "c_plus": self.c_plus,
            "critical_value": self._effective_cv(),
        }


class SumScore(Detector):
    """Sum rule T_h for one of the score kinds."""

    def __init__(self, kind: ScoreKind = ARS, critical_value: float | None = None):
        if not isinstance(kind, ScoreKind):
            raise ValueError("kind must be a ScoreKind")
        self.kind = kind
        self.critical_value = critical_value

    def statistic(self, series) -> float:
        if isinstance(series, PivotSeries):
            y = series.y
        else:
            y = np.asarray(series, dtype=float)
        y = np.clip(y, 1.0 - _P_CLIP_HI, _P_CLIP_HI)
        return float(score(y, self.kind).sum())

    def fit(self, n: int, alpha: float = 0.01, reps: int = 10_000, outer: int = 10, seed: int = 0):
        """Sum rules calibrate in closed form through the CLT threshold."""
        from .calibrate import clt_critical

        self.critical_value_ = clt_critical(self.kind, n, alpha)
        self.calibration_ = None
        return self

    def to_config(self) -> dict:
        return {
            "kind": "sum",
            "score": self.kind.name,
            "delta0": self.kind.param,
            "critical_value": self._effective_cv(),
        }


def detector_from_config(cfg: dict) -> Detector:
    kind = cfg.get("kind")
    cv = cfg.get("critical_value")
    if kind == "trgof":
        return TrGoF(s=cfg.get("s", 2.0), c_plus=cfg.get("c_plus", 0.0), critical_value=cv)
    if kind == "hc":
        return HigherCriticism(c_plus=cfg.get("c_plus", 0.0), critical_value=cv)
    if kind == "sum":
        return SumScore(kind=ScoreKind(cfg["score"], cfg.get("delta0")), critical_value=cv)
    raise ValueError(f"unknown detector kind {kind!r}")
