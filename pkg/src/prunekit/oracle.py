"""Exhaustive single-prune enumeration and criterion optimality checks.

The enumerator tries every candidate weight of one output column, evaluates
the empirical squared reconstruction error directly on the calibration rows
(with the bias either re-fit or frozen), and returns the global minimizer.
It is the ground truth the ranking criteria are checked against: on any
sample, the stade argmin must match enumeration with bias refitting, wanda
must match it on exactly mean-centered data, and stade-star must match it
with the bias frozen.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .criteria import compute_scores
from .errors import EmptyStats, InstanceTooLarge, ShapeMismatch
from .parallel import parallel_map
from .stats import stats_init, stats_update

MAX_FEATURES = 64
MAX_ROWS = 4096

DATA_REGIMES = ("uncentered", "centered", "offset")
_CHECKABLE = {
    # tag -> (default data regime, allow_bias)
    "stade": ("uncentered", True),
    "wanda": ("centered", True),
    "stade-star": ("uncentered", False),
}


def brute_force_single_prune(
    w_col: np.ndarray,
    bias: float,
    calib: np.ndarray,
    allow_bias: bool,
) -> tuple[int, float, float]:
    """Enumerate every single-weight prune of one output column.

    Returns ``(best_j, best_bias, best_objective)`` where the objective is
    the empirical mean squared output difference over the calibration rows.
    With ``allow_bias`` the bias is re-fit per candidate to its closed-form
    least-squares minimizer ``bias + mean(x_j) * w_j``; otherwise it stays
    fixed. Ties resolve to the lowest input index.
    """
    w_col = np.asarray(w_col, dtype=np.float64)
    calib = np.asarray(calib, dtype=np.float64)
    if w_col.ndim != 1:
        raise ShapeMismatch(f"w_col must be 1-D, got {w_col.ndim}-D")
    if calib.ndim != 2 or calib.shape[1] != w_col.shape[0]:
        raise ShapeMismatch(f"calib shape {calib.shape} does not match "
                            f"{w_col.shape[0]} features")
    m = w_col.shape[0]
    n = calib.shape[0]
    if m > MAX_FEATURES or n > MAX_ROWS:
        raise InstanceTooLarge(f"instance {n}x{m} exceeds enumeration bounds "
                               f"{MAX_ROWS}x{MAX_FEATURES}")
    if n == 0:
        raise EmptyStats("enumeration needs at least one calibration row")

    dense = calib @ w_col + bias
    best_j, best_b, best_obj = -1, float(bias), np.inf
    for j in range(m):
        b = bias + calib[:, j].mean() * w_col[j] if allow_bias else bias
        pruned = dense - calib[:, j] * w_col[j] - bias + b
        objective = float(np.mean((dense - pruned) ** 2))
        if objective < best_obj:
            best_j, best_b, best_obj = j, float(b), objective
    return best_j, best_b, best_obj


def random_instance(rng: np.random.Generator, offset_feature: bool = False):
    """Draw one (calib, w_col, bias) check instance.

    Features are mean-plus-scaled-noise with means in (-5, 5) and scales in
    (0.1, 2), so both mean-dominated and variance-dominated features occur.
    With ``offset_feature`` one feature is forced near-constant (scale <=
    0.05) with a large offset (|mean| >= 3), the regime where a raw-norm
    ranking misranks.
    """
    n = int(rng.integers(8, 65))
    m = int(rng.integers(2, 17))
    mu = rng.uniform(-5.0, 5.0, size=m)
    sigma = rng.uniform(0.1, 2.0, size=m)
    if offset_feature:
        k = int(rng.integers(0, m))
        sigma[k] = rng.uniform(0.01, 0.05)
        mu[k] = float(rng.choice([-1.0, 1.0])) * rng.uniform(3.0, 5.0)
    calib = mu + sigma * rng.standard_normal((n, m))
    w_col = rng.uniform(-1.0, 1.0, size=m)
    bias = float(rng.uniform(-1.0, 1.0))
    return calib, w_col, bias


@dataclass
class CheckResult:
    criterion: str
    data: str
    allow_bias: bool
    trials: int
    matches: int
    mismatches: int
    max_bias_shift: float
    first_counterexample: dict | None

    @property
    def passed(self) -> bool:
        return self.mismatches == 0

    def to_dict(self) -> dict:
        return asdict(self)


def check_criterion_optimality(
    tag: str,
    trials: int,
    seed: int,
    data: str = "auto",
    threads: int = 1,
) -> CheckResult:
    """Compare a criterion's argmin against enumeration over random instances.

    ``data`` picks the input regime: "centered" subtracts empirical column
    means exactly, "offset" plants a near-constant offset feature,
    "uncentered" is the plain draw, and "auto" uses the regime the criterion
    is claimed optimal for. ``max_bias_shift`` records the largest
    |refit bias - original bias| seen, which must vanish on centered data.
    """
    if tag not in _CHECKABLE:
        raise ValueError(f"no optimality check for criterion {tag!r}; "
                         f"expected one of {sorted(_CHECKABLE)}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    default_data, allow_bias = _CHECKABLE[tag]
    if data == "auto":
        data = default_data
    if data not in DATA_REGIMES:
        raise ValueError(f"unknown data regime {data!r}")

    children = np.random.SeedSequence(seed).spawn(trials)

    def run_trial(idx: int):
        rng = np.random.default_rng(children[idx])
        calib, w_col, bias = random_instance(rng, offset_feature=data == "offset")
        if data == "centered":
            calib = calib - calib.mean(axis=0)
        stats = stats_update(stats_init(calib.shape[1]), calib)
        scores = compute_scores(tag, w_col[:, None], stats=stats)
        crit_j = int(np.argmin(scores[:, 0]))
        bf_j, bf_b, bf_obj = brute_force_single_prune(w_col, bias, calib, allow_bias)
        shift = abs(bf_b - bias)
        if crit_j == bf_j:
            return True, shift, None
        detail = {
            "trial": idx,
            "rows": int(calib.shape[0]),
            "features": int(calib.shape[1]),
            "criterion_choice": crit_j,
            "enumeration_choice": bf_j,
            "enumeration_objective": bf_obj,
            "weights": w_col.tolist(),
            "bias": bias,
            "feature_means": calib.mean(axis=0).tolist(),
            "feature_stds": calib.std(axis=0, ddof=1).tolist(),
        }
        return False, shift, detail

    outcomes = parallel_map(run_trial, range(trials), threads)
    matches = sum(1 for ok, _, _ in outcomes if ok)
    first = next((detail for ok, _, detail in outcomes if not ok), None)
    return CheckResult(
        criterion=tag,
        data=data,
        allow_bias=allow_bias,
        trials=trials,
        matches=matches,
        mismatches=trials - matches,
        max_bias_shift=float(max(shift for _, shift, _ in outcomes)),
        first_counterexample=first,
    )
