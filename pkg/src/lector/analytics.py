"""Separability statistics and at-risk prediction.

Group separability uses the Fisher discriminant ratio (mean-difference
squared over the summed variances). Prediction uses an in-house logistic
regression trained by full-batch gradient descent on standardized features,
evaluated by stratified cross-validation with per-fold F1 and AUC.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from . import _kernels

logger = logging.getLogger(__name__)

AT_RISK_GRADES = frozenset({"D", "F"})
GRADES = ("A", "B", "C", "D", "F")

DEFAULT_LR = 0.1
DEFAULT_EPOCHS = 300
DEFAULT_L2 = 1e-3


@dataclass(frozen=True)
class GradeLabel:
    grade: str

    def __post_init__(self):
        if self.grade not in GRADES:
            raise ValueError(f"unknown grade {self.grade!r}")

    @property
    def at_risk(self) -> bool:
        return self.grade in AT_RISK_GRADES


def fdr(a, b) -> float:
    """Fisher's discriminant ratio (m1 - m2)^2 / (v1 + v2) between two samples.

    Symmetric, non-negative, zero exactly when the means agree. Variances are
    population variances of each group.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each group needs at least 2 samples")
    num = (a.mean() - b.mean()) ** 2
    if num == 0.0:
        return 0.0
    denom = a.var() + b.var()
    if denom == 0.0:
        raise ValueError("degenerate populations: zero variance with distinct means")
    return float(num / denom)


def best_topic(group_a: list, group_b: list,
               topic_words: list[tuple[str, ...]]) -> tuple[int, float]:
    """Topic coordinate with the highest Fisher ratio between two groups.

    ``group_a`` / ``group_b`` are lists of topic-basis PreferenceVectors.
    Degenerate coordinates (zero variance in both groups with distinct
    means) are skipped with a warning; ties break lexicographically.
    """
    if len(group_a) < 2 or len(group_b) < 2:
        raise ValueError("each group needs at least 2 students")
    Xa = np.vstack([p.values for p in group_a])
    Xb = np.vstack([p.values for p in group_b])
    if Xa.shape[1] != Xb.shape[1] or Xa.shape[1] != len(topic_words):
        raise ValueError("preference vectors do not match the topic axis")
    best: tuple[float, tuple[str, ...], int] | None = None
    for j in range(Xa.shape[1]):
        try:
            value = fdr(Xa[:, j], Xb[:, j])
        except ValueError:
            logger.warning("topic %s has degenerate distributions; skipped",
                           topic_words[j])
            continue
        key = (-value, topic_words[j], j)
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("no topic coordinate admits a Fisher ratio")
    value = -best[0]
    if value == 0.0:
        logger.warning("all topic coordinates are identical across groups")
    return best[2], value


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------

@dataclass
class LogisticModel:
    weights: np.ndarray          # over retained features
    bias: float
    feature_names: list[str]     # retained features, aligned with weights
    mean: np.ndarray             # per retained feature, raw space
    std: np.ndarray              # per retained feature, > 0
    input_names: list[str]       # original feature layout expected by predict
    kept: np.ndarray             # boolean mask over input_names
    losses: np.ndarray           # training loss per epoch (first entry: before training)

    @property
    def dropped(self) -> list[str]:
        return [n for n, k in zip(self.input_names, self.kept) if not k]


def logreg_loss_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                     l2: float) -> tuple[float, np.ndarray, float]:
    """Summed penalized negative log-likelihood and its exact gradient.

    Reference implementation used for gradient checking; the training loop in
    the kernels module computes the same quantities.
    """
    z = X @ w + b
    loss = float(np.sum(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z))
    loss += 0.5 * l2 * float(w @ w)
    p = _sigmoid(z)
    r = p - y
    return loss, X.T @ r + l2 * w, float(r.sum())


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_logreg(X: np.ndarray, y: np.ndarray, feature_names: list[str] | None = None,
                 lr: float = DEFAULT_LR, epochs: int = DEFAULT_EPOCHS,
                 l2: float = DEFAULT_L2, seed: int = 0) -> LogisticModel:
    """Fit a logistic model by full-batch gradient descent.

    Features are standardized internally; zero-variance columns are dropped
    and recorded. Weights start at zero, so training is deterministic (the
    seed is accepted for interface stability). Raises on single-class y.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad shapes: X {X.shape}, y {y.shape}")
    classes = np.unique(y)
    if not np.array_equal(classes, [0.0, 1.0]):
        raise ValueError("y must contain both classes, coded 0/1")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match X columns")

    std_all = X.std(axis=0)
    kept = std_all > 0
    if not np.all(kept):
        logger.warning("dropping %d zero-variance feature(s): %s",
                       int((~kept).sum()),
                       [n for n, k in zip(feature_names, kept) if not k])
    Xk = X[:, kept]
    mean = Xk.mean(axis=0)
    std = Xk.std(axis=0)
    Z = (Xk - mean) / std if Xk.shape[1] else Xk
    w, b, losses = _kernels.logreg_gd(Z, y, lr, epochs, l2)
    return LogisticModel(
        weights=np.asarray(w),
        bias=float(b),
        feature_names=[n for n, k in zip(feature_names, kept) if k],
        mean=mean,
        std=std,
        input_names=list(feature_names),
        kept=kept,
        losses=np.asarray(losses),
    )


def _standardize(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(model.input_names):
        raise ValueError(
            f"X has {X.shape[1]} columns, model expects {len(model.input_names)}"
        )
    Xk = X[:, model.kept]
    return (Xk - model.mean) / model.std


def decision_scores(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    return _standardize(model, X) @ model.weights + model.bias


def predict_proba(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    """At-risk probabilities in (0, 1), monotone in the linear score."""
    return _sigmoid(decision_scores(model, X))


def explain_prediction(model: LogisticModel, x: np.ndarray,
                       population_mean: np.ndarray) -> list[dict]:
    """Per-feature linear contributions in standardized space.

    contribution_j = w_j * (z_j - zmean_j); the contributions sum exactly to
    the difference of the linear scores at x and at the population mean. Raw
    values ride along for reporting.
    """
    x = np.asarray(x, dtype=np.float64)
    population_mean = np.asarray(population_mean, dtype=np.float64)
    zx = _standardize(model, x)[0]
    zm = _standardize(model, population_mean)[0]
    contribs = model.weights * (zx - zm)
    raw = x[model.kept] if x.ndim == 1 else x[0, model.kept]
    raw_mean = population_mean[model.kept]
    return [
        {
            "feature": name,
            "contribution": float(c),
            "value": float(v),
            "population_mean": float(m),
        }
        for name, c, v, m in zip(model.feature_names, contribs, raw, raw_mean)
    ]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs both classes")
    greater = float((pos[:, None] > neg[None, :]).sum())
    ties = float((pos[:, None] == neg[None, :]).sum())
    return (greater + 0.5 * ties) / (pos.size * neg.size)


def f1_score(predicted, labels) -> float:
    """Binary F1 of the positive class, in [0, 1]; 0 when undefined."""
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    tp = float(np.sum((predicted == 1) & (labels == 1)))
    fp = float(np.sum((predicted == 1) & (labels == 0)))
    fn = float(np.sum((predicted == 0) & (labels == 1)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def ttest(a, b) -> float:
    """Two-sided Welch t-test p-value.

    Degenerate inputs with zero variance in both groups give p = 1 for equal
    means and p = 0 otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    ma, mb = a.mean(), b.mean()
    if va == 0.0 and vb == 0.0:
        return 1.0 if ma == mb else 0.0
    se2 = va / a.size + vb / b.size
    t = (ma - mb) / math.sqrt(se2)
    if t == 0.0:
        return 1.0
    df = se2**2 / (
        (va / a.size) ** 2 / (a.size - 1) + (vb / b.size) ** 2 / (b.size - 1)
    )
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

@dataclass
class CVResult:
    f1: np.ndarray   # per fold
    auc: np.ndarray  # per fold
    shrunk: bool     # fold size reduced to fit the cohort

    @property
    def f1_mean(self) -> float:
        return float(self.f1.mean())

    @property
    def f1_std(self) -> float:
        return float(self.f1.std())

    @property
    def auc_mean(self) -> float:
        return float(self.auc.mean())

    @property
    def auc_std(self) -> float:
        return float(self.auc.std())


def _stratified_subsample(y: np.ndarray, target: int, rng) -> np.ndarray:
    """Indices of a class-proportional subsample of size target."""
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    n_pos = int(round(target * pos.size / y.size))
    n_pos = min(max(n_pos, 1), target - 1)
    pos = rng.permutation(pos)[:n_pos]
    neg = rng.permutation(neg)[: target - n_pos]
    return np.sort(np.concatenate([pos, neg]))


def _stratified_folds(ys: np.ndarray, folds: int, fold_size: int, rng) -> np.ndarray:
    """Fold index per sample: minority class dealt round-robin, majority
    class filling each fold to exactly fold_size."""
    assignment = np.empty(ys.size, dtype=np.int64)
    minority = 1 if (ys == 1).sum() <= (ys == 0).sum() else 0
    minor_members = rng.permutation(np.flatnonzero(ys == minority))
    for i, m in enumerate(minor_members):
        assignment[m] = i % folds
    capacity = np.full(folds, fold_size, dtype=np.int64)
    for m in minor_members:
        capacity[assignment[m]] -= 1
    f = 0
    for m in rng.permutation(np.flatnonzero(ys == 1 - minority)):
        while capacity[f] == 0:
            f = (f + 1) % folds
        assignment[m] = f
        capacity[f] -= 1
    return assignment


def cross_validate(X: np.ndarray, y: np.ndarray, folds: int = 3,
                   fold_size: int = 20, seed: int = 0,
                   lr: float = DEFAULT_LR, epochs: int = DEFAULT_EPOCHS,
                   l2: float = DEFAULT_L2) -> CVResult:
    """Stratified k-fold CV on a fixed-size subsample; per-fold F1 and AUC.

    The evaluation draws folds * fold_size samples (class-proportional) from
    the cohort; smaller cohorts shrink the fold size with a flag. A fold that
    ends up single-class triggers a refold with a shifted seed, at most 10
    times.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y disagree on sample count")
    n = y.size
    target = folds * fold_size
    shrunk = False
    if n < target:
        fold_size = n // folds
        if fold_size < 2:
            raise ValueError(f"cohort of {n} too small for {folds} folds")
        target = folds * fold_size
        shrunk = True
        logger.warning("cohort of %d smaller than %d; folds shrunk to %d samples",
                       n, folds * 20, fold_size)

    last_error: Exception | None = None
    for attempt in range(10):
        rng = np.random.default_rng(seed + attempt)
        idx = _stratified_subsample(y, target, rng)
        Xs, ys = X[idx], y[idx]
        assignment = _stratified_folds(ys, folds, fold_size, rng)
        try:
            f1s, aucs = [], []
            for f in range(folds):
                test = assignment == f
                train = ~test
                if len(np.unique(ys[test])) < 2 or len(np.unique(ys[train])) < 2:
                    raise _RefoldNeeded(f"fold {f} lacks a class")
                model = train_logreg(Xs[train], ys[train], lr=lr, epochs=epochs,
                                     l2=l2, seed=seed)
                proba = predict_proba(model, Xs[test])
                f1s.append(f1_score((proba >= 0.5).astype(int), ys[test]))
                aucs.append(auc(proba, ys[test]))
            return CVResult(f1=np.array(f1s), auc=np.array(aucs), shrunk=shrunk)
        except _RefoldNeeded as exc:
            last_error = exc
            logger.warning("refolding (attempt %d): %s", attempt + 1, exc)
    raise ValueError(f"could not build stratified folds after 10 attempts: {last_error}")


class _RefoldNeeded(Exception):
    pass


def compare_representations(topic_results: list[CVResult],
                            trad_results: list[CVResult],
                            alpha: float = 0.05) -> dict[str, dict[str, int]]:
    """Tally per-case significant wins for each metric.

    For each paired case, a two-sided Welch t-test on the per-fold metric
    samples decides T>F (topic side significantly higher), F>T, or T=F.
    """
    if len(topic_results) != len(trad_results):
        raise ValueError("result lists must be paired")
    tallies = {
        "auc": {"T>F": 0, "F>T": 0, "T=F": 0},
        "f1": {"T>F": 0, "F>T": 0, "T=F": 0},
    }
    for tr, fr in zip(topic_results, trad_results):
        for metric, t_samples, f_samples in (
            ("auc", tr.auc, fr.auc),
            ("f1", tr.f1, fr.f1),
        ):
            p = ttest(t_samples, f_samples)
            if p < alpha and t_samples.mean() > f_samples.mean():
                tallies[metric]["T>F"] += 1
            elif p < alpha and f_samples.mean() > t_samples.mean():
                tallies[metric]["F>T"] += 1
            else:
                tallies[metric]["T=F"] += 1
    return tallies
