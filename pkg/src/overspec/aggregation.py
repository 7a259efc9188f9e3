"""Benchmark aggregation: majority tournaments, random-utility evaluators,
Bradley-Terry-Luce fitting and asymmetric regret weighting.

Evaluator ``i`` scores implementation ``y`` on instance ``x`` as

    u_i(x, y) = q_i(x, y) + alpha_i * v(x, y)

and prefers ``y`` to ``y'`` with probability ``expit(u_i(x, y) - u_i(x, y'))``.
When baseline quality is equal across a pair, structural compatibility is
all that separates the two, and any positive sensitivity tilts both the
aggregate preference and the fitted scores towards the overspecified choice.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import expit

from .errors import FitError, InputError
from .scenario import ScenarioConfig, compatibility_score


# -- profiles and majority --------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkProfile:
    """k evaluator rankings (best first) over the candidate set Y_x."""

    candidates: tuple[str, ...]
    rankings: tuple[tuple[str, ...], ...]
    instance: str | None = None

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise InputError("a profile needs at least two candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise InputError(f"duplicate candidates in {list(self.candidates)}")
        if not self.rankings:
            raise InputError("a profile needs at least one evaluator")
        want = sorted(self.candidates)
        for i, r in enumerate(self.rankings):
            if sorted(r) != want:
                raise InputError(f"ranking {i} is not a permutation of the candidates: {list(r)}")

    @property
    def k(self) -> int:
        return len(self.rankings)

    def to_json(self) -> dict:
        return {"instance": self.instance, "candidates": list(self.candidates),
                "rankings": [list(r) for r in self.rankings]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "BenchmarkProfile":
        try:
            cands = tuple(obj["candidates"])
            rankings = tuple(tuple(r) for r in obj["rankings"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed profile: {exc}") from None
        return cls(cands, rankings, obj.get("instance"))

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkProfile":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class Tournament:
    """Strict pairwise majority relation; ``beats`` holds pairs (winner, loser)."""

    candidates: tuple[str, ...]
    beats: frozenset[tuple[str, str]]

    def prefers(self, y: str, y_prime: str) -> bool:
        return (y, y_prime) in self.beats

    def cycles(self) -> list[tuple[str, str, str]]:
        """Directed 3-cycles, each listed once starting from its earliest
        candidate.  A complete tournament is transitive iff this is empty."""
        out = []
        for a, b, c in itertools.permutations(self.candidates, 3):
            first = self.candidates.index(a)
            if first < self.candidates.index(b) and first < self.candidates.index(c):
                if self.prefers(a, b) and self.prefers(b, c) and self.prefers(c, a):
                    out.append((a, b, c))
        return out

    def order(self) -> list[str] | None:
        """The aggregate ranking if the relation is a complete strict order."""
        wins = {y: sum(self.prefers(y, z) for z in self.candidates) for y in self.candidates}
        ranked = sorted(self.candidates, key=lambda y: -wins[y])
        n = len(ranked)
        if sorted(wins.values()) != list(range(n)):
            return None
        return ranked

    def to_json(self) -> dict:
        return {"candidates": list(self.candidates),
                "beats": sorted([list(p) for p in self.beats]),
                "cycles": [list(c) for c in self.cycles()],
                "order": self.order()}


def majority_pairwise(profile: BenchmarkProfile) -> Tournament:
    """y beats y' iff strictly more than k/2 evaluators rank y above y'."""
    pos = [{y: i for i, y in enumerate(r)} for r in profile.rankings]
    beats = set()
    for y, z in itertools.permutations(profile.candidates, 2):
        if 2 * sum(p[y] < p[z] for p in pos) > profile.k:
            beats.add((y, z))
    return Tournament(profile.candidates, frozenset(beats))


@dataclass
class InheritanceReport:
    k: int
    coalition: tuple[int, ...]
    pair: tuple[str, str]
    delta_v: int
    trials: int
    violations: int
    vacuous: bool
    adversarial: bool
    example_violation: BenchmarkProfile | None = None

    def to_json(self) -> dict:
        return {"k": self.k, "coalition": list(self.coalition), "pair": list(self.pair),
                "delta_v": self.delta_v, "trials": self.trials, "violations": self.violations,
                "vacuous": self.vacuous, "adversarial": self.adversarial,
                "example_violation": None if self.example_violation is None else self.example_violation.to_json()}


def random_profiles(candidates: Sequence[str], k: int, coalition: Sequence[int], pair: tuple[str, str],
                    trials: int, rng: np.random.Generator, adversarial: bool = False) -> np.ndarray:
    """Random rankings as candidate-index arrays of shape (trials, k, |Y|).

    Coalition members rank ``pair[0]`` above ``pair[1]`` with the other
    positions uniform; non-members are uniform, or, when ``adversarial``,
    rank ``pair[1]`` above ``pair[0]``.
    """
    m = len(candidates)
    y, z = candidates.index(pair[0]), candidates.index(pair[1])
    perms = rng.permuted(np.tile(np.arange(m), (trials, k, 1)), axis=-1)
    pos_y = np.argmax(perms == y, axis=-1)
    pos_z = np.argmax(perms == z, axis=-1)
    members = np.zeros(k, dtype=bool)
    members[list(coalition)] = True
    if adversarial:
        swap = np.where(members, pos_y > pos_z, pos_y < pos_z)
    else:
        swap = members & (pos_y > pos_z)
    # exchanging the two entries keeps the other positions uniform
    t_idx, e_idx = np.nonzero(swap)
    perms[t_idx, e_idx, pos_y[t_idx, e_idx]] = z
    perms[t_idx, e_idx, pos_z[t_idx, e_idx]] = y
    return perms


def check_deterministic_inheritance(cfg: ScenarioConfig, x: str, candidates: Sequence[str],
                                    pair: tuple[str, str], k: int, coalition: Sequence[int],
                                    trials: int, seed: int, adversarial: bool = False) -> InheritanceReport:
    """Sample profiles with a signature-monotone coalition and count trials in
    which the majority fails to rank ``pair[0]`` above ``pair[1]``.

    With ``v(x, y) == v(x, y')`` the monotonicity hypothesis is empty; the
    report is marked vacuous and nothing is checked.
    """
    candidates = list(candidates)
    coalition = tuple(sorted(set(coalition)))
    if any(not 0 <= c < k for c in coalition):
        raise InputError(f"coalition members must lie in 0..{k - 1}")
    if pair[0] not in candidates or pair[1] not in candidates or pair[0] == pair[1]:
        raise InputError(f"pair {pair} must be two distinct candidates")
    dv = compatibility_score(x, pair[0], cfg) - compatibility_score(x, pair[1], cfg)
    if dv < 0:
        raise InputError(f"v(x, {pair[0]!r}) < v(x, {pair[1]!r}); swap the pair")
    if dv == 0:
        return InheritanceReport(k, coalition, tuple(pair), dv, 0, 0, True, adversarial)

    rng = np.random.default_rng(seed)
    perms = random_profiles(candidates, k, coalition, pair, trials, rng, adversarial)
    y, z = candidates.index(pair[0]), candidates.index(pair[1])
    y_first = np.argmax(perms == y, axis=-1) < np.argmax(perms == z, axis=-1)
    ok = 2 * y_first.sum(axis=1) > k
    bad = np.flatnonzero(~ok)
    example = None
    if bad.size:
        rankings = tuple(tuple(candidates[j] for j in row) for row in perms[bad[0]])
        example = BenchmarkProfile(tuple(candidates), rankings, x)
    return InheritanceReport(k, coalition, tuple(pair), dv, trials, int(bad.size), False, adversarial, example)


def majority_counterexample() -> tuple[BenchmarkProfile, tuple[int, ...], tuple[str, str]]:
    """Stored profile where a non-majority signature-monotone coalition is
    outvoted: returns (profile, coalition, pair)."""
    text = resources.files("overspec").joinpath("data/majority_counterexample.json").read_text(encoding="utf-8")
    obj = json.loads(text)
    return BenchmarkProfile.from_json(obj["profile"]), tuple(obj["coalition"]), tuple(obj["pair"])


# -- evaluator populations ----------------------------------------------------------

@dataclass(frozen=True)
class EvaluatorPopulation:
    """Per-evaluator sensitivity ``alpha``, loss aversion ``lam`` and optional
    baseline quality (one mapping implementation -> q per evaluator)."""

    alpha: np.ndarray
    lam: np.ndarray
    quality: tuple[Mapping[str, float], ...] | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        lam = np.ones_like(alpha) if self.lam is None else np.asarray(self.lam, dtype=float).reshape(-1)
        if alpha.size == 0:
            raise InputError("population is empty")
        if lam.shape != alpha.shape:
            raise InputError(f"alpha has {alpha.size} entries but lambda has {lam.size}")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise InputError("alpha values must be finite and >= 0")
        if not np.all(np.isfinite(lam)) or np.any(lam < 1):
            raise InputError("lambda values must be finite and >= 1")
        if self.quality is not None and len(self.quality) != alpha.size:
            raise InputError("quality needs one mapping per evaluator")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lam", lam)

    @property
    def k(self) -> int:
        return self.alpha.size

    def utilities(self, x: str, candidates: Sequence[str], cfg: ScenarioConfig) -> np.ndarray:
        """Matrix u[i, j] = q_i(x, y_j) + alpha_i * v(x, y_j)."""
        v = np.array([compatibility_score(x, y, cfg) for y in candidates], dtype=float)
        q = np.zeros((self.k, len(candidates)))
        if self.quality is not None:
            for i, qi in enumerate(self.quality):
                q[i] = [float(qi.get(y, 0.0)) for y in candidates]
        return q + self.alpha[:, None] * v[None, :]

    def to_json(self) -> dict:
        out = {"alpha": self.alpha.tolist(), "lambda": self.lam.tolist()}
        if self.quality is not None:
            out["quality"] = [dict(q) for q in self.quality]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "EvaluatorPopulation":
        if "alpha" not in obj:
            raise InputError("population needs an 'alpha' list")
        quality = obj.get("quality")
        return cls(np.asarray(obj["alpha"], dtype=float), obj.get("lambda"),
                   None if quality is None else tuple(quality))

    @classmethod
    def load(cls, path: str | Path) -> "EvaluatorPopulation":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_json(json.load(fh))
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                if isinstance(exc, InputError):
                    raise
                raise InputError(f"{path}: {exc}") from None


def pairwise_win_probability(delta_v: float, population: EvaluatorPopulation) -> float:
    """(1/k) * sum_i expit(alpha_i * delta_v) for a quality-controlled pair."""
    return float(np.mean(expit(population.alpha * delta_v)))


# -- sampling -----------------------------------------------------------------------

@dataclass(frozen=True)
class PairCounts:
    """``wins[i, j]``: number of sampled comparisons where candidate i beat j."""

    candidates: tuple[str, ...]
    wins: np.ndarray

    @property
    def total(self) -> int:
        return int(self.wins.sum())

    def win_rate(self, a: str, b: str) -> float:
        i, j = self.candidates.index(a), self.candidates.index(b)
        n = self.wins[i, j] + self.wins[j, i]
        return float(self.wins[i, j] / n) if n else float("nan")

    def to_json(self) -> dict:
        return {"candidates": list(self.candidates), "wins": self.wins.tolist()}

    @classmethod
    def from_pairs(cls, counts: Mapping[tuple[str, str], int]) -> "PairCounts":
        names = sorted({y for pair in counts for y in pair})
        wins = np.zeros((len(names), len(names)), dtype=np.int64)
        for (a, b), n in counts.items():
            wins[names.index(a), names.index(b)] += n
        return cls(tuple(names), wins)


def sample_from_utilities(u: np.ndarray, candidates: Sequence[str], m: int,
                          rng: np.random.Generator) -> PairCounts:
    """Each draw picks an evaluator uniformly and an unordered candidate pair
    uniformly, then the first beats the second with prob expit(u_a - u_b)."""
    if m < 1:
        raise InputError(f"sample count must be >= 1, got {m}")
    k, c = u.shape
    pairs = np.array(list(itertools.combinations(range(c), 2)))
    ev = rng.integers(k, size=m)
    pr = pairs[rng.integers(len(pairs), size=m)]
    a, b = pr[:, 0], pr[:, 1]
    a_wins = rng.random(m) < expit(u[ev, a] - u[ev, b])
    wins = np.zeros((c, c), dtype=np.int64)
    np.add.at(wins, (np.where(a_wins, a, b), np.where(a_wins, b, a)), 1)
    return PairCounts(tuple(candidates), wins)


def sample_pairwise_outcomes(x: str, candidates: Sequence[str], population: EvaluatorPopulation,
                             m: int, seed: int, cfg: ScenarioConfig) -> PairCounts:
    """m random-utility comparisons on instance ``x``; deterministic in ``seed``."""
    if len(candidates) < 2:
        raise InputError("need at least two candidates")
    u = population.utilities(x, candidates, cfg)
    return sample_from_utilities(u, candidates, m, np.random.default_rng(seed))


def sample_delta_outcomes(delta_v: float, population: EvaluatorPopulation, m: int, seed: int) -> PairCounts:
    """Two synthetic candidates ``y`` and ``y'`` with v(y) - v(y') = delta_v
    and equal baseline quality."""
    u = np.column_stack([population.alpha * delta_v, np.zeros(population.k)])
    return sample_from_utilities(u, ("y", "y'"), m, np.random.default_rng(seed))


# -- Bradley-Terry-Luce -------------------------------------------------------------

@dataclass
class ScoreTable:
    scores: dict[str, float]
    iterations: int
    converged: bool

    def difference(self, a: str, b: str) -> float:
        return self.scores[a] - self.scores[b]

    def to_json(self) -> dict:
        return {"scores": dict(self.scores), "iterations": self.iterations, "converged": self.converged}


def _components(adj: np.ndarray, names: Sequence[str], connection: str) -> list[list[str]] | None:
    n, labels = connected_components(csr_matrix(adj), directed=True, connection=connection)
    if n == 1:
        return None
    return [[names[i] for i in np.flatnonzero(labels == c)] for c in range(n)]


def fit_btl(counts: PairCounts, tol: float = 1e-10, max_iter: int = 10_000) -> ScoreTable:
    """Maximum-likelihood BTL scores by minorization-maximization.

    Scores are log-strengths normalised to sum to zero.  Raises
    :class:`FitError` if the comparison graph is disconnected, or if some
    group of candidates never loses to the rest (no finite maximizer).
    """
    names = counts.candidates
    w = np.asarray(counts.wins, dtype=float)
    n = w + w.T
    parts = _components(n > 0, names, "weak")
    if parts is not None:
        raise FitError(f"comparison graph is disconnected; components: {parts}")
    parts = _components(w.T > 0, names, "strong")
    if parts is not None:
        raise FitError(f"some candidates never lose to the others, so scores diverge; "
                       f"strongly connected components: {parts}")

    total_wins = w.sum(axis=1)
    s = np.zeros(len(names))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = np.exp(s)
        denom = (n / (g[:, None] + g[None, :])).sum(axis=1)
        new = np.log(total_wins / denom)
        new -= new.mean()
        change = np.max(np.abs(new - s))
        s = new
        if change < tol:
            converged = True
            break
    return ScoreTable({y: float(v) for y, v in zip(names, s)}, it, converged)


# -- asymmetric regret weighting ------------------------------------------------------

def regret_weight(delta: np.ndarray | float, alpha: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """w_i(delta) = alpha_i * delta for delta >= 0, lambda_i * alpha_i * delta below."""
    delta = np.asarray(delta, dtype=float)
    return np.where(delta >= 0, alpha * delta, lam * alpha * delta)


def _weighted_lambda(alpha: np.ndarray, lam: np.ndarray) -> float:
    # rescale first so subnormal alphas keep full precision in the products
    w = alpha / alpha.max()
    return float((lam * w).sum() / w.sum())


def lambda_eff(population: EvaluatorPopulation) -> float:
    """Sensitivity-weighted loss aversion, sum(lambda_i alpha_i) / sum(alpha_i)."""
    if population.alpha.sum() == 0:
        raise InputError("lambda_eff is undefined when every alpha is zero")
    return _weighted_lambda(population.alpha, population.lam)


@dataclass
class AsymmetryResult:
    delta: int
    scores: dict[str, float]
    gap_over: float
    gap_under: float
    ratio: float | None

    def to_json(self) -> dict:
        return {"delta": self.delta, "scores": self.scores, "gap_over": self.gap_over,
                "gap_under": self.gap_under, "ratio": self.ratio}


def population_scores_asymmetric(delta: int, population: EvaluatorPopulation) -> AsymmetryResult:
    """Population scores for y+ (delta above the warranted level), y0 and y-
    (delta below), with equal baseline quality.  ``ratio`` is
    (R(y0) - R(y-)) / (R(y+) - R(y0)), or None when it is undefined."""
    if delta < 0:
        raise InputError(f"delta must be >= 0, got {delta}")
    a, lam = population.alpha, population.lam
    r = {name: float(np.mean(regret_weight(d, a, lam))) for name, d in (("y+", delta), ("y0", 0), ("y-", -delta))}
    # gaps from the per-evaluator sums avoid cancellation in r[...] differences
    gap_over = float(np.sum(a * delta)) / a.size
    gap_under = float(np.sum(lam * a * delta)) / a.size
    # delta cancels from the ratio; compute it without the underflow-prone products
    ratio = None if delta == 0 or a.sum() == 0 else _weighted_lambda(a, lam)
    return AsymmetryResult(delta, r, gap_over, gap_under, ratio)


# -- consistency ------------------------------------------------------------------------

@dataclass
class SweepResult:
    delta_v: float
    true_delta: float
    rows: list[dict] = field(default_factory=list)

    def medians(self) -> dict[int, float]:
        out: dict[int, list[float]] = {}
        for r in self.rows:
            out.setdefault(r["m"], []).append(r["error"])
        return {m: float(np.median(v)) for m, v in out.items()}

    def fitted(self, m: int) -> np.ndarray:
        return np.array([r["fitted_delta"] for r in self.rows if r["m"] == m])

    def to_json(self) -> dict:
        return {"delta_v": self.delta_v, "true_delta": self.true_delta,
                "median_error": {str(m): e for m, e in self.medians().items()}}


def consistency_sweep(population: EvaluatorPopulation, sample_sizes: Sequence[int], seeds: Sequence[int],
                      delta_v: float = 1.0) -> SweepResult:
    """Fit BTL to sampled two-candidate data for every (m, seed) and record
    the error against the population score difference logit(P), where P is
    the mixture win probability."""
    p = pairwise_win_probability(delta_v, population)
    true = float(np.log(p / (1 - p)))
    out = SweepResult(delta_v, true)
    for m in sample_sizes:
        for seed in seeds:
            counts = sample_delta_outcomes(delta_v, population, m, seed)
            try:
                fitted = fit_btl(counts).difference("y", "y'")
            except FitError:
                # one side swept every comparison; the MLE is infinite
                fitted = float("inf") if counts.wins[0, 1] else float("-inf")
            out.rows.append({"m": int(m), "seed": int(seed), "fitted_delta": fitted,
                             "true_delta": true, "error": abs(fitted - true)})
    return out
