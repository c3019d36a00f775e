"""Agreement between automatic motion scores and pairwise human votes.

Votes name two videos from the same prompt and a human outcome (A, B or tie)
for one of three questions. A video is identified either by explicit
``video_a``/``video_b`` ids or by the (prompt, model) pair, where the prompt
defaults to the vote's ``pair_id``.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

QUESTIONS = ("body_structure", "balance", "motion_naturalness")
OUTCOMES = ("A", "B", "tie")
BASE_RATING = 1500.0
K_FACTOR = 32.0


class MissingScoreError(KeyError):
    pass


class DegenerateError(ValueError):
    """Rank correlation of a constant series."""


@dataclass(frozen=True)
class PairwiseVote:
    pair_id: str
    model_a: str
    model_b: str
    question: str
    outcome: str
    video_a: Optional[str] = None
    video_b: Optional[str] = None
    prompt_id: Optional[str] = None

    def __post_init__(self):
        if self.model_a == self.model_b and self.video_a is None:
            raise ValueError(f"vote {self.pair_id}: model_a equals model_b")
        out = {"a": "A", "b": "B", "tie": "tie"}.get(self.outcome.strip().lower())
        if out is None:
            raise ValueError(f"vote {self.pair_id}: outcome must be A, B or tie, got {self.outcome!r}")
        object.__setattr__(self, "outcome", out)

    @property
    def score_a(self) -> float:
        """Game credit for side A: 1 win, 0.5 tie, 0 loss."""
        return {"A": 1.0, "B": 0.0, "tie": 0.5}[self.outcome]

    @property
    def decisive(self) -> bool:
        return self.outcome != "tie"

    def video_keys(self) -> tuple[Hashable, Hashable]:
        if self.video_a is not None and self.video_b is not None:
            return self.video_a, self.video_b
        prompt = self.prompt_id or self.pair_id
        return (prompt, self.model_a), (prompt, self.model_b)


# ------------------------------------------------------------ statistics


def pairwise_agreement(votes: Iterable[PairwiseVote], scores: Mapping[Hashable, float]) -> float:
    """Fraction of decisive human votes whose preferred video the metric scores higher.

    Metric ties earn half credit. Returns NaN when there is no decisive vote.
    """
    credit, n = 0.0, 0
    for v in votes:
        if not v.decisive:
            continue
        ka, kb = v.video_keys()
        try:
            sa, sb = scores[ka], scores[kb]
        except KeyError as exc:
            raise MissingScoreError(f"vote {v.pair_id}: no score for video {exc.args[0]!r}") from None
        diff = np.sign(sa - sb)
        human = 1.0 if v.outcome == "A" else -1.0
        credit += 0.5 if diff == 0 else float(diff == human)
        n += 1
    return credit / n if n else math.nan


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D of equal length")
    if len(x) < 2:
        raise DegenerateError("need at least 2 observations")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0.0:
        raise DegenerateError("rank correlation of a constant series")
    return float(np.clip((rx @ ry) / denom, -1.0, 1.0))


def bootstrap_std(x, y, statistic: Callable[[np.ndarray, np.ndarray], float] = spearman_rho,
                  resamples: int = 1000, seed: int = 42, workers: int = 1) -> float:
    """Standard deviation of ``statistic`` over paired resamples with replacement.

    Resample i draws from its own generator spawned off ``seed``, so the
    result does not depend on ``workers``. Resamples on which the statistic
    is undefined (DegenerateError) are skipped.
    """
    if resamples < 100:
        raise ValueError("resamples must be at least 100")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    children = np.random.SeedSequence(seed).spawn(resamples)

    def one(ss) -> float:
        idx = np.random.default_rng(ss).integers(0, n, n)
        try:
            return float(statistic(x[idx], y[idx]))
        except DegenerateError:
            return math.nan

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(one, children))
    else:
        values = [one(ss) for ss in children]
    vals = np.array([v for v in values if not math.isnan(v)])
    if len(vals) < 2:
        return math.nan
    return float(vals.std(ddof=1))


@dataclass
class EloTable:
    ratings: dict[str, float] = field(default_factory=dict)
    games_played: dict[str, int] = field(default_factory=dict)

    def ranked(self) -> list[tuple[str, float, int]]:
        return sorted(((m, r, self.games_played[m]) for m, r in self.ratings.items()),
                      key=lambda row: (-row[1], row[0]))


def expected_score(r_a: float, r_b: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / 400.0))


def elo_ratings(votes: Iterable[PairwiseVote], k: float = K_FACTOR, base: float = BASE_RATING,
                shuffle_seed: Optional[int] = None) -> EloTable:
    """Single sequential pass over the votes, in input order unless shuffled."""
    votes = list(votes)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(votes))
        votes = [votes[i] for i in order]
    table = EloTable()
    for v in votes:
        for m in (v.model_a, v.model_b):
            table.ratings.setdefault(m, base)
            table.games_played.setdefault(m, 0)
        ra, rb = table.ratings[v.model_a], table.ratings[v.model_b]
        delta = k * (v.score_a - expected_score(ra, rb))
        table.ratings[v.model_a] = ra + delta
        table.ratings[v.model_b] = rb - delta
        table.games_played[v.model_a] += 1
        table.games_played[v.model_b] += 1
    return table


def win_matrix(votes: Iterable[PairwiseVote]) -> tuple[list[str], np.ndarray]:
    """Row-vs-column win fraction with ties as half; NaN where no games."""
    credit: dict[tuple[str, str], float] = defaultdict(float)
    games: dict[tuple[str, str], int] = defaultdict(int)
    models: set[str] = set()
    for v in votes:
        a, b = v.model_a, v.model_b
        models.update((a, b))
        credit[a, b] += v.score_a
        credit[b, a] += 1.0 - v.score_a
        games[a, b] += 1
        games[b, a] += 1
    names = sorted(models)
    M = np.full((len(names), len(names)), np.nan)
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if games.get((a, b)):
                M[i, j] = credit[a, b] / games[a, b]
    return names, M


def hard_disagreement_rate(votes: Iterable[PairwiseVote]) -> float:
    """Share of annotator pairs on a repeated (pair_id, question) with opposite hard choices.

    A tie is compatible with either side. NaN when nothing is repeated.
    """
    groups: dict[tuple[str, str], list[str]] = defaultdict(list)
    for v in votes:
        groups[v.pair_id, v.question].append(v.outcome)
    pairs = clash = 0
    for outcomes in groups.values():
        for i in range(len(outcomes)):
            for j in range(i + 1, len(outcomes)):
                pairs += 1
                clash += {outcomes[i], outcomes[j]} == {"A", "B"}
    return clash / pairs if pairs else math.nan


def human_video_scores(votes: Iterable[PairwiseVote]) -> dict[Hashable, float]:
    """Mean game credit of each video over all votes it appears in."""
    total: dict[Hashable, float] = defaultdict(float)
    count: dict[Hashable, int] = defaultdict(int)
    for v in votes:
        ka, kb = v.video_keys()
        total[ka] += v.score_a
        total[kb] += 1.0 - v.score_a
        count[ka] += 1
        count[kb] += 1
    return {key: total[key] / count[key] for key in total}


# ------------------------------------------------------------- file I/O


def read_votes(path: str | Path) -> list[PairwiseVote]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"pair_id", "model_a", "model_b", "question", "outcome"}
        missing = need - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: votes CSV lacks columns {sorted(missing)}")
        return [PairwiseVote(row["pair_id"], row["model_a"], row["model_b"], row["question"],
                             row["outcome"], row.get("video_a") or None, row.get("video_b") or None,
                             row.get("prompt_id") or None)
                for row in reader]


ID_COLUMNS = ("video_id", "model", "prompt_id", "subject_id", "error")


@dataclass
class ScoreTable:
    metrics: list[str]
    rows: list[dict[str, str]]

    def lookup(self, metric: str) -> dict[Hashable, float]:
        """Scores keyed by video id and by (prompt_id, model)."""
        out: dict[Hashable, float] = {}
        for row in self.rows:
            raw = row.get(metric, "")
            if raw in ("", None):
                continue
            value = float(raw)
            if row.get("video_id"):
                out[row["video_id"]] = value
            if row.get("prompt_id") and row.get("model"):
                out[row["prompt_id"], row["model"]] = value
        return out


def read_scores(path: str | Path) -> ScoreTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = list(reader.fieldnames or ())
        rows = list(reader)
    if "video_id" not in fields and not {"prompt_id", "model"} <= set(fields):
        raise ValueError(f"{path}: scores CSV needs video_id or prompt_id+model columns")
    metrics = []
    for name in fields:
        if name in ID_COLUMNS:
            continue
        try:
            [float(r[name]) for r in rows if r[name] != ""]
        except ValueError:
            continue
        metrics.append(name)
    return ScoreTable(metrics, rows)


# ------------------------------------------------------- alignment report


@dataclass(frozen=True)
class AlignmentRow:
    metric: str
    question: str
    n_votes: int
    n_videos: int
    agreement: float
    rho: float
    rho_std: float
    hard_disagreement: float


def alignment_report(votes: Sequence[PairwiseVote], table: ScoreTable,
                     questions: Optional[Sequence[str]] = None, resamples: int = 1000,
                     seed: int = 42, workers: int = 1) -> tuple[list[AlignmentRow], list[str]]:
    """Agreement and Spearman rho (+- bootstrap std) per metric and question.

    Votes whose videos have no score are dropped and listed in the second
    return value. The "pooled" question uses every vote.
    """
    if questions is None:
        questions = sorted({v.question for v in votes}, key=lambda q: (q not in QUESTIONS, q))
    rows: list[AlignmentRow] = []
    missing: list[str] = []
    for metric in table.metrics:
        scores = table.lookup(metric)
        usable = []
        for v in votes:
            ka, kb = v.video_keys()
            if ka in scores and kb in scores:
                usable.append(v)
            else:
                gone = [k for k in (ka, kb) if k not in scores]
                missing.append(f"{metric}: vote {v.pair_id}/{v.question} has no score for {gone}")
        for q in list(questions) + ["pooled"]:
            subset = usable if q == "pooled" else [v for v in usable if v.question == q]
            human = human_video_scores(subset)
            keys = list(human)
            x = [scores[k] for k in keys]
            y = [human[k] for k in keys]
            try:
                rho = spearman_rho(x, y)
                std = bootstrap_std(x, y, spearman_rho, resamples, seed, workers)
            except DegenerateError:
                rho = std = math.nan
            rows.append(AlignmentRow(metric, q, sum(v.decisive for v in subset), len(keys),
                                     pairwise_agreement(subset, scores), rho, std,
                                     hard_disagreement_rate(subset)))
    return rows, missing
