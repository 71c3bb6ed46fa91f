"""Uniform random search over the tuned hyper-parameter intervals.

The default space is the empirically-optimal interval per parameter; the
wide variant unions in the adjacent suboptimal intervals. ``subsample`` is
held fixed at its default because its value showed no effect on validation
error. Search is plain uniform sampling (no adaptive strategy) so a seed
fully determines the trial sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from . import gbdt
from .errors import DataError
from .prng import SplitMix64


@dataclass(frozen=True)
class ContinuousDomain:
    lo: float
    hi: float

    def sample(self, rng: SplitMix64) -> float:
        return rng.uniform(self.lo, self.hi)

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class IntRangeDomain:
    lo: int
    hi: int

    def sample(self, rng: SplitMix64) -> int:
        return rng.randint(self.lo, self.hi)

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi and int(value) == value


@dataclass(frozen=True)
class ChoiceDomain:
    values: tuple

    def sample(self, rng: SplitMix64):
        return rng.choice(self.values)

    def contains(self, value) -> bool:
        return value in self.values


@dataclass(frozen=True)
class SearchSpace:
    domains: dict

    def sample_params(self, rng: SplitMix64, base: gbdt.GbdtParams) -> gbdt.GbdtParams:
        """One uniform draw per domain, in sorted parameter order."""
        draws = {}
        for name in sorted(self.domains):
            draws[name] = self.domains[name].sample(rng)
        return replace(base, **draws)


def default_space(wide: bool = False) -> SearchSpace:
    """Tuned intervals per parameter; ``wide`` unions the suboptimal ranges."""
    if not wide:
        domains = {
            "learning_rate": ContinuousDomain(0.0245, 0.0425),
            "max_depth": ChoiceDomain((4, 5)),
            "num_leaves": IntRangeDomain(25, 300),
            "n_estimators": IntRangeDomain(100, 200),
            "min_child_samples": ChoiceDomain((2, 3)),
            "colsample_bytree": ContinuousDomain(0.75, 1.0),
        }
    else:
        domains = {
            "learning_rate": ContinuousDomain(0.023, 0.073),
            "max_depth": ChoiceDomain((3, 4, 5, 6, 7)),
            "num_leaves": IntRangeDomain(8, 300),
            "n_estimators": IntRangeDomain(99, 310),
            "min_child_samples": ChoiceDomain((1, 2, 3, 4)),
            "colsample_bytree": ContinuousDomain(0.75, 1.0),
        }
    return SearchSpace(domains=domains)


@dataclass
class TrialReport:
    trial: int
    params: gbdt.GbdtParams
    valid_rmse: float | None
    test_rmse: float | None
    wall_time_s: float
    failed: bool = False
    error: str | None = None


@dataclass
class SearchResult:
    reports: list[TrialReport]
    best: TrialReport


def _default_evaluate(params, train_set, valid_set, test_set, scaler):
    model = gbdt.train(train_set, valid_set, params, scaler=scaler)
    valid_rmse = model.metadata["valid_rmse"]
    test_rmse = None
    if test_set is not None:
        test_x, test_y = (
            test_set.to_arrays() if hasattr(test_set, "to_arrays") else test_set
        )
        test_rmse = gbdt.rmse(gbdt.predict(model, test_x), test_y)
    return valid_rmse, test_rmse


def random_search(
    space: SearchSpace,
    n_trials: int,
    seed: int,
    train_set,
    valid_set,
    test_set=None,
    base_params: gbdt.GbdtParams | None = None,
    evaluate=None,
) -> SearchResult:
    """Run ``n_trials`` independent trials; best = lowest validation RMSE,
    ties resolved to the earlier trial. Failed trials are recorded and
    skipped for best-selection; if every trial fails, that is an error.

    ``evaluate`` may override the train-and-score step (tests use this);
    the sampling sequence is independent of it.
    """
    if n_trials < 1:
        raise DataError("n_trials must be >= 1")
    base = base_params or gbdt.GbdtParams()
    evaluate = evaluate or _default_evaluate
    rng = SplitMix64(seed)
    reports: list[TrialReport] = []
    for trial in range(n_trials):
        params = space.sample_params(rng, base)
        started = time.perf_counter()
        try:
            valid_rmse, test_rmse = evaluate(
                params, train_set, valid_set, test_set, None
            )
            reports.append(
                TrialReport(
                    trial=trial,
                    params=params,
                    valid_rmse=valid_rmse,
                    test_rmse=test_rmse,
                    wall_time_s=time.perf_counter() - started,
                )
            )
        except Exception as exc:  # noqa: BLE001 - a bad trial must not kill the sweep
            reports.append(
                TrialReport(
                    trial=trial,
                    params=params,
                    valid_rmse=None,
                    test_rmse=None,
                    wall_time_s=time.perf_counter() - started,
                    failed=True,
                    error=str(exc),
                )
            )
    ok = [r for r in reports if not r.failed]
    if not ok:
        raise DataError("all trials failed; see trial reports")
    best = min(ok, key=lambda r: (r.valid_rmse, r.trial))
    return SearchResult(reports=reports, best=best)


def format_trial_line(report: TrialReport) -> str:
    params = report.params
    pairs = ",".join(
        f"{k}={getattr(params, k)!r}"
        for k in (
            "learning_rate",
            "max_depth",
            "num_leaves",
            "n_estimators",
            "min_child_samples",
            "colsample_bytree",
            "subsample",
        )
    )
    if report.failed:
        return f"trial={report.trial} failed={report.error!r} params{{{pairs}}}"
    return (
        f"trial={report.trial} rmse_valid={report.valid_rmse!r} "
        f"rmse_test={report.test_rmse!r} params{{{pairs}}}"
    )


def write_trial_log(result: SearchResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for report in result.reports:
            fh.write(format_trial_line(report) + "\n")
        fh.write(f"best trial={result.best.trial}\n")
