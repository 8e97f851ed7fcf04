"""Prometheus metrics definitions for optimizer and threshold runs."""

from pathlib import Path

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

# -- Optimizer --
OPTIMIZER_RUNS = Counter(
    "ghz_robustness_optimizer_runs_total",
    "Total max_bell optimizations",
    ["channel", "converged"],
)
SEESAW_SWEEPS = Histogram(
    "ghz_robustness_seesaw_sweeps",
    "See-saw sweeps needed per start",
    buckets=(1, 2, 5, 10, 20, 50, 100, 200, 500, 1000),
)
OPTIMIZER_DURATION = Histogram(
    "ghz_robustness_optimizer_duration_seconds",
    "Wall time of one max_bell call",
    ["channel"],
    buckets=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0),
)
POLISH_ACCEPTED = Counter(
    "ghz_robustness_polish_accepted_total",
    "Simplex polishes that improved the see-saw result",
)

# -- Threshold search --
THRESHOLD_PROBES = Counter(
    "ghz_robustness_threshold_probes_total",
    "max_bell probes issued by numeric_pmax",
    ["channel"],
)

# -- Verification --
VERIFICATION_CHECKS = Counter(
    "ghz_robustness_verification_checks_total",
    "Oracle comparisons performed by the verification suite",
    ["check", "status"],
)


def write_metrics(path: Path | str) -> None:
    """Persist the default registry in Prometheus text exposition format."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(target), REGISTRY)
