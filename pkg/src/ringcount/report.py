"""Tally reports: text summary, tab-separated counts, histogram figure."""

from .protocol import TallyResult
from .scenario import ScenarioConfig


def occupied_extremes(counts: dict[int, int]) -> tuple[int, int] | None:
    """(poorest, richest) occupied bucket ids, or None when all empty."""
    occupied = [b for b, k in counts.items() if k > 0]
    if not occupied:
        return None
    return min(occupied), max(occupied)


def format_report(result: TallyResult, cfg: ScenarioConfig) -> str:
    lines = [
        f"ring size {cfg.ring_size}, buckets {cfg.bucket_count}, "
        f"mode {cfg.mode}, params {cfg.param_mode}",
    ]
    for b in sorted(result.counts):
        k = result.counts[b]
        if k > 0 or cfg.mode == "generic":
            lines.append(f"COUNT {b} {k}")
    extremes = occupied_extremes(result.counts)
    if cfg.mode == "centimillionaire" and extremes:
        poorest, richest = extremes
        lines.append(f"poorest: {poorest} centimillions "
                     f"(subgroup of {result.counts[poorest]})")
        lines.append(f"richest: {richest} centimillions "
                     f"(subgroup of {result.counts[richest]})")
    for b in sorted(result.faults):
        lines.append(f"FAULT {b} {result.faults[b]}")
    lines.append(f"protocol calls: {result.protocol_calls}")
    lines.append(f"announce calls: {result.announce_calls}")
    lines.append(f"total calls: {result.protocol_calls + result.announce_calls}")
    return "\n".join(lines) + "\n"


def write_counts_tsv(result: TallyResult, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("bucket\tcount\n")
        for b in sorted(result.counts):
            fh.write(f"{b}\t{result.counts[b]}\n")


def render_histogram(result: TallyResult, path, cfg: ScenarioConfig) -> None:
    """Bar chart of per-bucket counts, written to an image file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    buckets = sorted(result.counts)
    counts = [result.counts[b] for b in buckets]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(buckets, counts, width=0.8)
    ax.set_xlabel("wealth bucket (centimillions)"
                  if cfg.mode == "centimillionaire" else "bucket")
    ax.set_ylabel("members")
    ax.set_title(f"bucket occupancy, N={cfg.ring_size}")
    ax.set_ylim(0, max(counts + [1]) + 1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
