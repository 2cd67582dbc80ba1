"""Per-round evaluation records."""

import csv
import io
from dataclasses import dataclass, field

COLUMNS = ("round", "p", "split", "accuracy", "loss", "bytes_up_total", "bytes_down_total", "wallclock_ms")


@dataclass
class MetricTrace:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)  # run-level counters, not written to the CSV

    def add(self, round_idx, p, split, accuracy, loss, bytes_up, bytes_down, wallclock_ms=0):
        self.rows.append(
            {
                "round": int(round_idx),
                "p": float(p),
                "split": split,
                "accuracy": float(accuracy),
                "loss": float(loss),
                "bytes_up_total": int(bytes_up),
                "bytes_down_total": int(bytes_down),
                "wallclock_ms": int(wallclock_ms),
            }
        )

    def final(self, split="test"):
        """p -> accuracy at the last recorded round."""
        rows = [r for r in self.rows if r["split"] == split]
        if not rows:
            return {}
        last = max(r["round"] for r in rows)
        return {r["p"]: r["accuracy"] for r in rows if r["round"] == last}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([r["round"], repr(r["p"]), r["split"], repr(r["accuracy"]), repr(r["loss"]), r["bytes_up_total"], r["bytes_down_total"], r["wallclock_ms"]])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())
