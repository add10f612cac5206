"""Choosing a threshold: sweep it over a labeled score series.

Given scored frames labeled anomalous (positive) or clean (negative), each
candidate threshold yields two fractions: how many anomalous frames score
below it (caught) and how many clean frames score at or above it (kept).
The sweep plus the per-class CDFs make the trade-off visible.
"""

import numpy as np

from pcq import (
    BUILTIN_PROFILES,
    NoiseSpec,
    Scattered,
    build_scene,
    build_threshold_report,
    frame_score,
    generate_scene,
    inject_noise,
    project_frame,
    score_cdf,
)
from pcq.report import ScoreRow

profile = BUILTIN_PROFILES["lidar2"]
rng = np.random.default_rng(404)

rows = []
labels = {}
scene = build_scene("wall", profile)
for fid in range(60):
    frame = generate_scene(scene, seed=int(rng.integers(1 << 30)), frame_id=fid)
    anomalous = fid % 3 == 0  # every third frame gets an interference dose
    if anomalous:
        dose = int(rng.integers(800, 4000))
        frame = inject_noise(frame, NoiseSpec(Scattered(count=dose),
                                              seed=int(rng.integers(1 << 30))), profile)
    fs = frame_score(project_frame(frame, profile))
    rows.append(ScoreRow(fid, fid * 100_000, fs.score,
                         fs.unweighted_score, fs.mean_range_variance))
    labels[fid] = anomalous

n_pos = sum(labels.values())
print(f"scored {len(rows)} frames: {n_pos} anomalous, {len(rows) - n_pos} clean")

report = build_threshold_report(rows, labels, thresholds=[i / 10 for i in range(0, 10)])
print(f"\n{'threshold':>9s} {'caught':>8s} {'kept':>8s}")
for row in report.rows:
    bar = "#" * int(row.kept_fraction * 20)
    print(f"{row.threshold:>9.1f} {row.kept_fraction:>8.2f} {row.filtered_fraction:>8.2f}  {bar}")

best = min(report.rows, key=lambda r: (1 - r.kept_fraction) + (1 - r.filtered_fraction))
print(f"\nbest balance here: threshold {best.threshold:.1f} catches "
      f"{best.kept_fraction:.0%} of anomalies while keeping "
      f"{best.filtered_fraction:.0%} of clean frames")

print("\nper-class score CDFs (quartiles):")
for name, cls in (("anomalous", True), ("clean", False)):
    pts = score_cdf([r.score for r in rows if labels[r.frame_id] is cls])
    quartiles = [pts[int(q * (len(pts) - 1))][0] for q in (0.0, 0.25, 0.5, 0.75, 1.0)]
    print(f"  {name:10s} " + "  ".join(f"{q:+.3f}" for q in quartiles))
