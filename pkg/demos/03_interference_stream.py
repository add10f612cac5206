"""A 30 second drive through an interference burst.

The middle ten seconds of an otherwise clean stream carry scattered
low-intensity returns, the signature of electromagnetic interference. The
frame score drops sharply for exactly those frames and recovers with them,
making a fixed threshold a workable online detector.
"""

import tempfile
from pathlib import Path

from pcq import generate_dataset, parse_scenario_script, score_stream

script = parse_scenario_script("""
profile=lidar2
rate=10
segment duration=10 scene=wall seed=11
segment duration=10 scene=wall noise=scattered noise.count=5000 seed=12
segment duration=10 scene=wall seed=13
""")

out = Path(tempfile.mkdtemp()) / "stream"
manifest = generate_dataset(script, out, master_seed=7)
print(f"generated {len(manifest.entries)} frames in {out}")

scores = list(score_stream(manifest.iter_frames(), script.profile))


def sparkline(values, lo=-0.2, hi=1.0):
    ramp = "_.-=*#"
    span = hi - lo
    idx = [min(len(ramp) - 1, max(0, int((v - lo) / span * len(ramp)))) for v in values]
    return "".join(ramp[i] for i in idx)


w = [s.score for s in scores]
print("\nweighted score, one character per frame (low _ to high #):")
for start in range(0, len(w), 100):
    label = "clean" if start != 100 else "noisy"
    print(f"  {label:5s} {sparkline(w[start:start + 100])}")

clean = w[:100] + w[200:]
noisy = w[100:200]
print(f"\nclean frames: min {min(clean):+.4f}  max {max(clean):+.4f}")
print(f"noisy frames: min {min(noisy):+.4f}  max {max(noisy):+.4f}")
print(f"gap between the worst clean and best noisy frame: {min(clean) - max(noisy):.4f}")

threshold = 0.5
flagged = [s.frame_id for s in scores if s.score < threshold]
print(f"\nthreshold {threshold}: flags frames {flagged[0]}..{flagged[-1]} "
      f"({len(flagged)} of {len(scores)})")
