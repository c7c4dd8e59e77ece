"""A topological obstruction and how the construction reports it.

The stacked family carries a Chern-type winding in the (k1, k2) plane for one
Kramers partner and its time reverse for the other.  A symmetric frame does
not exist; the builder stops with the Z2 indices that certify this, and the
periodic-only mode still returns a frame without the symmetry.
"""

from blochgauge import ObstructionError, build_frame, check_frame, make_matching, make_projections, two_step_log
from blochgauge.invariants import z2_report

# the simplest obstructed matching family: diag(e^{2 pi i k}, e^{-2 pi i k})
alpha = make_matching("diag-winding", {"N": 32, "w": 1})
rep = z2_report(alpha)
print("diag-winding indices:", rep.indices, "consistent:", rep.consistency)
try:
    two_step_log(alpha)
except ObstructionError as err:
    print("symmetric log refused:", err.report.indices)
print("without symmetry the log exists, residual", f"{two_step_log(alpha, mode='trs-broken').residual:.1e}")

P = make_projections("stacked-2d", {"N": 32, "w": 1})
try:
    build_frame(P, mode="symmetric")
except ObstructionError as err:
    print(f"stage {err.stage}: indices {err.report.indices}")

frame = build_frame(P, mode="periodic-only")
check = check_frame(frame, P)
print("periodic-only frame passed:", check.passed, "trs defect", f"{check.info['trs_reported']:.2f}")
