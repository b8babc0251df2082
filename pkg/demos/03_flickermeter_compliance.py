"""Flickermeter check against rectangular-modulation compliance points.

Each point of the 230 V / 50 Hz table should give P_st = 1.  The sinusoidal
8.8 Hz calibration signal should give a peak P_inst of 1.
"""

import time

from vfirec.flickermeter import CALIBRATION_DV, CALIBRATION_HZ, compute_pinst, pst
from vfirec.signal_io import ModulationSpec, synthesize_am

POINTS = [(1, 2.724), (2, 2.211), (7, 1.459), (39, 0.906), (110, 0.725), (1620, 0.402)]

cal = synthesize_am(230.0, 50.0, 20000.0,
                    ModulationSpec("sinusoidal", CALIBRATION_DV, CALIBRATION_HZ, 60.0))
print(f"8.8 Hz / 0.25 %: max P_inst = {compute_pinst(cal).settled().max():.4f}")

print("\n  cpm   dV/V %   P_st    time")
for cpm, dv in POINTS:
    w = synthesize_am(230.0, 50.0, 20000.0, ModulationSpec("rectangular", dv / 100, cpm, 600.0))
    t0 = time.perf_counter()
    p = pst(w).p_st
    print(f"{cpm:6d}  {dv:6.3f}  {p:6.4f}  {time.perf_counter() - t0:5.2f} s")
