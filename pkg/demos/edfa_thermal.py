"""Thermal derating of the terminal's amplifier.

The slope of power against case temperature is calibrated so that the
amplifier starts at 2.5 W and still gives 2 W after a 6-minute pass.  The
same model then shows why hour-long links need better heat sinking.
"""

from __future__ import annotations

import numpy as np

from lasercom_twin import amplifier as amp

result = amp.calibrate(amp.CalibrationConstraints(p0_w=2.5, p_min_w=2.0, t1_s=360.0))
model = result.model
print(f"calibrated slope {model.slope_w_per_c:.5f} W/degC (tau {model.tau_s:g} s, "
      f"steady-state rise {model.delta_t_ss_c:g} degC)")

times = np.array([0.0, 60.0, 180.0, 360.0, 900.0, 1800.0, 3600.0])
temp, power = amp.trajectory(model, 25.0, times)
for t, T, P in zip(times, temp, power):
    print(f"  t = {t:6.0f} s   T = {T:6.2f} degC   P = {P:5.3f} W")

for duration in (360.0, 3600.0):
    floor = amp.guarantee(model, 25.0, duration)
    warning = amp.thermal_warning(model, 25.0, duration)
    print(f"\n{duration:g} s link: minimum power {floor:.3f} W")
    print(f"  {warning or 'no thermal warning'}")
