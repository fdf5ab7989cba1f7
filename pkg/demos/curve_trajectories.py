"""Curve codes, trajectory classes and cutting intensity for a few
hand-made lateral offset profiles through one left curve."""

import numpy as np

from drivestyle.curves import CurveOfInterest, extract_window
from drivestyle.ingest import SubjectTrace
from drivestyle.transient import intensity

RATE = 50.0
HALF_WIDTH = 0.24


def window(dev, v=18.0):
    n = dev.size
    t = np.arange(n) / RATE
    s = v * t
    z = np.zeros(n)
    trace = SubjectTrace(
        subject_id="demo", t=t, v_x=np.full(n, v), a_x=z, a_y=np.full(n, 0.004 * v * v),
        d_CL=dev, kappa=np.full(n, 0.004), s=s, road_type=np.full(n, "rural"),
        lane_change=z.astype(bool), oncoming=z.astype(bool), street_id=np.full(n, ""),
        valid=np.ones(n, bool), segment=np.zeros(n, np.int64), sample_rate_hz=RATE,
    )
    return extract_window(trace, CurveOfInterest(1, "left", s[0], s[-1], 0.004))


u = np.linspace(0, 1, 600)
profiles = {
    "stays central": 0.05 * np.sin(6 * np.pi * u),
    "cuts through the apex": 0.5 * np.sin(np.pi * u),
    "enters wide, exits inside": 0.6 * (u - 0.5) * 2,
    "hugs the inside": np.full_like(u, 0.45),
}
for name, dev in profiles.items():
    res = intensity(window(dev), HALF_WIDTH)
    print(f"{name:28s} {res.code}  {res.trajectory_class.value:20s} intensity {res.intensity:6.2f}")
