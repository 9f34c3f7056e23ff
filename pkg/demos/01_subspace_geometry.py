# A small 3-d walk-through of the geometric kernel: a line at 30 degrees
# elevation and the horizontal plane share no direction, but their
# one-dimensional flag mean sits halfway between them; gating on the
# principal angle decides whether that mean counts as a shared score, and
# deflation peels the claimed direction out of each subspace.

import numpy as np

from psidecomp import (
    OrthonormalBasis,
    deflate,
    flag_mean_direction,
    principal_angle,
)

line = OrthonormalBasis(np.array([[np.cos(np.pi / 6)], [0.0], [np.sin(np.pi / 6)]]))
plane = OrthonormalBasis(np.eye(3)[:, :2])

w = flag_mean_direction([line, plane])
print("flag mean direction:", np.round(w.vector, 6))

for name, subspace in (("line", line), ("plane", plane)):
    angle = np.degrees(principal_angle(w, subspace))
    print(f"principal angle to the {name}: {angle:.2f} deg")

for lam in (10.0, 20.0):
    accepted = all(
        principal_angle(w, b) < np.deg2rad(lam) for b in (line, plane)
    )
    print(f"gate at {lam:.0f} deg threshold:", "accept" if accepted else "reject")

remaining = deflate(plane, w)
print("plane after deflation spans:", np.round(remaining.columns[:, 0], 6))
print("line after deflation has dimension:",
      deflate(line, w).r)
