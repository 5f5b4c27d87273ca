"""Print the resultant force around a point wedged between free and blocked samples.

Valid samples pull, invalid ones push, so the arrow should point away from
the blocked cluster and toward the free one.
"""

import numpy as np

from fdit.forces import resultant_force
from fdit.knn import build_ellipsoid

rng = np.random.default_rng(0)
x = np.array([0.5, 0.5])
free = x + rng.normal([0.15, 0.0], 0.03, (12, 2))
blocked = x + rng.normal([-0.1, 0.0], 0.03, (8, 2))

res = resultant_force(x, free, blocked)
e = build_ellipsoid(x, res.force, 0.1)
print("force        ", np.round(res.force, 3))
print("direction    ", np.round(e.direction, 3))
print(f"stretch      gamma={e.gamma:.3f} major={e.major:.4f} minor={e.minor:.4f}")
