#!/usr/bin/env python3
"""Profile a frequency curve to find quadrature bottlenecks."""

import cProfile
import pstats

import numpy as np

from ou_frequency.config import QuadratureConfig
from ou_frequency.fields import ProductEigenfunction
from ou_frequency.frequency import BoundKind, compute_curve

# u_1(x) u_0(y) on R^2, radii 2..20
field = ProductEigenfunction.from_levels([1, 0])
radii = np.arange(2.0, 20.05, 0.1)
quad = QuadratureConfig()

print(f"Profiling {field!r} on {radii.size} radii...")
print("=" * 60)

profiler = cProfile.Profile()
profiler.enable()

curve = compute_curve(field, radii, BoundKind.GROWTH, 0.1, quad)

profiler.disable()

print(f"\n{'='*60}")
print("RESULTS")
print(f"{'='*60}")
print(f"U(r_max) = {curve.U[-1]:.12g}")
print(f"min margin = {min(curve.margin):.6g}")

print(f"\n{'='*60}")
print("TOP TIME CONSUMERS")
print(f"{'='*60}")
stats = pstats.Stats(profiler)
stats.strip_dirs()
stats.sort_stats("cumulative")
stats.print_stats(30)
