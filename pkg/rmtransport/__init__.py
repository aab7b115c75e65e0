"""
This package provides a discrete-ordinates solver for the time-dependent one-group transport equation in
1D slab geometry, discretized with linear-discontinuous finite elements in space and backward Euler in time,
accelerated with the second-moment method, together with reduced-memory treatments of the previous-step
slope of the angular flux and a harness to compare them.
"""
