"""Effective window parameter of the mollified heat equation for several mollifiers."""

from polymerlab.kernels import GaussianBump
from polymerlab.she import MOLLIFIERS, continuum_window, she_variance_limit

phi = GaussianBump(0.5)
for name, make in MOLLIFIERS.items():
    moll = make()
    w = continuum_window(moll, 1e-4, 0.0)
    var = she_variance_limit(moll, 0.0, 1.0, phi)
    print(f"{name:>18}: theta_eff = {w.theta_eff:.6f}  window gap at eps=1e-4 = {w.gap:.2e}  variance limit = {var.value:.5f}")
