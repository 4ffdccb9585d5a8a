# A negative mass from a core in a shell
# ======================================
#
# The lattice needs point masses of negative sign.  The usual physical
# stand-in is a rigid shell holding a heavy core on springs.  Shake the shell
# just above the core resonance and the core swings out of phase.  The
# force needed then points against the acceleration, so the shell behaves
# as if its mass were negative.

import numpy as np

from willis_lattice import ResonatorParams, design_for_mass, effective_mass, negative_band

res = ResonatorParams(m_shell=1.0, m_core=1.0, k_total=1.0)
lo, hi = negative_band(res)
print(f"Re(m_eff) < 0 for omega in ({lo:.6f}, {hi:.6f})")
for w in (0.5, 0.99, 1.01, 1.2, 1.41, 1.5, 3.0):
    print(f"  omega = {w:5.2f}   m_eff = {effective_mass(res, w):+.4f}")

# Losses enter through a dashpot in parallel with the springs.  They keep
# Im(m_eff) >= 0 and make the mass finite at resonance.

lossy = ResonatorParams(1.0, 1.0, 1.0, gamma=0.05)
print("\nat the former pole with damping:", effective_mass(lossy, 1.0))

# Inverse design: pick the lattice's negative member -h m + delta h^2 at a
# working frequency.  Then solve for a core and spring that reproduce it.

h, m, delta, omega = 0.01, 1.0, 0.1 + 0.05j, 1.0
target = -h * m + delta * h**2
design = design_for_mass(target, omega, m_shell=0.0)
print("\ntarget", target)
print("design", design)
print("check ", effective_mass(design, omega))
