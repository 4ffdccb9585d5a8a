# Closed-form constitutive blocks of one cell
# ===========================================
#
# A cell of the lattice is a diamond of springs.  Inside it sit two point
# masses of opposite sign, ``h m`` and ``-h m + delta h^2``, each held by two
# rigid rods to the top and bottom corners.  Because the rods slave the hidden
# masses to the corners, the masses move with the *gradient* of the
# displacement field, not just with its value.  That turns into stress
# driven by velocity and momentum driven by strain.
#
# We start with the single-pair cell and print the coupling blocks in the
# fixed vector basis: stress as (s11, s21, s12, s22), gradient as
# (du1/dx1, du2/dx1, du1/dx2, du2/dx2).

import numpy as np

from willis_lattice import (
    CellParams,
    GradientState,
    block_matrix,
    coupling_tensors,
    effective_law,
    grad_to_vec4,
    hidden_displacement,
    momentum_density,
    primed_tensors,
    spring_network_elasticity,
    symmetric_variant_params,
)

np.set_printoptions(precision=4, suppress=True)

omega = 2.0
cell = CellParams(h=0.01, K=1.0, m=1.0, c=0.5, delta=1.0)
S, D = coupling_tensors(cell, omega)
print("S (stress from velocity):\n", S)
print("D equals S transposed:", np.array_equal(D, S.T))

# The hidden masses sit at (-c h, 0) and (c h, 0).  A vertical stretch
# w = du/dx2 moves the top and bottom corners apart.  The rods then swing the
# masses sideways by s = (w2 / c, c w1):

print("s for w = (3, 4), c = 0.5:", hidden_displacement([3, 4], 0.5))

# The positive mass moves by +h s and the negative one by -h s, so the net
# momentum carries the O(1) term -i omega m s.  This term does not vanish
# as h -> 0.

state = GradientState(u0=[1, 0], w=[0, 1])
print("momentum density:", momentum_density(CellParams(h=0.01, K=1, m=1, c=0.5), state, omega))

# Assemble the full 6x6 block law [[C, S], [D, rho]].  The elastic block
# comes from the diamond network alone, and the law is symmetric.

C = spring_network_elasticity(cell.K, cell.h)
B = block_matrix(effective_law(cell, omega, C))
print("block law symmetric:", np.allclose(B, B.T))

# The single-pair stress is not symmetric, and its momentum feels local
# rotation.  A second, mirrored pair with m' c' = m c removes both effects.
# Only S'_221 = D'_122 = omega^2 (m'/c' - m/c) survives.

c2 = 2.0
sym = CellParams(h=0.01, K=1.0, m=1.0, c=0.5, delta=1.0,
                 m_prime=symmetric_variant_params(1.0, 0.5, c2), c_prime=c2)
S2, D2 = coupling_tensors(sym, omega)
rotation = grad_to_vec4([[0, -1], [1, 0]])
print("single pair D.rotation:", D @ rotation)
print("symmetric variant D.rotation:", D2 @ rotation)
S3, _ = primed_tensors(S2, D2, omega).cartesian()
print("S'_221 =", S3[1, 1, 0], " expected", omega**2 * (sym.m_prime / c2 - 1 / 0.5))
