"""Channel capacities and the magnitude of a small network of binary symmetric channels."""

import numpy as np

from maglab.channels import (
    bsc,
    capacity_blahut_arimoto,
    capacity_muroga,
    muroga_coweighting_check,
    six_vertex_network,
)
from maglab.magnitude import magnitude, weighting

ch = bsc(0.1)
ba = capacity_blahut_arimoto(ch)
mu = capacity_muroga(ch)
print(f"BSC(0.1): {ba.bits:.12f} bits (iterative), {mu.bits:.12f} bits (closed form)")
rep = muroga_coweighting_check(ch)
print("coweighting residual:", rep.residual)
print("pseudo-distance:\n", rep.pseudo_distance)

for c in ([1, 1, 1, 1, 1], [1.2, 1.5, 1.1, 1.8, 1.3]):
    net = six_vertex_network(c)
    Z = net.sizes.Z
    print("capacities (as exp):", c)
    print(np.round(Z, 4))
    print("weighting:", np.round(weighting(Z), 6), "magnitude:", round(magnitude(Z), 6))
