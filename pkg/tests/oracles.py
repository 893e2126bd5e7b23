"""Independent reference computations shared by the tests."""
import math

import numpy as np


def residual_complex(z, alpha, n, net, load):
    """Circuit mismatches written directly in complex arithmetic."""
    v1, vp, ip, vs, is_, vl = (complex(z[k], z[k + 6]) for k in range(6))
    m = abs(vl)
    u = m / load.v_ref
    p = alpha * load.p_scale * (load.p_z * u * u + load.p_i * u + load.p_p)
    q = alpha * load.q_scale * (load.q_z * u * u + load.q_i * u + load.q_p)
    kvl = v1 - 1j * net.x_line * ip - vp
    tv = vp - n * vs
    ti = n * ip - is_
    sec = vs - vl
    s = vl * is_.conjugate()
    return np.array([abs(v1) ** 2 - net.v1_mag ** 2, kvl.real, kvl.imag, tv.real, tv.imag,
                     ti.real, ti.imag, sec.real, sec.imag, s.real - p, s.imag - q, vl.imag])


def fd_jacobian(z, alpha, n, net, load, h=1e-7):
    z = np.asarray(z, dtype=float)
    J = np.empty((12, 12))
    for j in range(12):
        e = np.zeros(12)
        e[j] = h
        J[:, j] = (residual_complex(z + e, alpha, n, net, load)
                   - residual_complex(z - e, alpha, n, net, load)) / (2 * h)
    dn = (residual_complex(z, alpha, n + h, net, load)
          - residual_complex(z, alpha, n - h, net, load)) / (2 * h)
    return J, dn


def unity_nose(net):
    """Unity power factor constant-P limit: P_max = V1^2 / (2X), V_crit = V1/sqrt(2)."""
    return net.v1_mag ** 2 / (2 * net.x_line), net.v1_mag / math.sqrt(2)


def constant_pf_nose(net, pf):
    sin_phi = math.sqrt(1 - pf * pf)
    p_max = net.v1_mag ** 2 * (1 - sin_phi) / (2 * net.x_line * pf)
    q_max = p_max * sin_phi / pf
    return p_max, math.sqrt((net.v1_mag ** 2 - 2 * net.x_line * q_max) / 2)


def unity_branches(net, p):
    """Both load-voltage solutions of the unity-pf constant-P circuit."""
    v1, x = net.v1_mag, net.x_line
    d = math.sqrt(v1 ** 4 - 4 * x * x * p * p)
    return math.sqrt((v1 ** 2 + d) / 2), math.sqrt((v1 ** 2 - d) / 2)
