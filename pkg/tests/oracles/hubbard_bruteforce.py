"""Independent brute-force oracle for the two-site Hubbard model.

Pure Python, no numpy: the Hamiltonian is built directly on occupation-number
bit strings (mode k = bit k, fermionic sign = parity of the occupied modes
below k), diagonalised with a cyclic Jacobi sweep, and the two-point function
c_1up(t1) c_1up^dag(t2) in the ground state of H is a spectral sum.

Run as a script to regenerate ``golden.json`` next to this file.
"""

from __future__ import annotations

import cmath
import json
import math
from pathlib import Path

MODES = 4
DIM = 1 << MODES


def mode(site: int, spin: str) -> int:
    return 2 * (site - 1) + (0 if spin == "up" else 1)


def annihilate(k: int, state: int):
    """(sign, new_state) for c_k|state>, or None when mode k is empty."""
    if not state >> k & 1:
        return None
    below = bin(state & ((1 << k) - 1)).count("1")
    return (-1) ** below, state ^ (1 << k)


def create(k: int, state: int):
    if state >> k & 1:
        return None
    below = bin(state & ((1 << k) - 1)).count("1")
    return (-1) ** below, state | (1 << k)


def hop(a: int, b: int, state: int):
    """c_a^dag c_b |state>."""
    first = annihilate(b, state)
    if first is None:
        return None
    second = create(a, first[1])
    if second is None:
        return None
    return first[0] * second[0], second[1]


def hamiltonian(t_hop: float, u: float) -> list[list[float]]:
    h = [[0.0] * DIM for _ in range(DIM)]
    for state in range(DIM):
        for spin in ("up", "dn"):
            a, b = mode(1, spin), mode(2, spin)
            for x, y in ((a, b), (b, a)):
                res = hop(x, y, state)
                if res is not None:
                    sign, new = res
                    h[new][state] -= t_hop * sign
        for site in (1, 2):
            if state >> mode(site, "up") & 1 and state >> mode(site, "dn") & 1:
                h[state][state] += u
    return h


def jacobi(a: list[list[float]], tol: float = 1e-15, sweeps: int = 100):
    """Eigenvalues (ascending) and eigenvectors (columns) of a real symmetric matrix."""
    n = len(a)
    a = [row[:] for row in a]
    v = [[float(i == j) for j in range(n)] for i in range(n)]
    for _ in range(sweeps):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p][q]) < 1e-300:
                    continue
                theta = (a[q][q] - a[p][p]) / (2 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p], a[k][q] = c * akp - s * akq, s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k], a[q][k] = c * apk - s * aqk, s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p], v[k][q] = c * vkp - s * vkq, s * vkp + c * vkq
    order = sorted(range(n), key=lambda i: a[i][i])
    values = [a[i][i] for i in order]
    vectors = [[v[r][i] for i in order] for r in range(n)]
    return values, vectors


def two_point(t_hop: float, u: float, t1: float, t2: float) -> complex:
    """<Psi| c_1up(t1) c_1up^dag(t2) |Psi> for t1 > t2, Psi the ground state of H."""
    values, vectors = jacobi(hamiltonian(t_hop, u))
    psi = [vectors[r][0] for r in range(DIM)]
    k = mode(1, "up")
    phi = [0.0] * DIM  # c^dag |psi>
    for state, amp in enumerate(psi):
        res = create(k, state)
        if res is not None:
            phi[res[1]] += res[0] * amp
    total = 0j
    for n in range(DIM):
        overlap = sum(vectors[r][n] * phi[r] for r in range(DIM))
        total += overlap * overlap * cmath.exp(-1j * (values[n] - values[0]) * (t1 - t2))
    return total


def golden() -> dict:
    values, _ = jacobi(hamiltonian(1.0, 2.0))
    free, _ = jacobi(hamiltonian(1.0, 0.0))
    z = two_point(1.0, 2.0, 0.5, -0.3)
    return {
        "t_hop": 1.0,
        "u": 2.0,
        "eigenvalues": values,
        "free_eigenvalues": free,
        "two_point": {"t1": 0.5, "t2": -0.3, "re": z.real, "im": z.imag},
    }


if __name__ == "__main__":
    out = Path(__file__).with_name("golden.json")
    out.write_text(json.dumps(golden(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
