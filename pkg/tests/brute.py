"""Brute-force full-tensor reference implementation for form operations.

Stores all n^p * n^q redundant components with explicit skew-symmetrization
and implements wedge/contraction primitives directly, sharing no code with
the skew-storage package paths.
"""

import itertools

import numpy as np


def perm_sign(idx):
    idx = tuple(idx)
    if len(set(idx)) != len(idx):
        return 0
    inv = sum(1 for i in range(len(idx)) for j in range(i + 1, len(idx))
              if idx[i] > idx[j])
    return -1 if inv % 2 else 1


class BruteForm:
    """dict (A_tuple, B_tuple) -> coefficient array, fully skew."""

    def __init__(self, n, p, q, npts):
        self.n, self.p, self.q, self.npts = n, p, q, npts
        self.data = {}

    def add(self, A, B, coeff):
        """Add coeff * dz^A wedge dzbar^B (arbitrary ordered tuples)."""
        sA = perm_sign(A)
        sB = perm_sign(B)
        if sA == 0 or sB == 0:
            return
        key = (tuple(sorted(A)), tuple(sorted(B)))
        val = self.data.get(key)
        add = sA * sB * coeff
        self.data[key] = add if val is None else val + add

    def get(self, A, B):
        sA, sB = perm_sign(A), perm_sign(B)
        if sA == 0 or sB == 0:
            return np.zeros(self.npts, dtype=complex)
        key = (tuple(sorted(A)), tuple(sorted(B)))
        if key not in self.data:
            return np.zeros(self.npts, dtype=complex)
        return sA * sB * self.data[key]

    @classmethod
    def from_pqform(cls, psi):
        out = cls(psi.n, psi.p, psi.q, psi.fiber.npts)
        for a, A in enumerate(psi.hol_indices):
            for b, B in enumerate(psi.anti_indices):
                out.add(A, B, psi.comp[a, b])
        return out


def brute_inner(u, v, ginv, gdV):
    """Full-tensor contraction with 1/p!q! over all ordered tuples."""
    n, p, q = u.n, u.p, u.q
    tot = np.zeros(u.npts, dtype=complex)
    for A in itertools.product(range(n), repeat=p):
        for D in itertools.product(range(n), repeat=p):
            fac_h = np.ones(u.npts, dtype=complex)
            for a, d in zip(A, D):
                fac_h = fac_h * ginv[a, d]
            for B in itertools.product(range(n), repeat=q):
                for C in itertools.product(range(n), repeat=q):
                    fac_a = np.ones(u.npts, dtype=complex)
                    for c, b in zip(C, B):
                        fac_a = fac_a * ginv[c, b]
                    tot += (u.get(A, B) * np.conj(v.get(D, C)) * fac_h * fac_a)
    import math
    tot /= math.factorial(p) * math.factorial(q)
    return complex(np.sum(tot * gdV))


def brute_cup_ks(Acomp, psi):
    """sum_{g,d} A^g_d  dzbar^d wedge (contract d_g into first hol slot)."""
    n, p, q, npts = psi.n, psi.p, psi.q, psi.npts
    out = BruteForm(n, p - 1, q + 1, npts)
    for g in range(n):
        for d in range(n):
            for A in itertools.combinations(range(n), p - 1):
                for B in itertools.combinations(range(n), q):
                    coeff = Acomp[g, d] * psi.get((g,) + A, B)
                    # dzbar^d wedge dz^A wedge dzbar^B: move dzbar^d past p-1 hols
                    sgn = (-1) ** (p - 1)
                    out.add(A, (d,) + B, sgn * coeff)
    return out


def brute_cup_ks_conj(Abar, psi):
    """sum_{g,d} Abar^d_g  dz^g wedge (contract at first anti slot, no sign)."""
    n, p, q, npts = psi.n, psi.p, psi.q, psi.npts
    out = BruteForm(n, p + 1, q - 1, npts)
    for g in range(n):
        for d in range(n):
            for A in itertools.combinations(range(n), p):
                for B in itertools.combinations(range(n), q - 1):
                    coeff = Abar[d, g] * psi.get(A, (d,) + B)
                    out.add((g,) + A, B, coeff)
    return out


def compare(brute, psi):
    """Max abs difference between a BruteForm and a PQForm."""
    err = 0.0
    for a, A in enumerate(psi.hol_indices):
        for b, B in enumerate(psi.anti_indices):
            err = max(err, float(np.abs(brute.get(A, B) - psi.comp[a, b]).max()))
    return err
