"""Bundle-valued (p, q)-forms on a fiber: skew storage, inner products,
cup products with deformation forms, contraction, conjugation.

Components are stored on strictly increasing multi-indices only; the full
skew tensor is recovered by sign of permutation.  The combinatorial
normalization suppresses 1/p!q!: inner products sum over increasing
indices with minor determinants of the inverse metric, which reproduces
the full-tensor contraction exactly (tested against a brute-force
implementation that stores all redundant components).
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import BidegreeMismatch, BidegreeOutOfRange, FiberMismatch


def inc_indices(n, p):
    return list(itertools.combinations(range(n), p))


def sort_with_sign(idx):
    """Sort an index tuple; return (sign, sorted tuple) or (0, None) if repeated."""
    idx = tuple(idx)
    if len(set(idx)) != len(idx):
        return 0, None
    perm = sorted(range(len(idx)), key=lambda i: idx[i])
    sign = 1
    seen = list(idx)
    # count inversions
    inv = sum(1 for i in range(len(idx)) for j in range(i + 1, len(idx))
              if seen[i] > seen[j])
    sign = -1 if inv % 2 else 1
    return sign, tuple(sorted(idx))


class PQForm:
    """L-valued (p, q)-form as components over increasing multi-indices.

    comp: complex array (nA, nB, npts) where nA = C(n, p), nB = C(n, q),
    in the order given by inc_indices.  Values are unitary-gauge samples.
    """

    def __init__(self, p, q, comp, fiber):
        n = fiber.n
        if not (0 <= p <= n and 0 <= q <= n):
            raise BidegreeOutOfRange(f"(p, q) = ({p}, {q}) outside 0..{n}")
        self.p, self.q = int(p), int(q)
        self.n = n
        self.fiber = fiber
        self.hol_indices = inc_indices(n, p)
        self.anti_indices = inc_indices(n, q)
        comp = np.asarray(comp, dtype=complex)
        expect = (len(self.hol_indices), len(self.anti_indices), fiber.npts)
        if comp.shape != expect:
            raise BidegreeMismatch(f"component shape {comp.shape} != {expect}")
        self.comp = comp

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, p, q, fiber):
        nA = len(inc_indices(fiber.n, p))
        nB = len(inc_indices(fiber.n, q))
        return cls(p, q, np.zeros((nA, nB, fiber.npts), dtype=complex), fiber)

    @classmethod
    def from_vector(cls, p, q, vec, fiber):
        nA = len(inc_indices(fiber.n, p))
        nB = len(inc_indices(fiber.n, q))
        return cls(p, q, np.asarray(vec, dtype=complex).reshape(nA, nB, fiber.npts),
                   fiber)

    def to_vector(self):
        return self.comp.reshape(-1).copy()

    def copy(self):
        return PQForm(self.p, self.q, self.comp.copy(), self.fiber)

    # -- component access ----------------------------------------------------

    def component_full(self, A, B):
        """Skew-extended component for arbitrary index tuples (npts,)."""
        sA, Asorted = sort_with_sign(A)
        sB, Bsorted = sort_with_sign(B)
        if sA == 0 or sB == 0:
            return np.zeros(self.fiber.npts, dtype=complex)
        a = self.hol_indices.index(Asorted)
        b = self.anti_indices.index(Bsorted)
        return (sA * sB) * self.comp[a, b]

    # -- algebra ---------------------------------------------------------------

    def _check_compatible(self, other):
        if self.fiber is not other.fiber and not self.fiber.same_grid(other.fiber):
            raise FiberMismatch("forms live on different fibers")
        if (self.p, self.q) != (other.p, other.q):
            raise BidegreeMismatch(
                f"bidegrees ({self.p},{self.q}) vs ({other.p},{other.q})")

    def __add__(self, other):
        self._check_compatible(other)
        return PQForm(self.p, self.q, self.comp + other.comp, self.fiber)

    def __sub__(self, other):
        self._check_compatible(other)
        return PQForm(self.p, self.q, self.comp - other.comp, self.fiber)

    def __mul__(self, scalar):
        return PQForm(self.p, self.q, self.comp * scalar, self.fiber)

    __rmul__ = __mul__

    def __neg__(self):
        return PQForm(self.p, self.q, -self.comp, self.fiber)


def _minor_det(ginv, A, D):
    """det of the inverse-metric minor pairing hol tuple A with anti tuple D.

    ginv[a, d] are the entries g^{dbar a}; returns (npts,) complex.
    """
    k = len(A)
    if k == 0:
        return 1.0
    if k == 1:
        return ginv[A[0], D[0]]
    if k == 2:
        return (ginv[A[0], D[0]] * ginv[A[1], D[1]]
                - ginv[A[0], D[1]] * ginv[A[1], D[0]])
    # general fallback
    mats = np.moveaxis(np.array([[ginv[a, d] for d in D] for a in A]), -1, 0)
    return np.linalg.det(mats)


def pointwise_inner(psi, chi):
    """<psi, chi> per grid point (conjugate-linear in chi), no volume weight."""
    psi._check_compatible(chi)
    f = psi.fiber
    ginv = f.ginv
    out = np.zeros(f.npts, dtype=complex)
    for a, A in enumerate(psi.hol_indices):
        for d, D in enumerate(chi.hol_indices):
            mh = _minor_det(ginv, A, D)
            for b, B in enumerate(psi.anti_indices):
                for c, C in enumerate(chi.anti_indices):
                    ma = _minor_det(ginv, C, B)
                    out += psi.comp[a, b] * np.conj(chi.comp[d, c]) * mh * ma
    return out


def inner_product(psi, chi):
    """L^2 inner product: integral of the pointwise inner against gdV."""
    return complex(np.sum(pointwise_inner(psi, chi) * psi.fiber.gdV))


def norm(psi):
    return float(np.sqrt(max(inner_product(psi, psi).real, 0.0)))


def conjugate(psi):
    """The conjugate (q, p)-form; involutive."""
    f = psi.fiber
    out = PQForm.zero(psi.q, psi.p, f)
    sign = -1 if (psi.p * psi.q) % 2 else 1
    for a, A in enumerate(psi.hol_indices):
        for b, B in enumerate(psi.anti_indices):
            ia = out.hol_indices.index(B)
            ib = out.anti_indices.index(A)
            out.comp[ia, ib] = sign * np.conj(psi.comp[a, b])
    return out


class KodairaSpencerForm:
    """Tangent-valued (0,1)-form A^a_{bbar} on the fiber grid."""

    def __init__(self, comp, fiber, label="s"):
        comp = np.asarray(comp, dtype=complex)
        if comp.shape != (fiber.n, fiber.n, fiber.npts):
            raise BidegreeMismatch("KS component shape must be (n, n, npts)")
        self.comp = comp   # comp[alpha, betabar]
        self.fiber = fiber
        self.label = label

    def conj_comp(self):
        """Components Abar^{deltabar}_{gamma} = conj(A^{delta}_{gammabar}),
        indexed [delta, gamma]."""
        return np.conj(self.comp)

    def lowered(self):
        """A_{bbar dbar} = g_{a bbar} A^a_{dbar}, indexed [b, d]."""
        g = self.fiber.g
        return np.einsum("abp,adp->bdp", g, self.comp)

    def symmetry_defect(self):
        """Relative defect of the lowered-index symmetry."""
        low = self.lowered()
        num = np.abs(low - np.swapaxes(low, 0, 1)).max()
        den = max(np.abs(low).max(), 1e-300)
        return float(num / den)

    def norm_sq_integral(self):
        """integral |A|^2 gdV with indices contracted by the metric."""
        f = self.fiber
        dens = np.einsum("abp,cdp,acp,dbp->p", self.comp, np.conj(self.comp),
                         f.g, f.ginv)
        return float(np.sum(dens.real * f.gdV))


def cup_ks(A, psi):
    """(A cup psi): contraction of A's tangent leg into the first
    holomorphic slot, new antiholomorphic leg in front; (p,q) -> (p-1,q+1)."""
    if psi.p < 1 or psi.q > psi.n - 1:
        raise BidegreeOutOfRange("cup_ks needs p >= 1 and q <= n-1")
    f = psi.fiber
    out = PQForm.zero(psi.p - 1, psi.q + 1, f)
    gsign = -1 if (psi.p - 1) % 2 else 1
    for a, Ap in enumerate(out.hol_indices):
        for b, Bp in enumerate(out.anti_indices):
            acc = np.zeros(f.npts, dtype=complex)
            for pos, beta in enumerate(Bp):
                Brest = Bp[:pos] + Bp[pos + 1:]
                ssign = -1 if pos % 2 else 1
                for gam in range(psi.n):
                    comp = psi.component_full((gam,) + Ap, Brest)
                    acc += ssign * A.comp[gam, beta] * comp
            out.comp[a, b] = gsign * acc
    return out


def cup_ks_conj(Abar_comp, psi):
    """(Abar cup psi): conjugated deformation form, (p,q) -> (p+1,q-1).

    Abar_comp: array [delta, gamma] = Abar^{deltabar}_{gamma}; pass
    KodairaSpencerForm.conj_comp() for the conjugate of a KS form.
    """
    if psi.q < 1 or psi.p > psi.n - 1:
        raise BidegreeOutOfRange("cup_ks_conj needs q >= 1 and p <= n-1")
    f = psi.fiber
    out = PQForm.zero(psi.p + 1, psi.q - 1, f)
    for a, Ap in enumerate(out.hol_indices):
        for b, Bp in enumerate(out.anti_indices):
            acc = np.zeros(f.npts, dtype=complex)
            for pos, alpha in enumerate(Ap):
                Arest = Ap[:pos] + Ap[pos + 1:]
                ssign = -1 if pos % 2 else 1
                for dlt in range(psi.n):
                    comp = psi.component_full(Arest, (dlt,) + Bp)
                    acc += ssign * Abar_comp[dlt, alpha] * comp
            out.comp[a, b] = acc
    return out


def contract_vector(v_hol, psi, anti=False):
    """Interior product with a fiber vector field, first-slot convention.

    v_hol: (n, npts) components; anti=False contracts v^a d_a into the
    holomorphic slots ((p,q) -> (p-1,q)), anti=True contracts v^{bbar}
    d_{bbar} into the antiholomorphic slots with the (-1)^p crossing sign.
    """
    f = psi.fiber
    v = np.asarray(v_hol)
    if not anti:
        if psi.p < 1:
            raise BidegreeOutOfRange("no holomorphic slot to contract")
        out = PQForm.zero(psi.p - 1, psi.q, f)
        for a, Ap in enumerate(out.hol_indices):
            for b, Bp in enumerate(out.anti_indices):
                acc = np.zeros(f.npts, dtype=complex)
                for gam in range(psi.n):
                    acc += v[gam] * psi.component_full((gam,) + Ap, Bp)
                out.comp[a, b] = acc
        return out
    if psi.q < 1:
        raise BidegreeOutOfRange("no antiholomorphic slot to contract")
    out = PQForm.zero(psi.p, psi.q - 1, f)
    sgn = -1 if psi.p % 2 else 1
    for a, Ap in enumerate(out.hol_indices):
        for b, Bp in enumerate(out.anti_indices):
            acc = np.zeros(f.npts, dtype=complex)
            for dlt in range(psi.n):
                acc += v[dlt] * psi.component_full(Ap, (dlt,) + Bp)
            out.comp[a, b] = sgn * acc
    return out


def random_form(p, q, fiber, bundle, rng, kmax=2, s_coeff=False):
    """Seeded random smooth L-valued (p, q)-form: trigonometric polynomial
    times a fixed analytic section sample (so the object is N-independent).

    Returns the PQForm (s_coeff=False) or a callable s -> coefficient
    factor for building closed-form families elsewhere.
    """
    from .oracles import theta_value

    f = fiber
    base = bundle.sample_section(
        lambda z: np.prod([theta_value(0, bundle.ds[i], z[i], f.taus[i])
                           for i in range(f.n)], axis=0))
    nA = len(inc_indices(f.n, p))
    nB = len(inc_indices(f.n, q))
    comp = np.zeros((nA, nB, f.npts), dtype=complex)
    modes = range(-kmax, kmax + 1)
    for a in range(nA):
        for b in range(nB):
            poly = np.zeros(f.npts, dtype=complex)
            for i in range(f.n):
                for m in modes:
                    for k in modes:
                        c = (rng.standard_normal() + 1j * rng.standard_normal())
                        c /= (1.0 + m * m + k * k) ** 1.5
                        poly += c * np.exp(2j * np.pi * (m * f.x[i] + k * f.y[i]))
            comp[a, b] = poly * base
    return PQForm(p, q, comp, f)
