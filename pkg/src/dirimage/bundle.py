"""Hermitian line bundle on the torus via weight function and gauge links.

Sections are stored in the unitary gauge u = h^{1/2} f, where f is the
function in the classical theta trivialization (f(z+1) = f(z),
f(z+tau) = exp(-2 pi i d z - pi i d tau) f(z)).  In this gauge the Chern
connection is a genuine U(1) gauge field; parallel transport along grid
edges gives unit-modulus link phases, and the wrap row in y carries the
automorphy transition exp(-2 pi i d (x + Re(tau)/2)).

Total flux is exactly 2 pi d per factor: every edge contribution appears
in two plaquettes with opposite signs, so the plaquette sum telescopes to
the winding of the transition phases.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NonPositiveMetric
from .fiber import grid_indices
from .fields import Field, FieldGeometry

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
_GL_T = 0.5 * (_GL_NODES + 1.0)   # nodes on [0, 1]
_GL_W = 0.5 * _GL_WEIGHTS


def model_weight_field(ds, geom):
    """log h of the degree-d theta bundle (per factor, summed):
    W_i = pi*i*d_i*(z_i - conj z_i)^2 / (tau_i(s) - conj tau_i(s))."""
    ds = tuple(ds)

    def fn(z, s):
        taus = geom.taus(s)
        out = 0.0
        for i, d in enumerate(ds):
            zi = z[i]
            dz = zi - np.conj(zi)
            ti = taus[i]
            out = out + (1j * np.pi * d * dz * dz / (ti - np.conj(ti))).real
        return out
    return Field(fn, geom)


class BundleMetric:
    """Degree data, weight field, per-factor link phases, connection."""

    def __init__(self, ds, N, weight, geom, s=0.0):
        self.ds = tuple(int(d) for d in ds)
        self.n = len(self.ds)
        self.N = int(N)
        self.weight = weight
        self.geom = geom
        self.s = complex(s)
        if any(d < 1 for d in self.ds):
            raise NonPositiveMetric("bundle degree must be >= 1 per factor")
        self._links = None
        self._z = None

    def taus_at(self, s):
        return tuple(self.geom.taus(s))

    @property
    def taus(self):
        return self.taus_at(self.s)

    @property
    def npts(self):
        return self.N ** (2 * self.n)

    def grid_z(self):
        if self._z is None:
            js, ks = grid_indices(self.n, self.N)
            taus = self.taus
            self._z = np.array([js[i] / self.N + taus[i] * ks[i] / self.N
                                for i in range(self.n)])
        return self._z

    # -- links ---------------------------------------------------------------

    def links(self, factor=0):
        """(Ux, Uy) arrays of shape (N, N) for the given factor.

        Ux[j, k]: transport phase on the edge (j,k) -> (j+1,k);
        Uy[j, k]: edge (j,k) -> (j,k+1), including the automorphy
        transition on the wrap row k = N-1.
        """
        if self._links is None:
            self._links = [self._build_links(i) for i in range(self.n)]
        return self._links[factor]

    def _build_links(self, i):
        N, s = self.N, self.s
        tau = self.taus[i]
        d = self.ds[i]
        Wz = self.weight.dz(i)
        jj, kk = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        x = jj / N
        y = kk / N

        def zpts(xv, yv):
            # full n-factor point array with factor i at (xv, yv) and the
            # other factors at arbitrary fixed values (product weights do
            # not couple factors, enforced in build_bundle)
            z = np.zeros((self.n,) + xv.shape, dtype=complex)
            for a in range(self.n):
                ta = self.taus[a]
                z[a] = (xv + ta * yv) if a == i else 0.25 + ta * 0.25
            return z

        # x-edges:  integral of Im(W_z) over [x, x+1/N] at fixed y
        phase_x = np.zeros((N, N))
        for t, w in zip(_GL_T, _GL_W):
            vals = Wz(zpts(x + t / N, y), s)
            phase_x += w * np.imag(vals) / N
        Ux = np.exp(1j * phase_x)

        # y-edges:  integral of Im(tau * W_z) over [y, y+1/N] at fixed x
        phase_y = np.zeros((N, N))
        for t, w in zip(_GL_T, _GL_W):
            vals = Wz(zpts(x, y + t / N), s)
            phase_y += w * np.imag(tau * vals) / N
        Uy = np.exp(1j * phase_y)
        # automorphy transition on the wrap row
        om = np.exp(-2j * np.pi * d * (x[:, -1] + np.real(tau) / 2.0))
        Uy[:, -1] *= om
        return Ux, Uy

    def plaquette_phases(self, factor=0):
        """Angle of the Wilson plaquette product, one value per cell."""
        Ux, Uy = self.links(factor)
        P = (Ux * np.roll(Uy, -1, axis=0)
             * np.conj(np.roll(Ux, -1, axis=1)) * np.conj(Uy))
        return np.angle(P)

    def total_flux(self, factor=0):
        """-sum of plaquette angles; equals 2 pi d exactly."""
        return -float(np.sum(self.plaquette_phases(factor)))

    def gauge_transform(self, alpha):
        """Return a new bundle with links conjugated by exp(i alpha(j,k)).

        alpha: real array (N, N) per factor, or list of such.  Sections
        transform as u -> exp(i alpha) u; all invariants must be unchanged.
        """
        alphas = alpha if isinstance(alpha, (list, tuple)) else [alpha] * self.n
        clone = BundleMetric(self.ds, self.N, self.weight, self.geom, self.s)
        clone._links = []
        for i in range(self.n):
            Ux, Uy = self.links(i)
            a = alphas[i]
            ph = np.exp(1j * a)
            Ux2 = ph * Ux * np.conj(np.roll(ph, -1, axis=0))
            Uy2 = ph * Uy * np.conj(np.roll(ph, -1, axis=1))
            clone._links.append((Ux2, Uy2))
        return clone

    # -- covariant translation/difference operators ---------------------------

    def translation(self, factor, direction):
        """Sparse unitary covariant one-step translation T_mu on sections.

        direction: 'x' or 'y'.  (T u)(site) = U(site) u(site + mu).
        """
        N = self.N
        Ux, Uy = self.links(factor)
        jj, kk = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        if direction == "x":
            src = ((jj + 1) % N) * N + kk
            data = Ux
        elif direction == "y":
            src = jj * N + (kk + 1) % N
            data = Uy
        else:
            raise DimensionMismatch("direction must be 'x' or 'y'")
        dst = jj * N + kk
        T1 = sp.csr_matrix((data.ravel(), (dst.ravel(), src.ravel())),
                           shape=(N * N, N * N))
        return self._lift_factor_op(T1, factor)

    def _lift_factor_op(self, op1, factor):
        """Kron the one-factor operator into the full product grid."""
        if self.n == 1:
            return op1.tocsr()
        ops = []
        for a in range(self.n):
            ops.append(op1 if a == factor else sp.identity(self.N ** 2, format="csr"))
        out = ops[0]
        for o in ops[1:]:
            out = sp.kron(out, o, format="csr")
        return out

    def central_diff(self, factor, direction):
        """Anti-hermitian covariant central difference N (T - T*) / 2."""
        T = self.translation(factor, direction)
        return (self.N / 2.0) * (T - T.getH())

    def dz_central(self, factor=0):
        tau = self.taus[factor]
        dx = self.central_diff(factor, "x")
        dy = self.central_diff(factor, "y")
        tb = np.conj(tau)
        return (tb * dx - dy) / (tb - tau)

    def dzbar_central(self, factor=0):
        tau = self.taus[factor]
        dx = self.central_diff(factor, "x")
        dy = self.central_diff(factor, "y")
        tb = np.conj(tau)
        return (tau * dx - dy) / (tau - tb)

    # -- spectral (gauge-dressed line-FFT) derivatives -------------------------

    def _line_spectral(self, factor, direction):
        """Dense per-line dressed Fourier derivative blocks.

        Returns (Lam, nu): Lam (N, N) dressing phases with the uniform
        holonomy root folded in, nu (N_lines, N_modes) real derivative
        eigenvalues; lines are columns j for direction 'y' and rows k for
        direction 'x'.
        """
        N = self.N
        Ux, Uy = self.links(factor)
        if direction == "y":
            U = Uy          # lines indexed by j, steps along k
        else:
            U = Ux.T        # lines indexed by k, steps along j
        nlines = U.shape[0]
        # Lam(l, 0) = 1, Lam(l, m+1) = Lam(l, m) / U(l, m)
        Lam = np.ones((nlines, N), dtype=complex)
        Lam[:, 1:] = np.cumprod(1.0 / U[:, :-1], axis=1)
        hol = Lam[:, -1] / U[:, -1]   # product of 1/U over the line
        theta = -np.angle(hol)        # holonomy angle of prod U
        phi = np.exp(1j * theta / N)
        Lam = Lam * phi[:, None] ** np.arange(N)[None, :]
        m = np.arange(N)
        m = np.where(m < N // 2, m, m - N)   # symmetric mode numbers
        nu = theta[:, None] + 2.0 * np.pi * m[None, :]
        return Lam, nu

    def spectral_diff_apply(self, factor, direction):
        """Callable u -> covariant spectral derivative along the direction.

        u is shaped (..., npts); the derivative is anti-hermitian and
        spectrally exact on analytic sections.
        """
        N = self.N
        Lam, nu = self._line_spectral(factor, direction)
        axis_is_y = direction == "y"

        def apply_one_factor(a2):
            # a2 shape (N, N) = (j, k) for one factor
            if axis_is_y:
                w = np.conj(Lam) * a2
                wh = np.fft.fft(w, axis=1)
                wh *= 1j * nu
                return Lam * np.fft.ifft(wh, axis=1)
            w = np.conj(Lam) * a2.T
            wh = np.fft.fft(w, axis=1)
            wh *= 1j * nu
            return (Lam * np.fft.ifft(wh, axis=1)).T

        if self.n == 1:
            def apply(u):
                a2 = u.reshape(u.shape[:-1] + (N, N))
                out = np.empty_like(a2, dtype=complex)
                for idx in np.ndindex(a2.shape[:-2]):
                    out[idx] = apply_one_factor(a2[idx])
                return out.reshape(u.shape)
            return apply

        def apply(u):
            shape = u.shape[:-1] + (N, N) * self.n
            a = u.reshape(shape)
            # move the chosen factor's (j, k) axes last
            ax_j = len(u.shape) - 1 + 2 * factor
            ax_k = ax_j + 1
            a = np.moveaxis(a, (ax_j, ax_k), (-2, -1))
            out = np.empty_like(a, dtype=complex)
            for idx in np.ndindex(a.shape[:-2]):
                out[idx] = apply_one_factor(a[idx])
            out = np.moveaxis(out, (-2, -1), (ax_j, ax_k))
            return out.reshape(u.shape)
        return apply

    def spectral_diff_matrix(self, factor, direction):
        """Sparse matrix of the spectral derivative (block-dense per line)."""
        N = self.N
        Lam, nu = self._line_spectral(factor, direction)
        F = np.fft.fft(np.eye(N), axis=1)          # F[m, k] = exp(-2pi i mk/N)
        Finv = np.conj(F).T / N
        blocks = np.einsum("km,lm,mq->lkq", Finv, 1j * nu, F)
        # dress: B_l[k, q] *= Lam[l, k] * conj(Lam[l, q])
        blocks = Lam[:, :, None] * blocks * np.conj(Lam[:, None, :])
        jj = np.arange(N)
        if direction == "y":
            rows = (jj[:, None, None] * N + np.arange(N)[None, :, None])
            cols = (jj[:, None, None] * N + np.arange(N)[None, None, :])
        else:
            rows = (np.arange(N)[None, :, None] * N + jj[:, None, None])
            cols = (np.arange(N)[None, None, :] * N + jj[:, None, None])
        rows = np.broadcast_to(rows, blocks.shape).ravel()
        cols = np.broadcast_to(cols, blocks.shape).ravel()
        M1 = sp.csr_matrix((blocks.ravel(), (rows, cols)),
                           shape=(N * N, N * N))
        return self._lift_factor_op(M1, factor)

    def dz_matrix(self, factor=0, scheme="central"):
        if scheme == "central":
            return self.dz_central(factor)
        tau = self.taus[factor]
        tb = np.conj(tau)
        dx = self.spectral_diff_matrix(factor, "x")
        dy = self.spectral_diff_matrix(factor, "y")
        return (tb * dx - dy) / (tb - tau)

    def dzbar_matrix(self, factor=0, scheme="central"):
        if scheme == "central":
            return self.dzbar_central(factor)
        tau = self.taus[factor]
        tb = np.conj(tau)
        dx = self.spectral_diff_matrix(factor, "x")
        dy = self.spectral_diff_matrix(factor, "y")
        return (tau * dx - dy) / (tau - tb)

    # -- sampling --------------------------------------------------------------

    def unitary_factor(self):
        """h^{1/2} on the grid: multiply holomorphic-gauge samples by this."""
        return np.exp(0.5 * self.weight(self.grid_z(), self.s))

    def sample_section(self, fn):
        """Sample a theta-trivialization function as a unitary-gauge array."""
        return self.unitary_factor() * fn(self.grid_z())

    def log_h(self):
        return self.weight(self.grid_z(), self.s)

    def chern_coefficient(self, factor=0):
        """Gamma^h_a = d_a log h sampled on the grid (holomorphic gauge)."""
        return (self.weight.dz(factor))(self.grid_z(), self.s)


def build_bundle(ds, taus, N, eps=1e-3, weight=None, geom=None, s=0.0,
                 perturbation=None):
    """Construct the bundle.  taus: tuple of moduli or callable s -> tuple.

    perturbation: optional Field-compatible callable delta(z, s) added to
    the model weight (must be periodic on the fiber and keep -dd'log h
    positive; checked by build_fiber).
    """
    ds = tuple(int(d) for d in np.atleast_1d(ds))
    if geom is None:
        if callable(taus):
            taufn = taus
        else:
            taus_c = tuple(complex(t) for t in np.atleast_1d(taus))
            def taufn(sv, _t=taus_c):
                return _t
        geom = FieldGeometry(taufn, N, eps)
    if weight is None:
        weight = model_weight_field(ds, geom)
        if perturbation is not None:
            weight = weight + Field(perturbation, geom)
    return BundleMetric(ds, N, weight, geom, s=s)


def covariant_derivative(bundle, fiber, form, direction, christoffel=None):
    """Chern covariant derivative of a PQForm along a fiber direction.

    direction: ('hol', i) for nabla_{z_i} or ('anti', i) for nabla_{zbar_i}.
    Link-covariant central differences per component plus Christoffel terms
    on the form indices (zero for flat fibers unless supplied).
    """
    from .forms import PQForm  # local import to avoid a cycle

    kind, i = direction
    if form.fiber is not fiber and not form.fiber.same_grid(fiber):
        raise DimensionMismatch("form not defined on this fiber grid")
    D = bundle.dz_central(i) if kind == "hol" else bundle.dzbar_central(i)
    comp = np.array([[D @ form.comp[a, b] for b in range(form.comp.shape[1])]
                     for a in range(form.comp.shape[0])])
    out = PQForm(form.p, form.q, comp, fiber)
    if christoffel is not None and christoffel.max_gamma() > 0:
        gam = christoffel.gamma  # Gamma^s_{a c}
        A_idx = form.hol_indices
        B_idx = form.anti_indices
        for a, A in enumerate(A_idx):
            for b, B in enumerate(B_idx):
                corr = 0.0
                if kind == "hol":
                    for slot, alpha in enumerate(A):
                        for sig in range(form.n):
                            repl = list(A)
                            repl[slot] = sig
                            val = form.component_full(tuple(repl), B)
                            corr = corr - gam[sig, i, alpha] * val
                else:
                    for slot, beta in enumerate(B):
                        for sig in range(form.n):
                            repl = list(B)
                            repl[slot] = sig
                            val = form.component_full(A, tuple(repl))
                            corr = corr - np.conj(gam[sig, i, beta]) * val
                out.comp[a, b] = out.comp[a, b] + corr
    return out


def bundle_curvature_pairing(bundle, v, w, fiber=None, s=None):
    """Theta(L)(v, w) pointwise on the fiber grid.

    v, w: dicts with optional keys 's', 'sbar' (complex scalars) and
    'fiber', 'fiberbar' (arrays (n, npts)) giving vector components.
    Convention: Theta(a, b) = Theta_{I Jbar} (a^I b^Jbar - b^I a^Jbar)
    with Theta_{I Jbar} = -d_I d_Jbar log h, so the geodesic curvature
    satisfies Theta(vbar, v) = -phi for the horizontal lift v.
    """
    s = bundle.s if s is None else complex(s)
    z = bundle.grid_z() if fiber is None else fiber.z
    npts = z.shape[-1]
    W = bundle.weight
    n = bundle.n
    idx = ["s"] + [("z", i) for i in range(n)]

    def d_hol(I):
        return W.ds() if I == "s" else W.dz(I[1])

    def d_anti(fld, J):
        return fld.dsbar() if J == "s" else fld.dzbar(J[1])

    def comp(vec, I, anti):
        if I == "s":
            return complex(vec.get("sbar" if anti else "s", 0.0))
        arr = vec.get("fiberbar" if anti else "fiber")
        if arr is None:
            return 0.0
        return np.asarray(arr)[I[1]]

    out = np.zeros(npts, dtype=complex)
    for I in idx:
        dI = d_hol(I)
        for J in idx:
            theta_IJ = -(d_anti(dI, J))(z, s)
            aI, bJ = comp(v, I, False), comp(w, J, True)
            bI, aJ = comp(w, I, False), comp(v, J, True)
            out = out + theta_IJ * (aI * bJ - bI * aJ)
    return out
