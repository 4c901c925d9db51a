"""Discretized flat polarized torus fibers.

The fiber is the fixed smooth torus R^{2n}/Z^{2n} with complex structure
z^i = x^i + tau_i y^i (n = 1, or n = 2 as a product of two factors with a
diagonal period matrix).  The Kahler metric is never chosen independently:
it is -d_a d_bbar log h of the bundle weight, restricted to the fiber, so
the fiber metric equals the bundle curvature by construction.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonPositiveMetric, NonPositiveModulus


def grid_indices(n, N):
    """Per-factor (j, k) integer grids for the flattened site index.

    Site layout: site = sum_i (j_i*N + k_i) * N^{2(n-1-i)}; factor 0 is the
    slowest index.
    """
    idx = np.arange(N ** (2 * n))
    js, ks = [], []
    for i in range(n):
        sub = (idx // (N ** (2 * (n - 1 - i)))) % (N * N)
        js.append(sub // N)
        ks.append(sub % N)
    return np.array(js), np.array(ks)


class TorusFiber:
    """Grid data of one fiber: points, metric, volume weights."""

    def __init__(self, taus, N, g, gdV, weight, geom, s=0.0):
        self.n = len(taus)
        self.taus = tuple(complex(t) for t in taus)
        self.N = int(N)
        self.s = complex(s)
        js, ks = grid_indices(self.n, self.N)
        self.x = js / float(N)
        self.y = ks / float(N)
        # covering-space coordinates per factor, shape (n, npts)
        self.z = np.array([self.x[i] + self.taus[i] * self.y[i]
                           for i in range(self.n)])
        self.g = g            # (n, n, npts) hermitian
        self.gdV = gdV        # (npts,) volume weight per site (measure)
        self.weight = weight  # Field: log h on the covering space
        self.geom = geom
        self._ginv = None
        self._detg = None

    @property
    def npts(self):
        return self.N ** (2 * self.n)

    @property
    def ginv(self):
        if self._ginv is None:
            if self.n == 1:
                self._ginv = 1.0 / self.g
            else:
                mats = np.moveaxis(self.g, -1, 0)
                self._ginv = np.moveaxis(np.linalg.inv(mats), 0, -1)
        return self._ginv

    @property
    def detg(self):
        if self._detg is None:
            if self.n == 1:
                self._detg = self.g[0, 0].real.copy()
            else:
                mats = np.moveaxis(self.g, -1, 0)
                self._detg = np.linalg.det(mats).real
        return self._detg

    def min_metric_eigenvalue(self):
        if self.n == 1:
            return float(self.g[0, 0].real.min())
        mats = np.moveaxis(self.g, -1, 0)
        return float(np.linalg.eigvalsh(mats).min())

    def same_grid(self, other):
        return self.n == other.n and self.N == other.N


def build_fiber(bundle, s=None):
    """Fiber carrying the metric g = -dd'log h of the given bundle.

    The metric and volume weights are sampled from the bundle's weight
    field with ghost-point central differences, so perturbed weights are
    handled identically to the model one.
    """
    s = bundle.s if s is None else complex(s)
    taus = bundle.taus_at(s)
    n, N = bundle.n, bundle.N
    for t in taus:
        if np.imag(t) <= 0:
            raise NonPositiveModulus(f"Im tau must be positive, got {t}")
    if N % 2 != 0 or N < 8:
        raise DimensionMismatch("grid resolution N must be even and >= 8")

    js, ks = grid_indices(n, N)
    z = np.array([js[i] / N + taus[i] * ks[i] / N for i in range(n)])

    W = bundle.weight
    g = np.zeros((n, n, N ** (2 * n)), dtype=complex)
    for a in range(n):
        for b in range(n):
            g[a, b] = -(W.dz(a).dzbar(b))(z, s)
    # positivity
    if n == 1:
        if g[0, 0].real.min() <= 0 or np.abs(g[0, 0].imag).max() > 1e-10:
            raise NonPositiveMetric("fiber metric not positive")
        detg = g[0, 0].real
    else:
        mats = np.moveaxis(g, -1, 0)
        ev = np.linalg.eigvalsh(mats)
        if ev.min() <= 0:
            raise NonPositiveMetric("fiber metric not positive definite")
        detg = np.linalg.det(mats).real

    jac = np.prod([2.0 * np.imag(t) for t in taus])
    gdV = detg * jac / float(N ** (2 * n))
    return TorusFiber(taus, N, g, gdV, W, bundle.geom, s=s)


def fiber_volume(fiber):
    """Total volume sum(gdV); equals prod_i 2*pi*d_i up to O(N^-2)."""
    return float(np.sum(fiber.gdV))


class CurvatureTensor4:
    """Fiber Christoffel symbols and curvature 4-tensor on the grid."""

    def __init__(self, gamma, riemann):
        self.gamma = gamma      # (n, n, n, npts): Gamma^s_{a c}
        self.riemann = riemann  # (n, n, n, n, npts): R^s_{a c bbar}

    def max_gamma(self):
        return float(np.abs(self.gamma).max())

    def max_riemann(self):
        return float(np.abs(self.riemann).max())


def christoffel_and_curvature(fiber):
    """Gamma^s_{ac} = g^{bbar s} d_a g_{c bbar} and R^s_{ac bbar} = -d_bbar Gamma.

    Evaluated from the weight field, so both vanish to rounding for the
    flat model and pick up the perturbation otherwise.  Non-product
    metrics are supported for n = 1 only.
    """
    n, s = fiber.n, fiber.s
    W = fiber.weight
    npts = fiber.npts
    gamma = np.zeros((n, n, n, npts), dtype=complex)
    riemann = np.zeros((n, n, n, n, npts), dtype=complex)
    for i in range(n):
        gi = -(W.dz(i).dzbar(i))
        gam = gi.dz(i) / gi          # Gamma^i_{ii}
        gamma[i, i, i] = gam(fiber.z, s)
        riemann[i, i, i, i] = -(gam.dzbar(i))(fiber.z, s)
    return CurvatureTensor4(gamma, riemann)
