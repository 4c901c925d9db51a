"""Lazy calculus on closed-form fields over a torus family.

A Field wraps a callable ``f(z, s)`` where ``z`` is an ``(n, ...)`` complex
array of points on the covering space (one row per torus factor) and ``s``
is the base parameter.  Derivatives are taken by central differences:
fiber steps use the grid spacing 1/N (x-direction) and tau(s)/N
(y-direction), evaluated at ghost points off the fundamental domain, so
quasi-periodic quantities never wrap incorrectly.  Base derivatives use a
complex four-point stencil of width eps.

All model weights, metric components, horizontal lifts and geodesic
curvature fields are built from this algebra, which keeps every fiber
derivative a second-order central difference with the same step as the
lattice operators.
"""

from __future__ import annotations

import numpy as np


class FieldGeometry:
    """Finite-difference context: fiber dimension, moduli map, steps."""

    def __init__(self, taus, N, eps):
        """taus: callable s -> tuple of n complex moduli; N: grid resolution
        (fiber step 1/N); eps: base-direction step."""
        self.taus = taus
        self.N = N
        self.eps = eps

    @property
    def n(self):
        return len(self.taus(0.0))


class Field:
    def __init__(self, fn, geom):
        self.fn = fn
        self.geom = geom

    def __call__(self, z, s):
        return self.fn(np.asarray(z), s)

    # -- algebra ----------------------------------------------------------

    @staticmethod
    def _as_fn(other):
        if isinstance(other, Field):
            return other.fn
        return lambda z, s, c=other: c

    def _binary(self, other, op):
        fo = Field._as_fn(other)
        return Field(lambda z, s: op(self.fn(z, s), fo(z, s)), self.geom)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return Field(lambda z, s: -self.fn(z, s), self.geom)

    def conj(self):
        return Field(lambda z, s: np.conj(self.fn(z, s)), self.geom)

    # -- fiber derivatives --------------------------------------------------

    def _shift(self, i, delta_of_s):
        """Evaluate at z with row i shifted by delta(s)."""
        def fn(z, s):
            z = np.array(z, dtype=complex, copy=True)
            z[i] = z[i] + delta_of_s(s)
            return self.fn(z, s)
        return fn

    def dx(self, i=0):
        h = 1.0 / self.geom.N
        fp = self._shift(i, lambda s: h)
        fm = self._shift(i, lambda s: -h)
        return Field(lambda z, s: (fp(z, s) - fm(z, s)) / (2.0 * h), self.geom)

    def dy(self, i=0):
        h = 1.0 / self.geom.N
        fp = self._shift(i, lambda s: self.geom.taus(s)[i] * h)
        fm = self._shift(i, lambda s: -self.geom.taus(s)[i] * h)
        return Field(lambda z, s: (fp(z, s) - fm(z, s)) / (2.0 * h), self.geom)

    def dz(self, i=0):
        gx, gy = self.dx(i), self.dy(i)

        def fn(z, s):
            tau = self.geom.taus(s)[i]
            tb = np.conj(tau)
            return (tb * gx.fn(z, s) - gy.fn(z, s)) / (tb - tau)
        return Field(fn, self.geom)

    def dzbar(self, i=0):
        gx, gy = self.dx(i), self.dy(i)

        def fn(z, s):
            tau = self.geom.taus(s)[i]
            tb = np.conj(tau)
            return (tau * gx.fn(z, s) - gy.fn(z, s)) / (tau - tb)
        return Field(fn, self.geom)

    # -- base derivatives ----------------------------------------------------

    def ds(self):
        e = self.geom.eps

        def fn(z, s):
            da = (self.fn(z, s + e) - self.fn(z, s - e)) / (2.0 * e)
            db = (self.fn(z, s + 1j * e) - self.fn(z, s - 1j * e)) / (2.0 * e)
            return 0.5 * (da - 1j * db)
        return Field(fn, self.geom)

    def dsbar(self):
        e = self.geom.eps

        def fn(z, s):
            da = (self.fn(z, s + e) - self.fn(z, s - e)) / (2.0 * e)
            db = (self.fn(z, s + 1j * e) - self.fn(z, s - 1j * e)) / (2.0 * e)
            return 0.5 * (da + 1j * db)
        return Field(fn, self.geom)

    def ds_dsbar(self):
        """Mixed second base derivative d_s d_sbar f = (d_a^2 + d_b^2) f / 4."""
        e = self.geom.eps

        def fn(z, s):
            c = self.fn(z, s)
            return (self.fn(z, s + e) + self.fn(z, s - e)
                    + self.fn(z, s + 1j * e) + self.fn(z, s - 1j * e)
                    - 4.0 * c) / (4.0 * e * e)
        return Field(fn, self.geom)


def constant_field(value, geom):
    return Field(lambda z, s: value, geom)
