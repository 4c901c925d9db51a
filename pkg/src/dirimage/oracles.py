"""Closed-form analytic ground truths: theta series, Landau spectra, and
the exactly-solvable family quantities.

This module deliberately imports nothing else from the package: every
value here is derived by hand from the model weight and checked
symbolically, so lattice code can be tested against it without shared
code paths.

Derivations recorded for the model weight  log h = pi*i*d*(z-zbar)^2/(tau-taubar)
(equivalently -2*pi*d*(Im z)^2/Im tau), fiber z = x + tau*y, tau = tau(s)
holomorphic with derivative tau':

  metric        g_{z zbar} = -d_z d_zbar log h = 2*pi*i*d/(tau-taubar)
                           = pi*d/Im(tau)            (tau=i, d=1: pi)
  volume        integral omega = g * 2*Im(tau)   = 2*pi*d
  mixed terms   g_{s zbar} = -2*pi*i*d*tau'*(z-zbar)/(tau-taubar)^2
                g_{s sbar} = 2*pi*i*d*|tau'|^2*(z-zbar)^2/(tau-taubar)^3
                           = pi*d*|tau'|^2 (Im z)^2 / (Im tau)^3  (real, >=0)
  lift          a^z = -g^{zbar z} g_{s zbar} = tau'*(z-zbar)/(tau-taubar)
  deformation   A^z_{zbar} = d_zbar a^z = -tau'/(tau-taubar)
                (at tau=i, tau'=1 this is +i/2, |A| = 1/(2 Im tau))
  energy        integral |A|^2 gdV = |A|^2 * 2*pi*d
                                   = pi*d*|tau'|^2/(2*(Im tau)^2)
  geod. curv.   phi = g_{s sbar} - |g_{s zbar}|^2 g^{zbar z} = 0 identically
                (the modulus direction is null for the curvature form).

Landau ladder for the (0,0) block with the metric equal to the bundle
curvature: with D_z, D_zbar the Chern covariant derivatives,
[D_z, D_zbar] = g_{z zbar}, box = -g^{zbar z} D_z D_zbar, so D_z raises
the eigenvalue by exactly 1 and D_zbar lowers it; the kernel consists of
the d theta sections, hence spectrum {m, multiplicity d}.

Gram of the raw theta frame  psi^k = theta_k dz  (degree d, n = 1):
the x-integral kills all cross terms (characteristics differ mod d) and
each diagonal term is a full Gaussian integral:
   <psi^k, psi^l> = delta_{kl} * sqrt(2*Im(tau)/d).
Chern curvature of the resulting L^2 metric on the modulus family
tau(s) = tau0 + s:  R = -dd log H = 1/(8*(Im tau)^2) * identity,
independent of d and of the point on the frame.
"""

from __future__ import annotations

import numpy as np

from .errors import TruncationTooCoarse


def theta_value(k, d, z, tau, M=8):
    """M-truncated theta series with characteristic k/d.

    theta_k(z, tau) = sum_m exp(pi*i*d*(m + k/d)^2*tau + 2*pi*i*d*(m + k/d)*z)

    Satisfies theta(z+1) = theta(z) and
    theta(z+tau) = exp(-2*pi*i*d*z - pi*i*d*tau) * theta(z).
    The sum is recentred on the Gaussian peak so M terms on each side give
    a relative tail below exp(-pi*d*Im(tau)*(M+1/2)^2).
    """
    if M < 3:
        raise TruncationTooCoarse("theta truncation M must be >= 3")
    if np.imag(tau) <= 0:
        raise ValueError("Im tau must be positive")
    z = np.asarray(z, dtype=complex)
    t2 = float(np.imag(tau))
    y = np.imag(z) / t2
    # peak of |term| is at m = -y - k/d
    m0 = np.round(-y - k / d).astype(int) if z.ndim else int(round(float(-y) - k / d))
    out = np.zeros(np.shape(z), dtype=complex)
    for r in range(-M, M + 1):
        m = m0 + r
        u = m + k / d
        out = out + np.exp(1j * np.pi * d * u * u * tau + 2j * np.pi * d * u * z)
    return out


def theta_tail_bound(d, tau, M):
    """Relative bound on the omitted tail of the recentred series."""
    t2 = float(np.imag(tau))
    a = np.pi * d * t2
    lead = np.exp(-a * (M + 0.5) ** 2)
    # crude geometric majorant for the remaining terms
    ratio = np.exp(-a * (2 * M + 2))
    return 2.0 * lead / (1.0 - ratio)


def landau_spectrum(d, m_max):
    """Eigenvalues of the section Laplacian: level m with multiplicity d."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    return [(float(m), d) for m in range(m_max + 1)]


def shifted_green_eigenvalues(d, m_max, sigma=+1):
    """Spectral mapping 1/(m + sigma) of the Landau levels."""
    return [(1.0 / (m + sigma), mult) for m, mult in landau_spectrum(d, m_max)
            if abs(m + sigma) > 0]


def analytic_family_quantities(tau, d, tau_prime=1.0):
    """Exact fields of the pure-modulus family at modulus tau.

    Returns a dict with the lift field a^z (callable of covering-space z),
    the constant deformation coefficient A^z_{zbar}, the geodesic
    curvature (identically zero) and the energy integral |A|^2 gdV.
    """
    tau = complex(tau)
    tb = np.conj(tau)

    def a_z(z):
        return tau_prime * (np.asarray(z, dtype=complex) - np.conj(z)) / (tau - tb)

    return {
        "a_z": a_z,
        "A_const": -tau_prime / (tau - tb),
        "phi": 0.0,
        "A_energy": np.pi * d * abs(tau_prime) ** 2 / (2.0 * np.imag(tau) ** 2),
    }


def theta_frame_gram(tau, d):
    """Exact Gram of the raw frame {theta_k dz}: sqrt(2 Im tau / d) * Id."""
    return np.sqrt(2.0 * np.imag(tau) / d) * np.eye(d, dtype=complex)


def modulus_family_curvature(tau, d):
    """Chern curvature of the direct image along the modulus direction,
    in the frame orthonormalized at the evaluation point: (1/(8 Im(tau)^2)) Id."""
    return np.eye(d, dtype=complex) / (8.0 * np.imag(tau) ** 2)


def theta_gram_quadrature(tau, d, M=8, ny=400):
    """Gram of {theta_k dz} by series-term integration, as an independent
    cross-check of the closed form: the x-integral is done exactly term by
    term, the y-integral by trapezoid over the unit cell (the integrand is
    smooth and periodic after pairing, so this converges fast).
    """
    tau = complex(tau)
    t2 = np.imag(tau)
    ys = (np.arange(ny) + 0.5) / ny
    H = np.zeros((d, d), dtype=complex)
    for k in range(d):
        # <psi^k, psi^k> = 2*t2 * int_0^1 sum_m exp(-2 pi d t2 (y+m+k/d)^2) dy
        ms = np.arange(-M, M + 1)
        vals = np.exp(-2 * np.pi * d * t2 * (ys[None, :] + ms[:, None] + k / d) ** 2)
        H[k, k] = 2.0 * t2 * vals.sum(axis=0).mean()
    return H
