"""Moment-tensor point sources, source-time functions, receivers.

A point source is projected onto the owning element through the
inverse-mass-weighted cardinal basis, so quadrature against a constant
test function returns exactly M g(t).  Time derivatives of the source
wavelets are closed-form, which keeps the temporal order of the Taylor
stepper intact.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedOrder
from .mesh import locate_point
from .operators import eval_basis_at
from .physics import n_components

MAX_STF_ORDER = 20


@dataclass(frozen=True)
class GaussianSTF:
    """exp(-(t-t0)^2 / (2 sigma^2)) / (sigma sqrt(2 pi)); unit integral."""

    sigma: float
    t0: float = 0.0

    def eval(self, t, k=0):
        if k > MAX_STF_ORDER:
            raise UnsupportedOrder(f"derivative order {k} > {MAX_STF_ORDER}")
        u = (t - self.t0) / (self.sigma * np.sqrt(2.0))
        g = np.exp(-u * u) / (self.sigma * np.sqrt(2.0 * np.pi))
        if k == 0:
            return g
        # d^k/du^k exp(-u^2) = (-1)^k H_k(u) exp(-u^2), H_k Hermite
        h_prev, h = 1.0, 2.0 * u
        for m in range(1, k):
            h_prev, h = h, 2.0 * u * h - 2.0 * m * h_prev
        return (-1.0 / (self.sigma * np.sqrt(2.0))) ** k * h * g


@dataclass(frozen=True)
class RampSTF:
    """(t/T^2) exp(-t/T) for t >= 0, zero before onset."""

    T: float

    def eval(self, t, k=0):
        if k > MAX_STF_ORDER:
            raise UnsupportedOrder(f"derivative order {k} > {MAX_STF_ORDER}")
        if t < 0.0:
            return 0.0
        # g^(k) = exp(-t/T) (a_k t + b_k)
        a, b = 1.0 / self.T ** 2, 0.0
        for _ in range(k):
            a, b = -a / self.T, a - b / self.T
        return np.exp(-t / self.T) * (a * t + b)


def stf_eval(stf, t, k=0):
    return stf.eval(t, k)


def _voigt(M, dim):
    M = np.asarray(M, dtype=float)
    if M.shape != (dim, dim):
        raise ValueError(f"moment tensor must be {dim}x{dim}, got {M.shape}")
    M = 0.5 * (M + M.T)
    if dim ==  3:
        return np.array([M[0, 0], M[1, 1], M[2, 2], M[0, 1], M[0, 2], M[1, 2]])
    return np.array([M[0, 0], M[1, 1], M[0, 1]])


class MomentTensorSource:
    """Point source feeding M_ij g(t) into the stress-rate equations."""

    def __init__(self, mesh, ops, location, moment, stf):
        self.location = tuple(float(x) for x in location)
        self.stf = stf
        self.dim = mesh.dim
        self.m_voigt = _voigt(moment, mesh.dim)
        self.elem, ref = locate_point(mesh, location)
        if any(abs(r) >= 1.0 - 1e-12 for r in ref):
            warnings.warn("source sits on an element boundary; it is "
                          "injected into the owning element only")
        self.ref = ref
        w = ops.rule.weights
        stencil = np.ones(())
        for r in ref:
            stencil = np.multiply.outer(stencil, eval_basis_at(ops, r) / w)
        self.stencil = stencil / mesh.jacobian

    def inject(self, dq, t, k=0):
        g = self.stf.eval(t, k)
        if g == 0.0:
            return
        nv = self.dim
        sel = (slice(nv, nv + self.m_voigt.size),) + self.elem
        dq[sel] += (self.m_voigt.reshape((-1,) + (1,) * self.dim)
                    * (g * self.stencil))


def inject_source(rhs, src, t, k=0):
    """Add the source term at time t (k-th time derivative) to the Q part
    of an rhs buffer."""
    src.inject(rhs.dQ, t, k)
    return rhs


class Receiver:
    """Samples field components at a fixed physical point.

    Usable directly as a run() callback; interval None records every call.
    """

    def __init__(self, mesh, ops, location, components="velocity",
                 interval=None):
        self.location = tuple(float(x) for x in location)
        self.dim = mesh.dim
        self.elem, ref = locate_point(mesh, location)
        basis = np.ones(())
        for r in ref:
            basis = np.multiply.outer(basis, eval_basis_at(ops, r))
        self.basis = basis
        names = ["vx", "vy", "vz"][: mesh.dim]
        if components == "all":
            names += {2: ["sxx", "syy", "sxy"],
                      3: ["sxx", "syy", "szz", "sxy", "sxz", "syz"]}[mesh.dim]
            self.n_comp = n_components(mesh.dim)
        elif components == "velocity":
            self.n_comp = mesh.dim
        else:
            raise ValueError(f"unknown component set {components!r}")
        self.names = names
        self.interval = interval
        self.times = []
        self.samples = []

    def __call__(self, state):
        if self.interval is not None and self.times:
            if state.t < self.times[-1] + self.interval - 1e-12:
                return
        record(self, state, state.t)

    def series(self):
        return np.asarray(self.times), np.asarray(self.samples)


def record(receiver, state, t):
    """Append (t, field values at the receiver point); pure read."""
    if receiver.times and t <= receiver.times[-1]:
        return
    q = state.Q[(slice(0, receiver.n_comp),) + receiver.elem]
    axes = list(range(1, 1 + receiver.dim))
    vals = np.tensordot(q, receiver.basis, axes=(axes, list(range(receiver.dim))))
    receiver.times.append(float(t))
    receiver.samples.append(vals)


def write_seismogram(path, receiver):
    """CSV with header t,vx,vy[,vz,...], one row per sample, %.16e."""
    with open(path, "w") as f:
        f.write("t," + ",".join(receiver.names) + "\n")
        for t, vals in zip(receiver.times, receiver.samples):
            f.write(",".join(f"{x:.16e}" for x in (t, *vals)) + "\n")
