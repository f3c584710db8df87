"""The model operator D_A = d/dt + A(t) on a finite time interval.

A(t) interpolates A_minus -> A_plus = A_minus + delta through a switch
profile theta.  The discretization keeps two objects:

* a rectangular Crank-Nicolson matrix with spectral boundary conditions
  (negative eigendirections kept at -T, nonnegative at +T), used for
  kernel dimensions and the integer index;
* the pair of interior-Dirichlet Gram matrices Hm ~ D*D and Hp ~ DD*
  built from the forward and backward stencils on the shared interior
  nodes, used for every trace quantity.  At delta = 0 the two Grams agree
  exactly, so trace differences cancel identically instead of to O(h).

Traces of resolvents come from a two-sweep block-tridiagonal Green's
function recursion (linear in Nt), semigroup traces and the smoothed
counting estimator from banded eigensolves.
"""
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvals_banded

from . import _kernels
from .errors import (BoundaryDegeneracyWarning, DomainError,
                     FiniteIntervalArtifactWarning, IllSeparatedKernelWarning,
                     InputError)
from .operators import HermitianOperator, g_z, matrix_from_json

EPS = float(np.finfo(float).eps)
PROFILE_KINDS = ("logistic", "tanh", "ramp")
THETA_FLATNESS_TOL = 1e-8
MIN_TIME_STEPS = 16
BOUNDARY_KERNEL_TOL = 1e-10
KERNEL_SEPARATION_FACTOR = 10.0
REFERENCE_T = 12.0
REFERENCE_NT = 1200

# smoothed-counting estimator constants (tuned against the exact Abel
# transform of the endpoint-pair ssf; see tests/test_pushnitski.py)
XI_DISC_C_SIGMA = 4.5
XI_DISC_K_NEAR = 6
XI_DISC_SIGMA_FLOOR = 0.02


def theta_profile(kind, t, time_scale=1.0):
    """Switch profile value(s) at t; theta runs 0 -> 1 with theta(0)=1/2."""
    u = np.asarray(t, dtype=float) / time_scale
    if kind == "logistic":
        return 1.0 / (1.0 + np.exp(-u))
    if kind == "tanh":
        return 0.5 * (1.0 + np.tanh(u))
    if kind == "ramp":
        v = np.clip((u + 1.0) * 0.5, 0.0, 1.0)
        return v * v * (3.0 - 2.0 * v)
    raise InputError("unknown profile kind %r" % kind)


def theta_profile_derivative(kind, t, time_scale=1.0):
    u = np.asarray(t, dtype=float) / time_scale
    if kind == "logistic":
        p = 1.0 / (1.0 + np.exp(-u))
        return p * (1.0 - p) / time_scale
    if kind == "tanh":
        return 0.5 / (np.cosh(u) ** 2 * time_scale)
    if kind == "ramp":
        v = np.clip((u + 1.0) * 0.5, 0.0, 1.0)
        return 3.0 * v * (1.0 - v) / time_scale
    raise InputError("unknown profile kind %r" % kind)


@dataclass
class OperatorPath:
    """A(t) = a_minus + theta(t / time_scale) * delta."""
    a_minus: np.ndarray
    delta: np.ndarray
    profile: str = "tanh"
    time_scale: float = 1.0

    def __post_init__(self):
        self.a_minus = HermitianOperator(self.a_minus).matrix
        self.delta = HermitianOperator(self.delta).matrix
        if self.a_minus.shape != self.delta.shape:
            raise InputError("a_minus and delta dimensions differ")
        if self.profile not in PROFILE_KINDS:
            raise InputError("unknown profile kind %r" % self.profile)
        if not self.time_scale > 0.0:
            raise InputError("time_scale must be positive")

    @property
    def n(self):
        return self.a_minus.shape[0]

    @property
    def a_plus(self):
        return self.a_minus + self.delta

    def at(self, t):
        th = theta_profile(self.profile, t, self.time_scale)
        return self.a_minus + float(th) * self.delta

    def reversed(self):
        """The time-reversed path A(-t); exact because every shipped
        profile satisfies theta(-u) = 1 - theta(u)."""
        return OperatorPath(self.a_plus, -self.delta, self.profile,
                            self.time_scale)

    def endpoint_eigenvalues(self):
        return (np.linalg.eigvalsh(self.a_minus),
                np.linalg.eigvalsh(self.a_plus))


def is_fredholm(path, tol=1e-8):
    """Both endpoint operators boundedly invertible (min |eig| > tol)."""
    wm, wp = path.endpoint_eigenvalues()
    lo = min(np.abs(wm).min(), np.abs(wp).min())
    return bool(lo > tol)


def essential_spectrum_lines(path):
    """Vertical essential-spectrum positions contributed by each endpoint."""
    wm, wp = path.endpoint_eigenvalues()
    return {"minus": sorted(float(x) for x in wm),
            "plus": sorted(float(x) for x in wp)}


# ---------------------------------------------------------------------------
# discretization

def _midpoint_blocks(path, T, Nt, sign):
    """Crank-Nicolson node->midpoint blocks of (sign*d/dt + A(t)).

    Row k couples nodes k and k+1:  row_k = blo[k] f_k + bhi[k] f_{k+1},
    with A evaluated at the midpoint t_{k+1/2}.
    """
    n = path.n
    h = 2.0 * T / (Nt - 1)
    tm = -T + h * (np.arange(Nt - 1) + 0.5)
    th = theta_profile(path.profile, tm, path.time_scale)
    a_mid = path.a_minus[None, :, :] + th[:, None, None] * path.delta[None, :, :]
    eye = np.eye(n, dtype=a_mid.dtype)
    blo = -sign / h * eye + 0.5 * a_mid
    bhi = +sign / h * eye + 0.5 * a_mid
    return blo, bhi


def _gram_blocks(blo, bhi):
    """Interior-Dirichlet Gram of the bidiagonal stencil, as block
    tridiagonal (diagonal blocks Ad, superdiagonal blocks Bu)."""
    ad = np.einsum("kij,kil->kjl", bhi[:-1].conj(), bhi[:-1]) \
        + np.einsum("kij,kil->kjl", blo[1:].conj(), blo[1:])
    bu = np.einsum("kij,kil->kjl", blo[1:].conj(), bhi[1:])[:-1]
    return ad, bu


def _band_storage(ad, bu):
    """Lower band form of the real symmetric Gram for LAPACK band solvers."""
    m, n, _ = ad.shape
    size = m * n
    band = np.zeros((2 * n, size))
    for k in range(m):
        base = k * n
        for i in range(n):
            for j in range(i, n):
                band[j - i, base + i] = ad[k, j, i].real
        if k + 1 < m:
            for i in range(n):
                for j in range(n):
                    band[n + j - i, base + i] = bu[k, i, j].real
    return band


def _gram_eigenvalues(ad, bu):
    if np.iscomplexobj(ad) and np.abs(ad.imag).max() > 0.0:
        m, n, _ = ad.shape
        g = np.zeros((m * n, m * n), dtype=complex)
        for k in range(m):
            g[k*n:(k+1)*n, k*n:(k+1)*n] = ad[k]
            if k + 1 < m:
                g[k*n:(k+1)*n, (k+1)*n:(k+2)*n] = bu[k]
                g[(k+1)*n:(k+2)*n, k*n:(k+1)*n] = bu[k].conj().T
        return np.linalg.eigvalsh(g)
    return eigvals_banded(_band_storage(ad, bu), lower=True)


@dataclass
class DiscretizedDA:
    """Finite model of d/dt + A(t) on [-T, T] with Nt nodes.

    D is the rectangular boundary-constrained matrix (rows = interior
    midpoint equations, cols = admissible node amplitudes); the Gram pair
    lives in private caches and feeds every trace routine.
    """
    path: OperatorPath
    T: float
    Nt: int
    h: float
    bc: str
    rows: int
    cols: int
    _stencils: tuple = field(repr=False, default=None)
    _aps: np.ndarray = field(repr=False, default=None)
    _grams: tuple = field(repr=False, default=None)
    _mu: tuple = field(repr=False, default=None)

    @property
    def D(self):
        if self._aps is None:
            self._aps = _aps_matrix(self.path, self.T, self.Nt)
        return self._aps

    def gram_blocks(self):
        if self._grams is None:
            blo_m, bhi_m, blo_p, bhi_p = self._stencils
            self._grams = (_gram_blocks(blo_m, bhi_m),
                           _gram_blocks(blo_p, bhi_p))
        return self._grams

    def gram_eigenvalues(self):
        """Spectra of the interior Grams (Hm for D, Hp for the adjoint side)."""
        if self._mu is None:
            (adm, bum), (adp, bup) = self.gram_blocks()
            self._mu = (_gram_eigenvalues(adm, bum),
                        _gram_eigenvalues(adp, bup))
        return self._mu

    def trust_horizon(self):
        """Largest semigroup time before finite-interval artifacts: the
        spurious gap of the finite interval scales like (pi/T)^2."""
        return (self.T / np.pi) ** 2


def assemble(path, T=REFERENCE_T, Nt=REFERENCE_NT):
    """Discretize the path on [-T, T] with Nt Crank-Nicolson nodes.

    Preconditions: Nt >= MIN_TIME_STEPS and theta'(+-T) < THETA_FLATNESS_TOL
    (the switch must be flat at the ends so the endpoint operators are
    reached).  An endpoint eigenvalue within BOUNDARY_KERNEL_TOL of 0 fires
    BoundaryDegeneracyWarning.
    """
    if Nt < MIN_TIME_STEPS:
        raise InputError("Nt = %d is below the minimum %d" % (Nt, MIN_TIME_STEPS))
    if T <= 0.0:
        raise InputError("T must be positive")
    dpm = theta_profile_derivative(path.profile, -T, path.time_scale)
    dpp = theta_profile_derivative(path.profile, T, path.time_scale)
    if max(float(dpm), float(dpp)) >= THETA_FLATNESS_TOL:
        raise InputError(
            "profile not flat at the interval ends: theta'(+-T) = %.2e, "
            "need < %.0e (enlarge T or shrink time_scale)"
            % (max(float(dpm), float(dpp)), THETA_FLATNESS_TOL))
    wm, wp = path.endpoint_eigenvalues()
    scale = max(1.0, float(max(np.abs(wm).max(), np.abs(wp).max())))
    if min(np.abs(wm).min(), np.abs(wp).min()) < BOUNDARY_KERNEL_TOL * scale:
        warnings.warn("endpoint operator has an eigenvalue within %g of 0"
                      % (BOUNDARY_KERNEL_TOL * scale), BoundaryDegeneracyWarning)
    n = path.n
    blo_m, bhi_m = _midpoint_blocks(path, T, Nt, +1)
    blo_p, bhi_p = _midpoint_blocks(path, T, Nt, -1)
    rows = n * (Nt - 1)
    cols = n * Nt - int(np.sum(wm >= 0.0)) - int(np.sum(wp < 0.0))
    return DiscretizedDA(path=path, T=float(T), Nt=int(Nt),
                         h=2.0 * T / (Nt - 1), bc="aps", rows=rows, cols=cols,
                         _stencils=(blo_m, bhi_m, blo_p, bhi_p))


def _aps_matrix(path, T, Nt):
    """Dense rectangular matrix with spectral boundary constraints."""
    n = path.n
    blo, bhi = _midpoint_blocks(path, T, Nt, +1)
    m = Nt - 1
    dt = blo.dtype
    full = np.zeros((m * n, Nt * n), dtype=dt)
    for k in range(m):
        full[k*n:(k+1)*n, k*n:(k+1)*n] = blo[k]
        full[k*n:(k+1)*n, (k+1)*n:(k+2)*n] = bhi[k]
    wm, vm = np.linalg.eigh(path.a_minus)
    wp, vp = np.linalg.eigh(path.a_plus)
    keep_m = vm[:, wm < 0.0]      # strictly negative directions at -T
    keep_p = vp[:, wp >= 0.0]     # nonnegative directions at +T
    cols = keep_m.shape[1] + n * (Nt - 2) + keep_p.shape[1]
    basis = np.zeros((Nt * n, cols), dtype=dt)
    basis[0:n, 0:keep_m.shape[1]] = keep_m
    off = keep_m.shape[1]
    basis[n:(Nt - 1) * n, off:off + n * (Nt - 2)] = np.eye(n * (Nt - 2))
    off += n * (Nt - 2)
    basis[(Nt - 1) * n:, off:] = keep_p
    return full @ basis


def kernel_dims(d, tau=None):
    """(dim ker D, dim ker D^*) by singular-value rank counting.

    tau defaults to 100 eps ||D|| max(rows, cols).  When the singular
    values nearest the threshold are separated by less than
    KERNEL_SEPARATION_FACTOR, IllSeparatedKernelWarning fires.
    """
    mat = d.D if isinstance(d, DiscretizedDA) else np.asarray(d)
    rows, cols = mat.shape
    sv = np.linalg.svd(mat, compute_uv=False)
    if tau is None:
        tau = 100.0 * EPS * (sv[0] if sv.size else 0.0) * max(rows, cols)
    below = sv[sv <= tau]
    above = sv[sv > tau]
    if below.size and above.size and below.max() > 0.0 and \
            above.min() / below.max() < KERNEL_SEPARATION_FACTOR:
        warnings.warn(
            "singular values %.3e and %.3e straddle the rank threshold by "
            "less than a factor of %g" % (below.max(), above.min(),
                                          KERNEL_SEPARATION_FACTOR),
            IllSeparatedKernelWarning)
    rank = int(above.size)
    return cols - rank, rows - rank


def index(d, tau=None):
    nc, nr = kernel_dims(d, tau)
    return nc - nr


# ---------------------------------------------------------------------------
# trace quantities

def _check_resolvent_point(z):
    z = complex(z)
    if z.imag == 0.0 and z.real >= 0.0:
        raise DomainError("resolvent point must avoid [0, inf)")
    return z


def resolvent_trace_diff(d, z):
    """tr((Hp - z)^{-1} - (Hm - z)^{-1}), the resolvent-regularized side.

    Hm, Hp are the interior Grams of the forward/backward stencils; for a
    real spectral parameter the value is real and is returned as float.
    """
    z = _check_resolvent_point(z)
    (adm, bum), (adp, bup) = d.gram_blocks()
    adm = np.ascontiguousarray(adm, dtype=np.complex128)
    bum = np.ascontiguousarray(bum, dtype=np.complex128)
    adp = np.ascontiguousarray(adp, dtype=np.complex128)
    bup = np.ascontiguousarray(bup, dtype=np.complex128)
    val = _kernels.rgf_trace(adp, bup, z) - _kernels.rgf_trace(adm, bum, z)
    if z.imag == 0.0:
        return float(val.real)
    return complex(val)


def semigroup_trace_diff(d, t):
    """tr(exp(-t Hm)) - tr(exp(-t Hp)).

    Beyond the trust horizon (T/pi)^2 the finite interval's spurious gap
    contaminates the tail and FiniteIntervalArtifactWarning fires.
    """
    if t <= 0.0:
        raise DomainError("semigroup time must be positive")
    if t > d.trust_horizon():
        warnings.warn("t = %.3g beyond the finite-interval trust horizon %.3g"
                      % (t, d.trust_horizon()), FiniteIntervalArtifactWarning)
    mu_m, mu_p = d.gram_eigenvalues()
    return float(np.sum(np.exp(-t * mu_m)) - np.sum(np.exp(-t * mu_p)))


def ptf_residual(d, z):
    """Relative defect of the principal trace formula at spectral point z.

    lhs = tr((Hp-z)^{-1} - (Hm-z)^{-1}), rhs = tr(g_z(A+) - g_z(A-))/(2z).
    Returns (lhs, rhs, residual) with residual relative when |rhs| is
    nontrivial and absolute otherwise (the delta = 0 case).
    """
    z = _check_resolvent_point(z)
    lhs = resolvent_trace_diff(d, z)
    wm, wp = d.path.endpoint_eigenvalues()
    rhs = (np.sum(g_z(wp, z)) - np.sum(g_z(wm, z))) / (2.0 * z)
    rhs = float(rhs.real) if z.imag == 0.0 else complex(rhs)
    denom = abs(rhs)
    res = abs(lhs - rhs) / denom if denom > 1e-12 else abs(lhs - rhs)
    return lhs, rhs, float(res)


def xi_disc(d, lams):
    """Gaussian-smoothed counting difference between the Gram spectra.

    The mollified sample of the ssf of (Hp, Hm): a plain Gaussian counting
    sum whose width follows the local level spacing, with a narrowing cap
    only inside the spectral desert below the lowest positive breakpoint
    (endpoint-eigenvalue squared).  Residuals against the exact Abel
    transform stay below 0.1 away from breakpoint neighborhoods at the
    reference resolution; occasional random paths with awkward breakpoint
    spacings can exceed that near thresholds, so grids should exclude a
    0.1-radius around each breakpoint.
    """
    mu_m, mu_p = d.gram_eigenvalues()
    union = np.sort(np.concatenate([mu_m, mu_p]))
    wm, wp = d.path.endpoint_eigenvalues()
    bp = np.sort(np.concatenate([wm, wp]) ** 2)
    bp = bp[bp > 0.0]
    bp_lo = float(bp[0]) if bp.size else 0.0
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    out = _kernels.smoothed_count(
        np.ascontiguousarray(mu_m, dtype=float),
        np.ascontiguousarray(mu_p, dtype=float),
        np.ascontiguousarray(union, dtype=float),
        np.ascontiguousarray(lams, dtype=float),
        bp_lo, XI_DISC_C_SIGMA, XI_DISC_K_NEAR, XI_DISC_SIGMA_FLOOR)
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# scenario files

def _matrix_field(doc, name):
    val = doc.get(name)
    if val is None:
        raise InputError("scenario missing field %r" % name)
    if isinstance(val, dict) and "diag" in val:
        return np.diag(np.asarray(val["diag"], dtype=float))
    if isinstance(val, dict):
        return matrix_from_json(val)
    return np.asarray(val, dtype=float)


def path_from_scenario(doc):
    prof = doc.get("profile", {})
    return OperatorPath(_matrix_field(doc, "A_minus"),
                        _matrix_field(doc, "delta_A"),
                        profile=prof.get("kind", "tanh"),
                        time_scale=float(prof.get("time_scale", 1.0)))


def load_scenario(source):
    """Scenario JSON -> (OperatorPath, T, Nt).

    Accepts a dict or a file path.  Discretization defaults to the
    reference resolution.
    """
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            doc = json.load(fh)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise InputError("scenario must be a JSON object")
    path = path_from_scenario(doc)
    disc = doc.get("discretization", {})
    T = float(disc.get("T", REFERENCE_T))
    Nt = int(disc.get("Nt", REFERENCE_NT))
    return path, T, Nt
