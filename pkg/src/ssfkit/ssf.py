"""Spectral shift functions for finite Hermitian pairs.

Two independent routes are implemented.  The counting route is exact: the
ssf of a finite pair is the step function whose level on each segment is
the difference of strict counting functions.  The determinant route tracks
the phase of the perturbation determinant along a vertical line in the
upper half plane and reads the ssf from the boundary limit; the two are
compared segment-midpoint by segment-midpoint in the tests.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, EndpointCollisionWarning, InputError,
                     InvariantViolationError, NonConvergenceError,
                     PrecisionLossWarning)
from .operators import HermitianOperator, counting_function, spectral_projection
from .stepfun import StepFunction

PHASE_STEP_LIMIT = 0.45 * np.pi  # per-step phase budget on the det walk
DET_EVAL_BUDGET = 10 ** 6
EPS_GAP_FACTOR = 1e-6
EPS_FLOOR = 1e-12
GUARD_BAND = 10.0
AVERAGING_MAX_NODES = 2 ** 10
AVERAGING_TARGET = 1e-6
ENDPOINT_COLLISION_TOL = 1e-12


def _pair(h, h0):
    a = h if isinstance(h, HermitianOperator) else HermitianOperator(h)
    b = h0 if isinstance(h0, HermitianOperator) else HermitianOperator(h0)
    if a.n != b.n:
        raise InputError("operator pair has mismatched dimensions %d vs %d"
                         % (a.n, b.n))
    return a, b


def ssf_count(h, h0):
    """Exact counting ssf, xi(t) = #{eig h > t} - #{eig h0 > t}.

    Breakpoints are the union of the two spectra; zero-width and jump-free
    breakpoints are merged by the StepFunction normalization.
    """
    a, b = _pair(h, h0)
    br = np.sort(np.concatenate([a.eigenvalues, b.eigenvalues]))
    if br.size == 0:
        return StepFunction([], [0.0])
    probes = np.concatenate([[br[0] - 1.0], 0.5 * (br[:-1] + br[1:]),
                             [br[-1] + 1.0]])
    lv = [counting_function(a.eigenvalues, t) - counting_function(b.eigenvalues, t)
          for t in probes]
    return StepFunction(br, lv)


# ---------------------------------------------------------------------------
# determinant route

@dataclass
class DeterminantTrace:
    """Phase-tracked log of the perturbation determinant at lam + i eps.

    value is the continuously tracked complex logarithm; ys holds the
    heights visited and args the accumulated argument at each, so the
    per-step phase increments stay below pi/2 by construction.
    """
    lam: float
    eps: float
    value: complex
    ys: np.ndarray
    args: np.ndarray
    n_evals: int

    @property
    def steps(self):
        return len(self.ys) - 1


def perturbation_determinant(h, h0, z):
    """det((h - z)(h0 - z)^{-1}) as a product of paired spectral factors.

    Each eigenvalue of h is matched to the nearest unconsumed eigenvalue of
    h0 (the product does not depend on the pairing; pairing keeps every
    factor O(1)).  Real z is rejected, the determinant ratio is only
    boundary-safe off the real axis.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("perturbation determinant needs Im z != 0")
    a, b = _pair(h, h0)
    return _paired_det(a.eigenvalues, b.eigenvalues, z)


def _paired_det(wh, w0, z):
    avail = np.sort(w0).astype(complex)
    used = np.zeros(avail.size, dtype=bool)
    val = 1.0 + 0.0j
    for mu in np.sort(wh):
        dist = np.where(used, np.inf, np.abs(avail.real - mu))
        j = int(np.argmin(dist))
        used[j] = True
        val *= (mu - z) / (avail[j] - z)
    return val


def log_det_tracked(h, h0, lam, eps=None, y_start=None):
    """Track log det((h-z)(h0-z)^{-1}) down the line z = lam + iy.

    Starts at y_start (default 10x the joint spectral radius) where the
    principal branch is valid, and walks to lam + i eps keeping every phase
    increment under pi/2.  The initial grid is geometric with enough steps
    that a full 2 pi turn cannot hide inside one step (each spectral factor
    moves the phase by at most 1 per log-unit of y); adaptive bisection
    covers the rest.  Evaluation budget DET_EVAL_BUDGET, else
    NonConvergenceError.
    """
    a, b = _pair(h, h0)
    wh, w0 = a.eigenvalues, b.eigenvalues
    radius = max(1e-6, float(np.abs(np.concatenate([wh, w0])).max()),
                 abs(float(lam)))
    if y_start is None:
        y_start = 10.0 * radius
    if eps is None:
        eps = EPS_FLOOR
    if eps <= 0.0 or y_start <= eps:
        raise InputError("need 0 < eps < y_start")

    n_steps = int(np.ceil(2.0 * a.n * np.log(y_start / eps) / np.pi)) + 8
    ys = np.geomspace(y_start, eps, n_steps + 1)
    evals = [0]

    def det_at(y):
        evals[0] += 1
        if evals[0] > DET_EVAL_BUDGET:
            raise NonConvergenceError(
                "determinant tracking exceeded %d evaluations" % DET_EVAL_BUDGET)
        return _paired_det(wh, w0, lam + 1j * y)

    v0 = det_at(ys[0])
    arg = float(np.angle(v0))  # principal branch at the top
    track_y, track_arg = [ys[0]], [arg]

    def walk(y1, v1, y2, v2, depth):
        nonlocal arg
        d = np.angle(v2 / v1)
        if abs(d) < PHASE_STEP_LIMIT or depth >= 48:
            arg += d
            track_y.append(y2)
            track_arg.append(arg)
            return
        ym = np.sqrt(y1 * y2)
        vm = det_at(ym)
        walk(y1, v1, ym, vm, depth + 1)
        walk(ym, vm, y2, v2, depth + 1)

    v_prev = v0
    for k in range(1, ys.size):
        v_next = det_at(ys[k])
        walk(ys[k - 1], v_prev, ys[k], v_next, 0)
        v_prev = v_next
    value = np.log(abs(v_prev)) + 1j * arg
    return DeterminantTrace(lam=float(lam), eps=float(eps), value=value,
                            ys=np.asarray(track_y), args=np.asarray(track_arg),
                            n_evals=evals[0])


def _union_gap(wh, w0):
    u = np.sort(np.concatenate([wh, w0]))
    gaps = np.diff(u)
    gaps = gaps[gaps > 0.0]
    return float(gaps.min()) if gaps.size else 0.0


def ssf_det(h, h0, lams, eps=None):
    """Determinant-route ssf samples, (1/pi) Im log det at lam + i eps.

    eps defaults to EPS_GAP_FACTOR times the smallest positive gap of the
    union spectrum, floored at EPS_FLOOR.  Points inside the guard band
    (GUARD_BAND * eps of a breakpoint) fire PrecisionLossWarning.
    """
    a, b = _pair(h, h0)
    wh, w0 = a.eigenvalues, b.eigenvalues
    if eps is None:
        gap = _union_gap(wh, w0)
        eps = max(EPS_GAP_FACTOR * gap, EPS_FLOOR)
    union = np.sort(np.concatenate([wh, w0]))
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    out = np.empty(lams.size)
    for i, lam in enumerate(lams):
        if union.size and np.abs(union - lam).min() < GUARD_BAND * eps:
            warnings.warn(
                "ssf_det point %.6g is within the %g guard band of a breakpoint"
                % (lam, GUARD_BAND * eps), PrecisionLossWarning)
        out[i] = log_det_tracked(h, h0, lam, eps).value.imag / np.pi
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# identities

def trace_formula_residual(h, h0, f):
    """| tr(f(h) - f(h0)) - integral of xi df |, both sides exact.

    The integral side uses the counting ssf segment sum, so the residual is
    pure floating-point noise for polynomially bounded smooth f.
    """
    a, b = _pair(h, h0)
    lhs = float(np.sum(f(a.eigenvalues)) - np.sum(f(b.eigenvalues)))
    rhs = ssf_count(a, b).integrate_df(f)
    return abs(lhs - rhs)


def spectral_averaging(h0, v, interval, target=AVERAGING_TARGET):
    """Xi(X) = integral over s in [0,1] of tr(V E_{H0 + sV}(X)) ds.

    Gauss-Legendre in s, doubling the node count until two refinements
    agree within target or AVERAGING_MAX_NODES is reached.  X is half-open
    [a, b).  Eigenvalues of a node operator within ENDPOINT_COLLISION_TOL
    of the boundary fire EndpointCollisionWarning.
    """
    b0, vv = _pair(h0, v)
    a, b = float(interval[0]), float(interval[1])
    vmat = vv.matrix

    def quad(n):
        xs, ws = np.polynomial.legendre.leggauss(n)
        s = 0.5 * (xs + 1.0)
        total = 0.0
        for si, wi in zip(s, 0.5 * ws):
            hs = HermitianOperator(b0.matrix + si * vmat)
            wdist = np.abs(np.concatenate([hs.eigenvalues - a, hs.eigenvalues - b]))
            if wdist.size and wdist.min() < ENDPOINT_COLLISION_TOL:
                warnings.warn(
                    "eigenvalue within %g of interval endpoint at s=%.4f"
                    % (ENDPOINT_COLLISION_TOL, si), EndpointCollisionWarning)
            proj = spectral_projection(hs, a, b)
            total += wi * float(np.trace(vmat @ proj).real)
        return total

    n = 16
    prev = quad(n)
    while n < AVERAGING_MAX_NODES:
        n *= 2
        cur = quad(n)
        if abs(cur - prev) < target:
            return cur
        prev = cur
    return prev


def invariance_check(h, h0, phi):
    """Common integer d with xi(.; phi(h), phi(h0)) = sign(phi') * xi + d.

    phi must be strictly monotone on the union spectrum.  The check
    evaluates both sides on every segment midpoint of the appropriate step
    function and raises InvariantViolationError unless the difference is a
    single integer on all segments (0 for genuine reparametrizations).
    """
    a, b = _pair(h, h0)
    union = np.sort(np.concatenate([a.eigenvalues, b.eigenvalues]))
    pu = np.asarray(phi(union), dtype=float)
    d = np.diff(pu)
    if union.size > 1 and not (np.all(d > 0.0) or np.all(d < 0.0)):
        raise InputError("phi is not strictly monotone on the union spectrum")
    increasing = union.size < 2 or bool(np.all(d > 0.0))

    xi0 = ssf_count(a, b)
    xi1 = ssf_count(HermitianOperator(
        _apply_real(a, phi)), HermitianOperator(_apply_real(b, phi)))
    mids = xi0.segment_midpoints()
    if mids.size == 0:
        return 0
    vals = []
    for m in mids:
        lhs = xi1(float(np.asarray(phi(np.asarray([m])))[0]))
        rhs = xi0(m) if increasing else -xi0(m)
        vals.append(lhs - rhs)
    vals = np.asarray(vals)
    if not np.allclose(vals, np.round(vals[0])) or \
            abs(vals[0] - round(vals[0])) > 1e-9:
        raise InvariantViolationError(
            "reparametrization defect is not a common integer: %s" % vals)
    return int(round(vals[0]))


def _apply_real(op, phi):
    w, u = op.eigenvalues, op.eigenvectors
    return (u * np.asarray(phi(w))) @ u.conj().T
