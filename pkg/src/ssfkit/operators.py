"""Finite Hermitian operators: validated wrappers, spectral calculus,
counting functions, and the resolvent-type symbol g_z.

Everything downstream (ssf, model discretization, flow) manipulates plain
numpy arrays through the helpers here, so the validation tolerances live in
one place.
"""
import json

import numpy as np

HERMITICITY_RTOL = 1e-12
DECOMP_RTOL = 1e-10

from .errors import DomainError, InputError


def _as_matrix(a):
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError("expected a square matrix, got shape %s" % (m.shape,))
    if not np.all(np.isfinite(m)):
        raise InputError("matrix has non-finite entries")
    return m


def hermiticity_defect(a):
    """Frobenius norm of the anti-Hermitian part."""
    a = np.asarray(a)
    return float(np.linalg.norm(a - a.conj().T))


class HermitianOperator:
    """A validated finite Hermitian matrix with a cached eigendecomposition.

    The constructor checks hermiticity against
    ``HERMITICITY_RTOL * max(1, ||H||_F)``; the decomposition is checked
    once, lazily, for reconstruction residual and frame orthonormality at
    ``DECOMP_RTOL`` scale.  n = 1 is allowed.
    """

    def __init__(self, matrix):
        m = _as_matrix(matrix)
        scale = max(1.0, float(np.linalg.norm(m)))
        defect = hermiticity_defect(m)
        if defect > HERMITICITY_RTOL * scale:
            raise InputError(
                "matrix is not Hermitian: defect %.3e exceeds %.3e"
                % (defect, HERMITICITY_RTOL * scale))
        self.matrix = 0.5 * (m + m.conj().T)
        self.n = m.shape[0]
        self._eig = None

    def _decompose(self):
        if self._eig is None:
            w, u = np.linalg.eigh(self.matrix)
            scale = max(1.0, float(np.linalg.norm(self.matrix)))
            resid = np.linalg.norm(self.matrix - (u * w) @ u.conj().T)
            if resid > DECOMP_RTOL * scale:
                raise RuntimeError(
                    "eigendecomposition residual %.3e above tolerance" % resid)
            frame = np.linalg.norm(u.conj().T @ u - np.eye(self.n))
            if frame > DECOMP_RTOL:
                raise RuntimeError(
                    "eigenvector frame not orthonormal: %.3e" % frame)
            self._eig = (w, u)
        return self._eig

    @property
    def eigenvalues(self):
        return self._decompose()[0]

    @property
    def eigenvectors(self):
        return self._decompose()[1]

    def norm(self):
        w = self.eigenvalues
        return float(np.abs(w).max()) if w.size else 0.0

    def __repr__(self):
        return "HermitianOperator(n=%d)" % self.n


def _eigs_of(op):
    if isinstance(op, HermitianOperator):
        return op.eigenvalues
    arr = np.asarray(op)
    if arr.ndim == 1:
        return arr
    return HermitianOperator(arr).eigenvalues


def counting_function(op, t):
    """Strict spectral counting, #{eigenvalues > t}.

    Accepts a HermitianOperator, a square matrix, or a 1-d array of
    eigenvalues.  No snapping: an eigenvalue exactly at t is not counted.
    """
    w = _eigs_of(op)
    return int(np.sum(w > t))


def spectral_projection(op, a, b):
    """Orthogonal projection onto the spectral subspace of [a, b).

    Half-open on the right, so spectral_projection(H, 0, inf) includes a
    kernel.  An empty intersection returns the zero matrix.
    """
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    w, u = op.eigenvalues, op.eigenvectors
    mask = (w >= a) & (w < b)
    if not mask.any():
        return np.zeros_like(op.matrix)
    cols = u[:, mask]
    return cols @ cols.conj().T


def apply_function(op, f):
    """U f(Lambda) U^* through the eigendecomposition.

    Raises DomainError when f produces non-finite values on the spectrum.
    """
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    w, u = op.eigenvalues, op.eigenvectors
    fw = np.asarray(f(w))
    if not np.all(np.isfinite(fw)):
        raise DomainError("function is not finite on the spectrum")
    return (u * fw) @ u.conj().T


def g_z(x, z):
    """The symbol x (x^2 - z)^(-1/2) on the principal branch.

    z must avoid [0, inf); real negative z and genuinely complex z are
    fine.  Satisfies g_conj(z)(x) = conj(g_z(x)) for real x.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real >= 0.0:
        raise DomainError("g_z undefined for z on [0, inf)")
    x = np.asarray(x, dtype=float)
    val = x / np.sqrt(x * x - z)
    if z.imag == 0.0:
        val = val.real
    return val if val.ndim else val.item()


def spawn_rngs(seed, k):
    """k independent child generators from one seed (splittable stream)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


def random_hermitian(n, rng, scale=1.0):
    """scale * (M + M^*) / 2 with independent standard-normal re/im parts.

    Deterministic given the generator state; pass an integer to seed a
    fresh default_rng.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianOperator(scale * 0.5 * (m + m.conj().T))


# ---------------------------------------------------------------------------
# JSON matrix interchange: {"n": n, "re": [[...]], "im": [[...]] (optional)}

def matrix_to_json(m):
    m = np.asarray(m)
    doc = {"n": int(m.shape[0]), "re": m.real.tolist()}
    if np.iscomplexobj(m) and np.any(m.imag != 0.0):
        doc["im"] = m.imag.tolist()
    return doc


def matrix_from_json(doc):
    """Parse and validate a Hermitian matrix document.

    Rejects non-Hermitian input naming the worst offending entry.
    """
    if not isinstance(doc, dict) or "n" not in doc or "re" not in doc:
        raise InputError("matrix document needs fields 'n' and 're'")
    n = int(doc["n"])
    re = np.asarray(doc["re"], dtype=float)
    if re.shape != (n, n):
        raise InputError("'re' has shape %s, expected (%d, %d)" % (re.shape, n, n))
    m = re.astype(complex)
    if "im" in doc and doc["im"] is not None:
        im = np.asarray(doc["im"], dtype=float)
        if im.shape != (n, n):
            raise InputError("'im' has shape %s, expected (%d, %d)" % (im.shape, n, n))
        m = m + 1j * im
    defect = np.abs(m - m.conj().T)
    scale = max(1.0, float(np.linalg.norm(m)))
    if defect.max() > HERMITICITY_RTOL * scale:
        i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
        raise InputError(
            "matrix is not Hermitian: entry (%d, %d) = %s vs conj transpose %s"
            % (i, j, m[i, j], np.conj(m[j, i])))
    if "im" not in doc or doc["im"] is None:
        m = m.real
    return m


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_json(json.load(fh))
