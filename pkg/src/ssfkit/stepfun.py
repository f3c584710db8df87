"""Compactly supported step functions, the exact carrier for finite-rank
spectral shift functions.

A StepFunction has m ascending breakpoints and m+1 levels, the outermost
two being zero (the function vanishes outside the breakpoint hull).
Integration, integration against df, one-sided values and the algebra
needed by chain/antisymmetry identities are all exact.
"""
import csv
import io
import json

import numpy as np

from .errors import InputError

MERGE_WIDTH = 0.0  # breakpoints closer than this collapse to one


class StepFunction:
    def __init__(self, breakpoints, levels):
        br = np.asarray(breakpoints, dtype=float)
        lv = np.asarray(levels, dtype=float)
        if br.ndim != 1 or lv.ndim != 1 or lv.size != br.size + 1:
            raise InputError("need m breakpoints and m+1 levels")
        if br.size and np.any(np.diff(br) < 0.0):
            raise InputError("breakpoints must be ascending")
        if not (np.all(np.isfinite(br)) and np.all(np.isfinite(lv))):
            raise InputError("non-finite breakpoint or level")
        br, lv = self._merge(br, lv)
        if lv.size and (lv[0] != 0.0 or lv[-1] != 0.0):
            raise InputError("outermost levels must vanish")
        self.breakpoints = br
        self.levels = lv

    @staticmethod
    def _merge(br, lv):
        # collapse zero-width segments, then drop jump-free breakpoints
        keep_br, keep_lv = [], [lv[0]]
        i = 0
        while i < br.size:
            j = i
            while j + 1 < br.size and br[j + 1] - br[i] <= MERGE_WIDTH:
                j += 1
            keep_br.append(br[i])
            keep_lv.append(lv[j + 1])
            i = j + 1
        br = np.array(keep_br)
        lv = np.array(keep_lv)
        jumps = np.diff(lv) != 0.0
        return br[jumps], np.concatenate([[lv[0]], lv[1:][jumps]])

    # ------------------------------------------------------------- queries
    def __call__(self, lam):
        """Right-continuous evaluation (value of the segment to the right)."""
        lam = np.asarray(lam, dtype=float)
        idx = np.searchsorted(self.breakpoints, lam, side="right")
        out = self.levels[idx]
        return out if out.ndim else float(out)

    def value_left(self, lam):
        idx = np.searchsorted(self.breakpoints, lam, side="left")
        return float(self.levels[idx])

    def value_right(self, lam):
        idx = np.searchsorted(self.breakpoints, lam, side="right")
        return float(self.levels[idx])

    def segment_midpoints(self):
        br = self.breakpoints
        return 0.5 * (br[:-1] + br[1:]) if br.size > 1 else np.empty(0)

    # ---------------------------------------------------------- integrals
    def integral(self):
        """Exact integral over the line (finite by compact support)."""
        br, lv = self.breakpoints, self.levels
        if br.size < 2:
            return 0.0
        return float(np.dot(lv[1:-1], np.diff(br)))

    def abs_integral(self):
        br, lv = self.breakpoints, self.levels
        if br.size < 2:
            return 0.0
        return float(np.dot(np.abs(lv[1:-1]), np.diff(br)))

    def integrate_df(self, f):
        """Exact integral of xi df, i.e. sum_k xi_k (f(b_{k+1}) - f(b_k)).

        This is the step-function form of integrating xi against f', hence
        equals tr(f(H) - f(H0)) when self is the counting ssf of the pair.
        """
        br, lv = self.breakpoints, self.levels
        if br.size < 2:
            return 0.0
        fb = np.asarray(f(br), dtype=float)
        return float(np.dot(lv[1:-1], np.diff(fb)))

    def restrict_integral(self, a, b):
        """Exact integral of the step function over [a, b]."""
        br, lv = self.breakpoints, self.levels
        edges = np.concatenate([[a], np.clip(br, a, b), [b]])
        widths = np.diff(edges)
        return float(np.dot(lv, widths))

    # ------------------------------------------------------------- algebra
    def _binary(self, other, op):
        if not isinstance(other, StepFunction):
            raise InputError("expected a StepFunction")
        br = np.union1d(self.breakpoints, other.breakpoints)
        # one probe point per segment
        pts = np.concatenate([[br[0] - 1.0], 0.5 * (br[:-1] + br[1:]), [br[-1] + 1.0]]) \
            if br.size else np.array([0.0])
        lv = op(np.asarray(self(pts)), np.asarray(other(pts)))
        return StepFunction(br, lv)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return StepFunction(self.breakpoints, -self.levels)

    def __eq__(self, other):
        return (isinstance(other, StepFunction)
                and np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.levels, other.levels))

    def __repr__(self):
        return "StepFunction(%d breakpoints)" % self.breakpoints.size

    # ----------------------------------------------------------------- io
    def to_json(self):
        return {"breakpoints": self.breakpoints.tolist(),
                "levels": self.levels.tolist()}

    @classmethod
    def from_json(cls, doc):
        if "breakpoints" not in doc or "levels" not in doc:
            raise InputError("step function document needs breakpoints and levels")
        return cls(doc["breakpoints"], doc["levels"])

    def to_csv(self):
        """Rows 'lambda,xi' at finite segment midpoints (the staircase body)."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["lambda", "xi"])
        for lam, lv in zip(self.segment_midpoints(), self.levels[1:-1]):
            w.writerow(["%.17g" % lam, "%.17g" % lv])
        return buf.getvalue()

    def save(self, path, fmt="json"):
        if fmt == "json":
            with open(path, "w") as fh:
                json.dump(self.to_json(), fh, indent=1)
        elif fmt == "csv":
            with open(path, "w") as fh:
                fh.write(self.to_csv())
        else:
            raise InputError("unknown format %r" % fmt)
