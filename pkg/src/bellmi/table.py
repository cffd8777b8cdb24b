"""Exact finite probability tables and Shannon information measures.

Everything here is exact arithmetic on small dense tables: a
:class:`FiniteDistribution` is a joint probability table over named discrete
variables, and all entropies / mutual informations are computed in bits
(log base 2) directly from the table.

Conventions fixed for the whole package:

- ``0 * log 0 := 0`` (continuity convention).
- Weights must sum to 1 within ``NORM_ATOL`` at construction; inputs further
  off are rejected rather than silently renormalized, to surface model bugs.
- Mutual informations in ``[-MI_CLAMP, 0)`` are clamped to 0; anything more
  negative raises :class:`~bellmi.errors.InternalConsistencyError`.
- Mutual information is evaluated in the KL-ratio form
  ``sum p * log2(p / (pA * pB))``, which is algebraically identical to
  ``H(A) + H(B) - H(A u B)`` but returns exactly 0.0 when the table
  factorizes exactly in floating point (independent variables built from
  dyadic weights come out at literal zero, not 1e-16).

Tables are immutable; every operation returns a new table, so concurrent use
needs no coordination.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ConditioningError,
    ConfigError,
    InternalConsistencyError,
    ValidationError,
)

# Bits; InfoBits in the package's vocabulary is a plain float carrying bits.
InfoBits = float

NORM_ATOL = 1e-12
MI_CLAMP = 1e-10


def binary_entropy(p):
    """Binary entropy h(p) in bits; accepts a scalar or an array.

    h(0) = h(1) = 0 by the 0*log0 convention.  Values outside [0, 1] raise
    :class:`ValidationError`.
    """
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValidationError(f"binary_entropy: p must lie in [0, 1], got {p!r}")
    out = np.zeros_like(arr)
    interior = (arr > 0.0) & (arr < 1.0)
    q = arr[interior]
    out[interior] = -q * np.log2(q) - (1.0 - q) * np.log2(1.0 - q)
    if np.isscalar(p) or arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ProductCheck:
    """Result of a conditional-factorization test.

    ``max_deviation`` is the max-norm distance between P(A,B|c) and
    P(A|c)P(B|c) over all conditioning assignments c with P(c) > 0;
    ``witness`` locates the worst cell (assignment dict) when the check fails.
    """

    ok: bool
    max_deviation: float
    witness: Optional[dict] = None
    tol: float = 1e-9


class FiniteDistribution:
    """Joint probability table over named discrete variables.

    Parameters
    ----------
    variables:
        Sequence of ``(name, labels)`` pairs.  Names must be unique; labels
        are the finite alphabet of each variable (hashable, unique).
    weights:
        Array of joint probabilities with one axis per variable, in the
        given order.  Must be nonnegative and sum to 1 within ``NORM_ATOL``.
    """

    __slots__ = ("_names", "_labels", "_axis", "_weights")

    def __init__(self, variables: Sequence[tuple[str, Sequence[Hashable]]], weights):
        names = tuple(name for name, _ in variables)
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate variable names in {names}")
        labels = tuple(tuple(labs) for _, labs in variables)
        for name, labs in zip(names, labels):
            if len(labs) == 0:
                raise ConfigError(f"variable {name!r} has an empty alphabet")
            if len(set(labs)) != len(labs):
                raise ConfigError(f"variable {name!r} has duplicate labels")
        w = np.asarray(weights, dtype=np.float64)
        shape = tuple(len(labs) for labs in labels)
        if w.shape != shape:
            raise ConfigError(f"weights shape {w.shape} does not match alphabets {shape}")
        if np.any(w < 0.0):
            raise ValidationError("negative weight in distribution")
        total = float(w.sum())
        if abs(total - 1.0) > NORM_ATOL:
            raise ValidationError(
                f"weights sum to {total!r}, off by more than {NORM_ATOL}; "
                "normalize upstream instead of passing unnormalized tables"
            )
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "_names", names)
        object.__setattr__(self, "_labels", labels)
        object.__setattr__(self, "_axis", {n: i for i, n in enumerate(names)})
        object.__setattr__(self, "_weights", w)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("FiniteDistribution is immutable")

    # ------------------------------------------------------------------
    # basic accessors
    # ------------------------------------------------------------------

    @property
    def variables(self) -> tuple[str, ...]:
        return self._names

    def labels(self, name: str) -> tuple[Hashable, ...]:
        return self._labels[self._axis_of(name)]

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def _axis_of(self, name: str) -> int:
        try:
            return self._axis[name]
        except KeyError:
            raise ConfigError(f"unknown variable {name!r}; have {self._names}") from None

    def _axes_of(self, names: Iterable[str]) -> tuple[int, ...]:
        return tuple(self._axis_of(n) for n in names)

    def prob(self, assignment: Mapping[str, Hashable]) -> float:
        """Probability of a full joint assignment ``{name: label}``."""
        if set(assignment) != set(self._names):
            raise ConfigError("prob() needs a full assignment of every variable")
        idx = tuple(
            self._label_pos(name, assignment[name]) for name in self._names
        )
        return float(self._weights[idx])

    def _label_pos(self, name: str, label: Hashable) -> int:
        labs = self._labels[self._axis_of(name)]
        try:
            return labs.index(label)
        except ValueError:
            raise ConfigError(f"unknown label {label!r} for variable {name!r}") from None

    @classmethod
    def from_entries(
        cls,
        variables: Sequence[tuple[str, Sequence[Hashable]]],
        entries: Iterable[tuple[Sequence[Hashable], float]],
    ) -> "FiniteDistribution":
        """Build from sparse ``(assignment, probability)`` pairs.

        Assignments list one label per variable, in variable order.
        Unlisted cells are zero.  Repeated assignments accumulate.
        """
        labels = [tuple(labs) for _, labs in variables]
        lookup = [{lab: j for j, lab in enumerate(labs)} for labs in labels]
        w = np.zeros(tuple(len(labs) for labs in labels), dtype=np.float64)
        for assignment, p in entries:
            if len(assignment) != len(labels):
                raise ConfigError(
                    f"assignment {assignment!r} does not cover all {len(labels)} variables"
                )
            try:
                idx = tuple(lookup[i][lab] for i, lab in enumerate(assignment))
            except KeyError:
                raise ConfigError(f"assignment {assignment!r} uses an unknown label") from None
            w[idx] += p
        return cls(variables, w)

    def entries(self, *, nonzero: bool = True):
        """Iterate ``(assignment_tuple, weight)`` in row-major order."""
        for idx in np.ndindex(*self._weights.shape):
            p = float(self._weights[idx])
            if nonzero and p == 0.0:
                continue
            yield tuple(self._labels[i][j] for i, j in enumerate(idx)), p

    def allclose(self, other: "FiniteDistribution", atol: float = 1e-12) -> bool:
        if self._names != other._names or self._labels != other._labels:
            return False
        return bool(np.allclose(self._weights, other._weights, rtol=0.0, atol=atol))

    def __repr__(self):
        dims = ", ".join(f"{n}[{len(l)}]" for n, l in zip(self._names, self._labels))
        return f"FiniteDistribution({dims})"

    # ------------------------------------------------------------------
    # table operations
    # ------------------------------------------------------------------

    def marginal(self, keep: Iterable[str]) -> "FiniteDistribution":
        """Sum out every variable not in ``keep`` (kept in canonical order)."""
        keep_set = set(keep)
        axes = self._axes_of(keep_set)  # validates names
        del axes
        kept = [
            (n, self._labels[i]) for i, n in enumerate(self._names) if n in keep_set
        ]
        if not kept:
            raise ConfigError("marginal() needs at least one variable to keep")
        drop = tuple(i for i, n in enumerate(self._names) if n not in keep_set)
        w = self._weights.sum(axis=drop) if drop else self._weights
        return FiniteDistribution(kept, w)

    def condition(self, evidence: Mapping[str, Hashable]) -> "FiniteDistribution":
        """Renormalized restriction to ``{name: label}`` evidence.

        All variables are retained (the conditioned ones become point
        masses).  Zero-probability evidence raises
        :class:`ConditioningError`, never a silent NaN.
        """
        if not evidence:
            return self
        mask = np.ones_like(self._weights, dtype=bool)
        for name, label in evidence.items():
            ax = self._axis_of(name)
            pos = self._label_pos(name, label)
            sel = np.zeros(self._weights.shape[ax], dtype=bool)
            sel[pos] = True
            mask &= sel.reshape(
                tuple(-1 if i == ax else 1 for i in range(self._weights.ndim))
            )
        restricted = np.where(mask, self._weights, 0.0)
        total = float(restricted.sum())
        if total <= 0.0:
            raise ConditioningError(f"evidence {dict(evidence)!r} has probability zero")
        return FiniteDistribution(
            list(zip(self._names, self._labels)), restricted / total
        )

    # ------------------------------------------------------------------
    # information measures (bits)
    # ------------------------------------------------------------------

    def entropy(self, variables: Optional[Iterable[str]] = None) -> InfoBits:
        """Shannon entropy H of the marginal on ``variables`` (default: all)."""
        if variables is None:
            w = self._weights
        else:
            w = self.marginal(variables)._weights
        p = w[w > 0.0]
        return float(-(p * np.log2(p)).sum())

    def _grouped(self, groups: Sequence[Sequence[str]]) -> np.ndarray:
        """Marginal over the union of groups, axes ordered group by group."""
        flat = [n for g in groups for n in g]
        if len(set(flat)) != len(flat):
            raise ConfigError(f"variable groups must be disjoint, got {groups}")
        m = self.marginal(flat)
        order = [m._axis_of(n) for n in flat]
        return np.transpose(m._weights, order)

    def mutual_information(
        self, a: Sequence[str], b: Sequence[str]
    ) -> InfoBits:
        """I(A:B) = H(A) + H(B) - H(A,B), in bits, clamped at 0.

        Evaluated as sum p(a,b) log2( p(a,b) / (p(a) p(b)) ) so exactly
        independent tables return exactly 0.0.
        """
        a, b = tuple(a), tuple(b)
        pj = self._grouped([a, b])
        pj = pj.reshape(
            int(np.prod(pj.shape[: len(a)])), int(np.prod(pj.shape[len(a):]))
        )
        pa = pj.sum(axis=1)
        pb = pj.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pj / (pa[:, None] * pb[None, :])
            terms = np.where(pj > 0.0, pj * np.log2(ratio), 0.0)
        return self._clamped(float(terms.sum()), "mutual information")

    def conditional_mutual_information(
        self, a: Sequence[str], b: Sequence[str], c: Sequence[str]
    ) -> InfoBits:
        """I(A:B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C) >= 0, in bits."""
        a, b, c = tuple(a), tuple(b), tuple(c)
        p = self._grouped([a, b, c])
        p = p.reshape(
            int(np.prod(p.shape[: len(a)])),
            int(np.prod(p.shape[len(a): len(a) + len(b)])),
            int(np.prod(p.shape[len(a) + len(b):])) if c else 1,
        )
        pac = p.sum(axis=1)  # (A, C)
        pbc = p.sum(axis=0)  # (B, C)
        pc = p.sum(axis=(0, 1))  # (C,)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (p * pc[None, None, :]) / (pac[:, None, :] * pbc[None, :, :])
            terms = np.where(p > 0.0, p * np.log2(ratio), 0.0)
        return self._clamped(float(terms.sum()), "conditional mutual information")

    @staticmethod
    def _clamped(value: float, what: str) -> float:
        if value < -MI_CLAMP:
            raise InternalConsistencyError(f"{what} = {value!r} < -{MI_CLAMP}")
        return 0.0 if value < 0.0 else value

    # ------------------------------------------------------------------
    # factorization test
    # ------------------------------------------------------------------

    def is_product(
        self,
        a: Sequence[str],
        b: Sequence[str],
        given: Sequence[str] = (),
        tol: float = 1e-9,
    ) -> ProductCheck:
        """Test P(A,B|c) = P(A|c) P(B|c) for every c with P(c) > 0.

        Returns the max-norm deviation and, on failure, a witness assignment
        for the worst cell.
        """
        a, b, given = tuple(a), tuple(b), tuple(given)
        p = self._grouped([a, b, given])
        sa = int(np.prod(p.shape[: len(a)]))
        sb = int(np.prod(p.shape[len(a): len(a) + len(b)]))
        p = p.reshape(sa, sb, -1)
        pc = p.sum(axis=(0, 1))
        live = pc > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = p / pc[None, None, :]
            prod = (p.sum(axis=1) / pc)[:, None, :] * (p.sum(axis=0) / pc)[None, :, :]
            dev = np.where(live[None, None, :], np.abs(cond - prod), 0.0)
        max_dev = float(dev.max()) if dev.size else 0.0
        ok = max_dev <= tol
        witness = None
        if not ok:
            flat = int(np.argmax(dev))
            ia, ib, ic = np.unravel_index(flat, dev.shape)
            names = list(a) + list(b) + list(given)
            shape = tuple(len(self.labels(n)) for n in names)
            idx = (
                list(np.unravel_index(ia, shape[: len(a)]))
                + list(np.unravel_index(ib, shape[len(a): len(a) + len(b)]))
                + (list(np.unravel_index(ic, shape[len(a) + len(b):])) if given else [])
            )
            witness = {n: self.labels(n)[j] for n, j in zip(names, idx)}
        return ProductCheck(ok=ok, max_deviation=max_dev, witness=witness, tol=tol)


def product_table(
    first: FiniteDistribution, second: FiniteDistribution
) -> FiniteDistribution:
    """Independent product of two tables over disjoint variable sets."""
    overlap = set(first.variables) & set(second.variables)
    if overlap:
        raise ConfigError(f"variables {sorted(overlap)} appear in both factors")
    w = np.multiply.outer(first.weights, second.weights)
    variables = [(n, first.labels(n)) for n in first.variables] + [
        (n, second.labels(n)) for n in second.variables
    ]
    return FiniteDistribution(variables, w)
