"""Correlation estimation, CHSH, locality verification, and mutual information.

The quantum oracle throughout is the singlet correlator E = -x.y for
projective measurements along unit vectors x and y.  Monte Carlo estimation
is chunked over split random sub-streams and reduced in fixed chunk order,
so results are bit-identical for a given seed regardless of the parallelism
degree.

The two headline information numbers:

- :func:`mi_tb_quadrature`: I(x,y:lambda) of the correlated-settings model
  derived from the one-bit communication protocol, evaluated through the
  identity I = H(m|mu) = integral over the angle theta between the two
  shared vectors of (sin(theta)/2) h(theta/pi), about 0.85 bits.
- :func:`mi_gg_uniform`: I(x,y:lambda) = I(x:lambda) of the model derived
  from the detection construction, with closed form 1 - 1/(2 ln 2), about
  0.2787 bits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError, InternalConsistencyError
from .models import (
    OUTCOME_LABELS,
    ConditionalTable,
    ExactCSModel,
    SettingsSpec,
)
from .sphere import RandomSource, angle_between, require_unit, sample_uniform_sphere
from .table import FiniteDistribution, InfoBits, binary_entropy

# Monte Carlo rounds are processed in fixed-size chunks, one split random
# sub-stream per chunk, so the parallelism degree cannot change results.
CHUNK_ROUNDS = 65536

# Panels for the internal quadrature cross-check of the closed form.
GG_CHECK_PANELS = 65536
GG_CHECK_TOL = 1e-8

MI_METHODS = ("exact", "quadrature", "monte-carlo", "closed-form")


# ----------------------------------------------------------------------
# singlet predictions
# ----------------------------------------------------------------------

def singlet_correlation(x, y) -> float:
    """Quantum prediction E = -x.y for singlet projective measurements."""
    x = require_unit(x)
    y = require_unit(y)
    return -float(np.dot(x, y))


def singlet_cell(x, y) -> np.ndarray:
    """Exact P(a,b|x,y) = (1 - ab x.y)/4 as a (2, 2) block (index 0 = +1)."""
    e = singlet_correlation(x, y)
    cell = np.empty((2, 2))
    for i, sa in enumerate(OUTCOME_LABELS):
        for j, sb in enumerate(OUTCOME_LABELS):
            cell[i, j] = (1.0 + sa * sb * e) / 4.0
    return cell


def exact_singlet_conditional(spec: SettingsSpec) -> ConditionalTable:
    """Exact singlet conditional table over a finite spec."""
    spec._require_finite()
    probs = np.empty((spec.n_alice, spec.n_bob, 2, 2))
    for x in range(spec.n_alice):
        for y in range(spec.n_bob):
            probs[x, y] = singlet_cell(spec.alice_settings[x], spec.bob_settings[y])
    return ConditionalTable(probs)


# ----------------------------------------------------------------------
# correlation estimation
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Estimated P(a,b|x,y) per setting cell, with counts and standard errors.

    ``counts[x, y, i, j]`` tallies kept rounds (post-selected where the
    model has detectors); ``attempts`` counts every round routed to the
    cell.  Cells that ended up with no kept rounds are listed in
    ``empty_cells`` rather than silently zeroed.
    """

    spec: SettingsSpec
    counts: np.ndarray
    attempts: np.ndarray
    clicks_a: Optional[np.ndarray] = None
    clicks_b: Optional[np.ndarray] = None

    def __post_init__(self):
        want = (self.spec.n_alice, self.spec.n_bob, 2, 2)
        if tuple(self.counts.shape) != want:
            raise ConfigError(f"counts shape {self.counts.shape} != {want}")
        if tuple(self.attempts.shape) != want[:2]:
            raise ConfigError(f"attempts shape {self.attempts.shape} != {want[:2]}")

    @property
    def kept_per_cell(self) -> np.ndarray:
        return self.counts.sum(axis=(2, 3))

    @property
    def empty_cells(self) -> list:
        kept = self.kept_per_cell
        return [(int(x), int(y)) for x, y in zip(*np.nonzero(kept == 0))]

    @property
    def has_detection(self) -> bool:
        return self.clicks_a is not None

    def _cell_n(self, x: int, y: int) -> int:
        n = int(self.kept_per_cell[x, y])
        if n == 0:
            raise ConfigError(f"cell ({x}, {y}) collected no rounds")
        return n

    def cell_probs(self, x: int, y: int) -> np.ndarray:
        """Estimated P(a,b|x,y) as a (2, 2) block."""
        return self.counts[x, y] / self._cell_n(x, y)

    def cell_prob_se(self, x: int, y: int) -> np.ndarray:
        """Standard error sqrt(p(1-p)/n) per block entry."""
        n = self._cell_n(x, y)
        p = self.counts[x, y] / n
        return np.sqrt(p * (1.0 - p) / n)

    def correlator(self, x: int, y: int) -> float:
        c = self.cell_probs(x, y)
        return float(c[0, 0] - c[0, 1] - c[1, 0] + c[1, 1])

    def correlator_se(self, x: int, y: int) -> float:
        n = self._cell_n(x, y)
        e = self.correlator(x, y)
        return math.sqrt(max(0.0, 1.0 - e * e) / n)

    def alice_efficiency(self) -> np.ndarray:
        """Empirical P(D_A) per Alice setting."""
        if not self.has_detection:
            raise ConfigError("model had no detection step")
        return self.clicks_a.sum(axis=1) / self.attempts.sum(axis=1)

    def bob_efficiency(self) -> float:
        """Empirical P(D_B) over all rounds."""
        if not self.has_detection:
            raise ConfigError("model had no detection step")
        return float(self.clicks_b.sum() / self.attempts.sum())


def estimate_correlations(
    model,
    spec: SettingsSpec,
    rounds: int,
    source: RandomSource,
    parallelism: int = 1,
    cycle_settings: bool = False,
) -> CorrelationTable:
    """Run ``rounds`` model rounds and tally per-cell outcome counts.

    Settings are drawn from the spec's P(x,y), or swept deterministically
    over cells in row-major order when ``cycle_settings`` is set.  Rounds
    are processed in :data:`CHUNK_ROUNDS`-sized chunks, each on its own
    split random sub-stream; chunk results are reduced in chunk order, so
    the outcome is bit-identical for a given seed at any ``parallelism``.
    """
    spec._require_finite()
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    if parallelism < 1:
        raise ConfigError(f"parallelism must be >= 1, got {parallelism}")
    n_a, n_b = spec.n_alice, spec.n_bob
    n_cells = n_a * n_b
    n_chunks = (rounds + CHUNK_ROUNDS - 1) // CHUNK_ROUNDS
    children = source.split(n_chunks)

    def run_chunk(i: int):
        start = i * CHUNK_ROUNDS
        k = min(CHUNK_ROUNDS, rounds - start)
        s_set, s_mod = children[i].split(2)
        gen = s_set.generator()
        if cycle_settings:
            x_idx, y_idx = spec.cycle_indices(start, k)
        else:
            x_idx, y_idx = spec.sample_indices(gen, k)
        xs, ys = spec.vectors_for(x_idx, y_idx)
        batch = model.sample_rounds(xs, ys, s_mod)
        code = x_idx * n_b + y_idx
        attempts = np.bincount(code, minlength=n_cells).reshape(n_a, n_b)
        kept = batch.kept
        if kept is None:
            counts = _kernels.tally(x_idx, y_idx, batch.a, batch.b, n_a, n_b)
            return counts, attempts, None, None
        counts = _kernels.tally(
            x_idx[kept], y_idx[kept], batch.a[kept], batch.b[kept], n_a, n_b
        )
        clicks_a = np.bincount(
            code[np.asarray(batch.click_a, dtype=bool)], minlength=n_cells
        ).reshape(n_a, n_b)
        clicks_b = np.bincount(
            code[np.asarray(batch.click_b, dtype=bool)], minlength=n_cells
        ).reshape(n_a, n_b)
        return counts, attempts, clicks_a, clicks_b

    if parallelism == 1:
        results = [run_chunk(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(run_chunk, range(n_chunks)))

    counts = np.zeros((n_a, n_b, 2, 2), dtype=np.int64)
    attempts = np.zeros((n_a, n_b), dtype=np.int64)
    clicks_a = clicks_b = None
    for c, att, ca, cb in results:  # fixed chunk order
        counts += c
        attempts += att
        if ca is not None:
            clicks_a = ca if clicks_a is None else clicks_a + ca
            clicks_b = cb if clicks_b is None else clicks_b + cb
    return CorrelationTable(
        spec=spec, counts=counts, attempts=attempts, clicks_a=clicks_a, clicks_b=clicks_b
    )


# ----------------------------------------------------------------------
# CHSH
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CHSHResult:
    s: float
    se: float


def chsh(table, indices: Sequence[int] = (0, 1, 0, 1)) -> CHSHResult:
    """S = E(x0,y0) - E(x0,y1) + E(x1,y0) + E(x1,y1), error by quadrature sum.

    Accepts anything with ``correlator(x, y)`` and ``correlator_se(x, y)``
    (estimated or exact tables).  Empty cells raise.
    """
    x0, x1, y0, y1 = indices
    s = (
        table.correlator(x0, y0)
        - table.correlator(x0, y1)
        + table.correlator(x1, y0)
        + table.correlator(x1, y1)
    )
    se = math.sqrt(
        table.correlator_se(x0, y0) ** 2
        + table.correlator_se(x0, y1) ** 2
        + table.correlator_se(x1, y0) ** 2
        + table.correlator_se(x1, y1) ** 2
    )
    return CHSHResult(s=float(s), se=float(se))


# ----------------------------------------------------------------------
# Bell-locality verification
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LocalityReport:
    """Verdict of the locality factorization check.

    ``max_deviation`` is the worst |P(a,b|x,y,lambda) -
    P(a|x,lambda) P(b|y,lambda)| over the support of (x,y,lambda);
    ``witness`` names the worst cell when the verdict is negative.
    """

    ok: bool
    max_deviation: float
    tol: float
    witness: Optional[dict] = None


def verify_bell_local(model: ExactCSModel, tol: float = 1e-9) -> LocalityReport:
    """Check the locality factorization on an exact finite model.

    The response probabilities are computed from the joint itself:
    P(a|x,lambda) marginalizes over Bob's side (and y), P(b|y,lambda) over
    Alice's, and the conditional P(a,b|x,y,lambda) must equal their product
    at every support point.  A model whose outcome leaks information about
    the remote setting fails here even though its conditionals factorize
    trivially once both settings are fixed.
    """
    groups = [("a",), ("b",), ("x",), ("y",), model.hidden_vars]
    j = model.table._grouped(groups)
    na, nb, nx, ny = j.shape[:4]
    j = j.reshape(na, nb, nx, ny, -1)
    p_xyl = j.sum(axis=(0, 1))  # (x, y, lam)
    p_axl = j.sum(axis=(1, 3))  # (a, x, lam)
    p_xl = j.sum(axis=(0, 1, 3))  # (x, lam)
    p_byl = j.sum(axis=(0, 2))  # (b, y, lam)
    p_yl = j.sum(axis=(0, 1, 2))  # (y, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = j / p_xyl[None, None, :, :, :]
        resp_a = p_axl / p_xl[None, :, :]
        resp_b = p_byl / p_yl[None, :, :]
        product = resp_a[:, None, :, None, :] * resp_b[None, :, None, :, :]
        dev = np.where(p_xyl[None, None, :, :, :] > 0.0, np.abs(cond - product), 0.0)
    max_dev = float(dev.max())
    ok = max_dev <= tol
    witness = None
    if not ok:
        ia, ib, ix, iy, il = np.unravel_index(int(np.argmax(dev)), dev.shape)
        hidden_shape = tuple(len(model.table.labels(h)) for h in model.hidden_vars)
        hidden_idx = np.unravel_index(il, hidden_shape)
        witness = {
            "a": model.table.labels("a")[ia],
            "b": model.table.labels("b")[ib],
            "x": model.table.labels("x")[ix],
            "y": model.table.labels("y")[iy],
        }
        for name, pos in zip(model.hidden_vars, hidden_idx):
            witness[name] = model.table.labels(name)[pos]
    return LocalityReport(ok=ok, max_deviation=max_dev, tol=tol, witness=witness)


def make_signaling_example() -> ExactCSModel:
    """A correlated-settings table that is not Bell-local: a copies y.

    Conditioned on (x, y, lambda) the outcomes look deterministic, hence
    trivially product; the locality check still fails because Alice's
    response P(a|x, lambda) cannot depend on y.
    """
    entries = []
    for x in range(2):
        for y in range(2):
            a = 1 if y == 0 else -1
            entries.append(((a, 1, x, y, "free"), 0.25))
    variables = [
        ("a", OUTCOME_LABELS),
        ("b", OUTCOME_LABELS),
        ("x", (0, 1)),
        ("y", (0, 1)),
        ("lam", ("free",)),
    ]
    table = FiniteDistribution.from_entries(variables, entries)
    return ExactCSModel(table=table, hidden_vars=("lam",), spec=None, certificate=None)


# ----------------------------------------------------------------------
# mutual information estimates
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MIEstimate:
    """A mutual-information value in bits with its provenance.

    ``uncertainty`` is a standard error for Monte Carlo methods and a
    conservative half-resolution comparison for quadrature; 0 for exact
    and closed-form values.
    """

    value: InfoBits
    method: str
    uncertainty: float

    def __post_init__(self):
        if self.method not in MI_METHODS:
            raise ConfigError(f"method must be one of {MI_METHODS}, got {self.method!r}")
        if self.value < -1e-10:
            raise InternalConsistencyError(f"mutual information {self.value!r} < -1e-10")
        if self.value < 0.0:
            object.__setattr__(self, "value", 0.0)
        if self.uncertainty < 0.0:
            raise ConfigError("uncertainty must be nonnegative")


def _simpson(f, a: float, b: float, panels: int) -> float:
    """Composite Simpson rule with an even number of panels."""
    if panels < 2 or panels % 2:
        raise ConfigError(f"Simpson rule needs an even panel count >= 2, got {panels}")
    xs = a + (b - a) * np.arange(panels + 1) / panels
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((b - a) / (3.0 * panels) * np.dot(w, f(xs)))


def tb_mi_integrand(theta: np.ndarray) -> np.ndarray:
    """(sin(theta)/2) h(theta/pi): the density of the angle between the two
    shared vectors times the message entropy given that angle.

    Over a uniform Alice setting, sgn(x.lambda1) = sgn(x.lambda2) with
    probability 1 - theta/pi, so H(m|mu) = h(theta/pi)."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.sin(theta) / 2.0 * binary_entropy(theta / np.pi)


def agreement_probability(l1, l2) -> float:
    """P over uniform x that sgn(x.l1) = sgn(x.l2), which is 1 - theta/pi."""
    return 1.0 - angle_between(l1, l2) / np.pi


def mi_tb_quadrature(panels: int = 1024) -> MIEstimate:
    """I(x,y:lambda) of the one-bit-protocol model, uniform settings.

    Evaluates I = H(m|mu) = integral_0^pi (sin(theta)/2) h(theta/pi)
    d(theta) by composite Simpson.  The reported uncertainty is the raw
    difference against half resolution; no order-extrapolation factor is
    applied because the integrand's endpoint derivative blowup keeps the
    rule below its nominal fourth order, and the raw difference stays a
    sound bound (doubling the panels moves the value by less than it).
    """
    if panels < 16:
        raise ConfigError(f"panels must be >= 16, got {panels}")
    if panels % 2:
        raise ConfigError(f"panels must be even, got {panels}")
    value = _simpson(tb_mi_integrand, 0.0, np.pi, panels)
    half = 2 * (panels // 4)
    coarse = _simpson(tb_mi_integrand, 0.0, np.pi, half)
    return MIEstimate(
        value=value, method="quadrature", uncertainty=abs(value - coarse)
    )


def mi_tb_montecarlo(samples: int, source: RandomSource) -> MIEstimate:
    """Monte Carlo oracle for :func:`mi_tb_quadrature`.

    Samples shared vector pairs, converts each to an agreement probability
    through the 1 - theta/pi identity, and averages the binary entropy.
    """
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples}")
    gen = source.generator()
    l1 = sample_uniform_sphere(gen, samples)
    l2 = sample_uniform_sphere(gen, samples)
    cosang = np.clip(np.einsum("ij,ij->i", l1, l2), -1.0, 1.0)
    p = 1.0 - np.arccos(cosang) / np.pi
    h = binary_entropy(p)
    value = float(h.mean())
    se = float(h.std(ddof=1) / math.sqrt(samples))
    return MIEstimate(value=value, method="monte-carlo", uncertainty=se)


GG_MI_CLOSED_FORM = 1.0 - 1.0 / (2.0 * math.log(2.0))


def gg_mi_integrand(u: np.ndarray) -> np.ndarray:
    """2u log2(2u) on [0, 1] (u = |lambda.x|), zero at u = 0.

    This is the KL integrand between the post-selected hidden-vector
    density |lambda.x| (in u) and the uniform one, after substituting
    u = |cos(theta)| and folding the two hemispheres."""
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(u > 0.0, 2.0 * u * np.log2(2.0 * u), 0.0)


def mi_gg_quadrature(panels: int = GG_CHECK_PANELS) -> MIEstimate:
    """Quadrature form of the detection-model mutual information."""
    if panels < 16:
        raise ConfigError(f"panels must be >= 16, got {panels}")
    if panels % 2:
        raise ConfigError(f"panels must be even, got {panels}")
    value = _simpson(gg_mi_integrand, 0.0, 1.0, panels)
    half = 2 * (panels // 4)
    coarse = _simpson(gg_mi_integrand, 0.0, 1.0, half)
    return MIEstimate(value=value, method="quadrature", uncertainty=abs(value - coarse))


def mi_gg_uniform() -> MIEstimate:
    """I(x,y:lambda) = I(x:lambda) of the detection-derived model.

    Returns the closed form 1 - 1/(2 ln 2) and cross-checks it against
    :func:`mi_gg_quadrature`; disagreement beyond ``GG_CHECK_TOL`` raises
    :class:`InternalConsistencyError`.
    """
    check = mi_gg_quadrature(GG_CHECK_PANELS)
    if abs(check.value - GG_MI_CLOSED_FORM) > GG_CHECK_TOL:
        raise InternalConsistencyError(
            f"quadrature {check.value!r} disagrees with the closed form "
            f"{GG_MI_CLOSED_FORM!r} beyond {GG_CHECK_TOL}"
        )
    return MIEstimate(value=GG_MI_CLOSED_FORM, method="closed-form", uncertainty=0.0)


def mi_gg_montecarlo(samples: int, source: RandomSource) -> MIEstimate:
    """Monte Carlo oracle for :func:`mi_gg_uniform`.

    Draws hidden vectors from the post-selected density by rejection
    (accept with probability |lambda.x|, exactly the detection step) and
    averages log2(2 |lambda.x|) over the kept vectors.
    """
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples}")
    gen = source.generator()
    lam = sample_uniform_sphere(gen, samples)
    u = gen.random(samples)
    d = np.abs(lam[:, 2])  # measurement axis fixed to z by symmetry
    kept = d[u < d]
    if kept.size < 2:
        raise ConfigError("too few accepted samples; increase the sample count")
    vals = np.log2(2.0 * kept)
    value = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(kept.size))
    return MIEstimate(value=value, method="monte-carlo", uncertainty=se)


def mi_finite_settings_tb(
    spec: SettingsSpec, mu_samples: int, source: RandomSource
) -> MIEstimate:
    """I(x,y:lambda) of the one-bit-protocol model over finite settings.

    For each sampled shared pair mu = (lambda1, lambda2), the probability
    that the transmitted bit is +1 is the exact finite sum
    p(mu) = sum_x P(x) [sgn(x.lambda1) = sgn(x.lambda2)]; the estimate is
    the Monte Carlo mean of h(p(mu)) = H(m|mu) = I(x,y:lambda).
    """
    spec._require_finite()
    if mu_samples < 1000:
        raise ConfigError(f"mu_samples must be >= 1000, got {mu_samples}")
    gen = source.generator()
    l1 = sample_uniform_sphere(gen, mu_samples)
    l2 = sample_uniform_sphere(gen, mu_samples)
    settings = np.ascontiguousarray(spec.alice_settings)
    p_x = np.ascontiguousarray(spec.p_x)
    p = _kernels.agreement_probs(settings, p_x, l1, l2)
    h = binary_entropy(np.clip(p, 0.0, 1.0))
    value = float(h.mean())
    se = float(h.std(ddof=1) / math.sqrt(mu_samples))
    return MIEstimate(value=value, method="monte-carlo", uncertainty=se)


def mi_exact_finite(
    model: ExactCSModel,
    a_vars: Sequence[str] = ("x", "y"),
    b_vars: Optional[Sequence[str]] = None,
) -> MIEstimate:
    """Exact table mutual information I(A:B) on a finite model."""
    if b_vars is None:
        b_vars = model.hidden_vars
    value = model.table.mutual_information(tuple(a_vars), tuple(b_vars))
    return MIEstimate(value=value, method="exact", uncertainty=0.0)
