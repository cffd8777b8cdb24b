"""Constructions turning other model classes into correlated-settings models.

Two directions are supported:

- :func:`comm_to_cs` absorbs a communication model's conversation into the
  hidden variable, lambda = (mu, m).  For finite models this is an exact
  table construction with exact mutual-information accounting; for the
  one-bit singlet model it yields a seeded sampler plus Monte Carlo checks.
  Either way I(x,y:lambda) is bounded by the message entropy H(m).
- :func:`det_to_cs` turns a detection model into a post-selected sampler by
  rejecting rounds until both detectors click, which realizes conditioning
  on the double-click event exactly (no density reweighting).

Both return the model together with a :class:`TransformReport` recording
reproduction deviations and the information bound where available.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import analysis
from .errors import (
    AcceptanceFloorError,
    ConfigError,
    InternalConsistencyError,
    ValidationError,
)
from .models import (
    OUTCOME_LABELS,
    ConditionalTable,
    CSRounds,
    ExactCSModel,
    FiniteCommModel,
    GisinGisinModel,
    LocalityCertificate,
    SampledCSModel,
    SettingsSpec,
    TonerBaconModel,
)
from .sphere import RandomSource, sample_uniform_sphere
from .table import FiniteDistribution

log = logging.getLogger(__name__)

# Default Monte Carlo effort for the report's reproduction checks.
REPORT_ROUNDS = 200_000

# det_to_cs gives up when the observed acceptance rate sits below the floor
# after at least this many attempted rounds.
FLOOR_EVIDENCE_ROUNDS = 65_536

# Hard cap on attempted rounds per draw call, so a zero-acceptance model
# cannot spin forever even with a tiny floor.
MAX_ATTEMPT_FACTOR = 10_000


@dataclass(frozen=True)
class TransformReport:
    """Outcome of a model transform.

    ``corr_deviation`` is the max-norm gap between the target and reproduced
    P(a,b|x,y); ``inputs_deviation`` the same for P(x,y).  ``mi_value`` is
    I(x,y:lambda) where exactly computable, and ``mi_bound`` the message
    entropy H(m) where defined.  ``extras`` carries run metadata such as
    Monte Carlo round counts or acceptance rates.
    """

    source: str
    corr_deviation: Optional[float]
    inputs_deviation: Optional[float]
    mi_value: Optional[float] = None
    mi_bound: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("corr_deviation", "inputs_deviation"):
            v = getattr(self, name)
            if v is not None and v < 0.0:
                raise ValidationError(f"{name} must be nonnegative, got {v!r}")
        if self.mi_value is not None and self.mi_bound is not None:
            if self.mi_value > self.mi_bound + 1e-10:
                raise InternalConsistencyError(
                    f"I(x,y:lambda) = {self.mi_value!r} exceeds the message "
                    f"entropy bound H(m) = {self.mi_bound!r}"
                )


def comm_conditional(model: FiniteCommModel, spec: SettingsSpec) -> ConditionalTable:
    """P(a,b|x,y) of a finite communication model by direct enumeration."""
    spec._require_finite()
    n_a, n_b = spec.n_alice, spec.n_bob
    out = np.zeros((n_a, n_b, 2, 2))
    index = {lab: i for i, lab in enumerate(OUTCOME_LABELS)}
    for x in range(n_a):
        for y in range(n_b):
            for mu, w in zip(model.mu_labels, model.mu_weights):
                m = model.conversation(x, y, mu)
                a = model.alice(x, mu, m)
                b = model.bob(y, mu, m)
                if a not in index or b not in index:
                    raise ValidationError(
                        f"communication model produced outcome ({a!r}, {b!r}); "
                        "outcomes must be +1 or -1"
                    )
                out[x, y, index[a], index[b]] += w
    return ConditionalTable(out)


def _comm_to_cs_exact(model: FiniteCommModel, spec: SettingsSpec):
    spec._require_finite()
    n_a, n_b = spec.n_alice, spec.n_bob
    p_xy = spec.p_xy
    messages: list = []
    entries = []
    for x in range(n_a):
        for y in range(n_b):
            for mu, w_mu in zip(model.mu_labels, model.mu_weights):
                w = float(p_xy[x, y] * w_mu)
                if w <= 0.0:
                    continue
                m = model.conversation(x, y, mu)
                if m not in messages:
                    messages.append(m)
                a = model.alice(x, mu, m)
                b = model.bob(y, mu, m)
                entries.append(((a, b, x, y, mu, m), w))
    variables = [
        ("a", OUTCOME_LABELS),
        ("b", OUTCOME_LABELS),
        ("x", tuple(range(n_a))),
        ("y", tuple(range(n_b))),
        ("mu", model.mu_labels),
        ("m", tuple(messages)),
    ]
    table = FiniteDistribution.from_entries(variables, entries)

    def alice_response(a, x, hidden) -> float:
        mu, m = hidden
        return 1.0 if a == model.alice(x, mu, m) else 0.0

    def bob_response(b, y, hidden) -> float:
        mu, m = hidden
        return 1.0 if b == model.bob(y, mu, m) else 0.0

    certificate = LocalityCertificate(
        alice_response=alice_response,
        bob_response=bob_response,
        description=(
            "deterministic communication replay: lambda = (mu, m) fixes "
            "a through (x, mu, m) and b through (y, mu, m)"
        ),
    )
    cs = ExactCSModel(
        table=table, hidden_vars=("mu", "m"), spec=spec, certificate=certificate
    )
    target = model.target if model.target is not None else comm_conditional(model, spec)
    report = TransformReport(
        source=model.name,
        corr_deviation=cs.conditional().max_deviation(target),
        inputs_deviation=float(np.max(np.abs(cs.input_marginal() - p_xy))),
        mi_value=table.mutual_information(("x", "y"), ("mu", "m")),
        mi_bound=table.entropy(("m",)),
        extras={"exact": True, "mu_support": len(model.mu_labels)},
    )
    return cs, report


def _random_pair_spec(gen: np.random.Generator, pairs: int) -> SettingsSpec:
    """Finite spec whose cells are ``pairs`` random (x_i, y_i) pairs."""
    xs = sample_uniform_sphere(gen, pairs)
    ys = sample_uniform_sphere(gen, pairs)
    p = np.zeros((pairs, pairs))
    np.fill_diagonal(p, 1.0 / pairs)
    return SettingsSpec.finite(xs, ys, p)


def _target_from_correlator(model, spec: SettingsSpec) -> ConditionalTable:
    """Target P(a,b|x,y) from the model's declared correlator.

    Assumes uniform outcome marginals, P(a,b|x,y) = (1 + ab E)/4, which
    holds for both shipped targets (the singlet prediction E = -x.y).
    """
    n_a, n_b = spec.n_alice, spec.n_bob
    probs = np.empty((n_a, n_b, 2, 2))
    for x in range(n_a):
        for y in range(n_b):
            e = model.target_correlator(spec.alice_settings[x], spec.bob_settings[y])
            for i, sa in enumerate(OUTCOME_LABELS):
                for j, sb in enumerate(OUTCOME_LABELS):
                    probs[x, y, i, j] = (1.0 + sa * sb * e) / 4.0
    return ConditionalTable(probs)


def _comm_to_cs_sampled(
    model: TonerBaconModel, spec: SettingsSpec, source: RandomSource, rounds: int
):
    def draw(src: RandomSource, n: int) -> CSRounds:
        s_set, s_mod = src.split(2)
        gen = s_set.generator()
        if spec.is_finite:
            x_idx, y_idx = spec.sample_indices(gen, n)
            xs, ys = spec.vectors_for(x_idx, y_idx)
        else:
            x_idx = y_idx = None
            xs = sample_uniform_sphere(gen, n)
            ys = sample_uniform_sphere(gen, n)
        batch = model.sample_rounds(xs, ys, s_mod)
        return CSRounds(
            a=batch.a,
            b=batch.b,
            xs=xs,
            ys=ys,
            x_idx=x_idx,
            y_idx=y_idx,
            hidden={"l1": batch.l1, "l2": batch.l2, "m": batch.m},
        )

    def alice_response(a, x, hidden) -> float:
        l1, l2, m = hidden
        return 1.0 if a == model.alice_output(x, l1, l2, int(m)) else 0.0

    def bob_response(b, y, hidden) -> float:
        l1, l2, m = hidden
        return 1.0 if b == model.bob_output(y, l1, l2, int(m)) else 0.0

    cs = SampledCSModel(
        kind="tb-comm",
        spec=spec,
        hidden_names=("l1", "l2", "m"),
        draw=draw,
        certificate=LocalityCertificate(
            alice_response=alice_response,
            bob_response=bob_response,
            description=(
                "deterministic replay of the one-bit protocol with "
                "lambda = (lambda1, lambda2, m)"
            ),
        ),
    )

    s_spec, s_est = source.split(2)
    if spec.is_finite:
        check_spec = spec
    else:
        check_spec = _random_pair_spec(s_spec.generator(), 8)
    est = analysis.estimate_correlations(model, check_spec, rounds, s_est)
    target = _target_from_correlator(model, check_spec)
    report = TransformReport(
        source=model.name,
        corr_deviation=_estimated_corr_deviation(est, target),
        inputs_deviation=_estimated_inputs_deviation(est),
        mi_value=None,
        mi_bound=model.message_entropy_bound,
        extras={"exact": False, "check_rounds": rounds},
    )
    return cs, report


def _estimated_corr_deviation(est, target: ConditionalTable) -> float:
    worst = 0.0
    for x, y in np.ndindex(est.spec.n_alice, est.spec.n_bob):
        if (x, y) in est.empty_cells:
            continue
        worst = max(worst, float(np.max(np.abs(est.cell_probs(x, y) - target.probs[x, y]))))
    return worst


def _estimated_inputs_deviation(est) -> float:
    total = est.kept_per_cell.sum()
    if total == 0:
        return 0.0
    freq = est.kept_per_cell / total
    return float(np.max(np.abs(freq - est.spec.p_xy)))


def comm_to_cs(
    model: Union[FiniteCommModel, TonerBaconModel],
    spec: SettingsSpec,
    *,
    source: Optional[RandomSource] = None,
    rounds: int = REPORT_ROUNDS,
):
    """Absorb a communication model into a correlated-settings model.

    Finite models yield an :class:`ExactCSModel` with exact reproduction
    deviations, exact I(x,y:lambda) and the exact message entropy H(m).
    The one-bit singlet model yields a :class:`SampledCSModel`; its report
    carries Monte Carlo deviations (``rounds`` rounds from ``source``) and
    the one-bit bound H(m) = 1.

    Returns ``(cs_model, report)``.
    """
    if isinstance(model, FiniteCommModel):
        return _comm_to_cs_exact(model, spec)
    if isinstance(model, TonerBaconModel):
        if source is None:
            raise ConfigError("comm_to_cs needs a RandomSource for sampled models")
        return _comm_to_cs_sampled(model, spec, source, rounds)
    raise ConfigError(f"comm_to_cs cannot handle {type(model).__name__}")


def det_to_cs(
    dmodel,
    spec: SettingsSpec,
    *,
    source: RandomSource,
    rounds: int = REPORT_ROUNDS,
    floor: float = 1e-6,
):
    """Post-select a detection model on both detectors clicking.

    The sampler draws (x, y) from the input distribution, runs detection
    rounds, and rejects until both detectors click, which conditions on the
    double-click event exactly.  If the observed acceptance rate falls below
    ``floor`` (checked once at least ``FLOOR_EVIDENCE_ROUNDS`` rounds were
    attempted), :class:`AcceptanceFloorError` aborts the run with the rate
    in the message.

    Returns ``(cs_model, report)``.
    """
    if floor <= 0.0 or floor > 1.0:
        raise ConfigError(f"acceptance floor must lie in (0, 1], got {floor!r}")

    def draw(src: RandomSource, n: int) -> CSRounds:
        s_set, s_mod = src.split(2)
        gen = s_set.generator()
        pieces = []
        attempted = 0
        accepted = 0
        while accepted < n:
            k = min(65536, max(4096, n))
            if spec.is_finite:
                x_idx, y_idx = spec.sample_indices(gen, k)
                xs, ys = spec.vectors_for(x_idx, y_idx)
            else:
                x_idx = y_idx = None
                xs = sample_uniform_sphere(gen, k)
                ys = sample_uniform_sphere(gen, k)
            batch = dmodel.sample_rounds(xs, ys, s_mod)
            keep = batch.kept
            attempted += k
            accepted += int(keep.sum())
            pieces.append((xs, ys, x_idx, y_idx, batch, keep))
            if attempted >= FLOOR_EVIDENCE_ROUNDS and accepted < floor * attempted:
                raise AcceptanceFloorError(
                    f"double-click acceptance rate {accepted / attempted:.3e} "
                    f"fell below the floor {floor:.3e} after {attempted} rounds"
                )
            if attempted > MAX_ATTEMPT_FACTOR * max(n, 1) and accepted == 0:
                raise AcceptanceFloorError(
                    f"no double clicks in {attempted} rounds; acceptance "
                    "appears to be zero"
                )

        def gather(parts):
            return np.concatenate(parts)[:n]

        xs = gather([p[0][p[5]] for p in pieces])
        ys = gather([p[1][p[5]] for p in pieces])
        if spec.is_finite:
            x_idx = gather([p[2][p[5]] for p in pieces])
            y_idx = gather([p[3][p[5]] for p in pieces])
        else:
            x_idx = y_idx = None
        return CSRounds(
            a=gather([p[4].a[p[5]] for p in pieces]),
            b=gather([p[4].b[p[5]] for p in pieces]),
            xs=xs,
            ys=ys,
            x_idx=x_idx,
            y_idx=y_idx,
            hidden={"lam": gather([p[4].lam[p[5]] for p in pieces])},
        )

    certificate = None
    make_cert = getattr(dmodel, "response_certificate", None)
    if make_cert is not None:
        certificate = make_cert()
    cs = SampledCSModel(
        kind=f"{getattr(dmodel, 'name', type(dmodel).__name__)}-postselected",
        spec=spec,
        hidden_names=("lam",),
        draw=draw,
        certificate=certificate,
    )

    s_spec, s_est = source.split(2)
    if spec.is_finite:
        check_spec = spec
    else:
        check_spec = _random_pair_spec(s_spec.generator(), 8)
    est = analysis.estimate_correlations(dmodel, check_spec, rounds, s_est)
    if est.kept_per_cell.sum() < floor * rounds:
        raise AcceptanceFloorError(
            f"double-click acceptance rate "
            f"{est.kept_per_cell.sum() / rounds:.3e} fell below the floor "
            f"{floor:.3e} in the report run ({rounds} rounds)"
        )
    corr_dev = None
    if getattr(dmodel, "target_correlator", None) is not None:
        target = _target_from_correlator(dmodel, check_spec)
        corr_dev = _estimated_corr_deviation(est, target)
    report = TransformReport(
        source=getattr(dmodel, "name", type(dmodel).__name__),
        corr_deviation=corr_dev,
        inputs_deviation=_estimated_inputs_deviation(est),
        mi_value=None,
        mi_bound=None,
        extras={
            "exact": False,
            "check_rounds": rounds,
            "acceptance_rate": float(est.kept_per_cell.sum() / rounds),
            "alice_efficiency": [float(v) for v in est.alice_efficiency()]
            if est.has_detection
            else None,
            "bob_efficiency": est.bob_efficiency() if est.has_detection else None,
        },
    )
    return cs, report
