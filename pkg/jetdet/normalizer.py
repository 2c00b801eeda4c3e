"""
Normalization of f + g back to f.

With u_n = j(b_n) the weighted least-squares right inverse of u ↦ u(f),
the iteration

    b_0 = g,    b_{n+1} = e^{-u_n}(f + b_n) - f

raises the order of b_n by at least one per step, so it ends on jets. Then
e^{-u_N}⋯e^{-u_0}(f + g) = f and phi = exp of u_N ∘ ⋯ ∘ exp of u_0 satisfies
f∘phi = f + g. Norms of the u_n are collected along the way and checked
afterwards by ``certify_schedule``.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from . import config
from .exceptions import (
    CertificateError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    JetDetError,
    PreconditionError,
    TruncationError,
)
from .ideal import (
    IdealData,
    RightInverse,
    derivation_basis_for_ideal,
    determinacy_exponent,
    ideal_power,
    nu_exponent,
)
from .jet import Jet, JetMap, jet_from_record, jet_to_record, map_from_record, map_to_record
from .lie import (
    Derivation,
    ProductCriterion,
    apply,
    check_product_criterion,
    exp,
    exp_product,
    inverse_exp_product,
)
from .scale import NormEstimate, ScaleParams, derivation_norm_bound, majorant_norm, round_up
from .schemas import (
    CertificateRecord,
    CriterionRecord,
    GridCheckRecord,
    NormRecord,
    ScheduleStepRecord,
    StepRecord,
)

logger = logging.getLogger(__name__)

SCHEDULE_NOTE = "checked on the finite grid, modulo degree > trunc"


def default_scale() -> ScaleParams:
    return ScaleParams.geometric(config.SCALE_S, config.GRID_POINTS)


@dataclass(frozen=True)
class Step:
    n: int
    u: Derivation
    ord_b: int
    norm: NormEstimate
    b: Optional[Jet] = None


@dataclass(frozen=True)
class ScheduleStep:
    n: int
    s_n: float
    sigma_n: float
    norm: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class ScheduleVerdict:
    """Outcome of the step recurrence and of the product criterion."""

    steps: Tuple[ScheduleStep, ...]
    offset: Optional[int]
    k: int
    m: float
    s: float
    criterion: ProductCriterion
    grid_checks: Tuple[ProductCriterion, ...] = ()
    note: str = SCHEDULE_NOTE

    @property
    def schedule_ok(self) -> bool:
        return all(step.ok for step in self.steps)

    @property
    def criterion_somewhere(self) -> bool:
        """Product criterion holds at the base radius or at some grid point."""
        return self.criterion.ok or any(c.ok for c in self.grid_checks)

    @property
    def ok(self) -> bool:
        return self.schedule_ok and self.criterion.ok


@dataclass(frozen=True, eq=False)
class Certificate:
    f: Jet
    g: Jet
    trunc: int
    steps: Tuple[Step, ...]
    phi: JetMap
    inverse_phi: JetMap
    residual: Jet
    mode: str = "jacobian"
    ideal: Optional[Tuple[Jet, ...]] = None
    scale_factor: float = 1.0
    failure_degree: Optional[int] = None
    schedule: Optional[ScheduleVerdict] = None
    work_trunc: Optional[int] = None

    @property
    def success(self) -> bool:
        return self.failure_degree is None and self.residual.is_zero()

    @property
    def order_gains(self) -> List[int]:
        orders = [s.ord_b for s in self.steps]
        return [b - a for a, b in zip(orders, orders[1:])]

    @property
    def working_trunc(self) -> int:
        """Truncation of the recorded steps; phi is stored lowered to ``trunc``."""
        return self.trunc if self.work_trunc is None else self.work_trunc

    def with_schedule(self, verdict: ScheduleVerdict) -> "Certificate":
        return dataclasses.replace(self, schedule=verdict)


def _check_pair(f: Jet, g: Jet) -> None:
    if f.n_vars != g.n_vars:
        raise DimensionError(f"f has {f.n_vars} variables, g has {g.n_vars}")
    if f.trunc != g.trunc:
        raise TruncationError(f"f truncated at {f.trunc}, g at {g.trunc}")


def working_trunc(f: Jet) -> int:
    """Truncation at which phi is computed so that its terms up to f.trunc are determined.

    f∘phi modulo degree trunc + 1 only sees phi below degree trunc + 2 - ord(f - f(0)).
    """
    return f.trunc + int((f - f.constant_term()).order()) - 1


def _inverse_for(f: Jet, g: Jet, ideal: Optional[IdealData], radius, work: int) -> RightInverse:
    """Check the determinacy hypothesis on g and build the right inverse at truncation ``work``."""
    if ideal is None:
        det = determinacy_exponent(f)
        if not det.conclusive:
            raise PreconditionError("M^d ⊂ Jf for some d ≤ trunc - 1", det.reason)
        need = det.value + 2
        if g.order() < need:
            raise PreconditionError(f"g ∈ M^{need}", f"ord g = {g.order()}, determinacy exponent {det.value}")
        logger.info(f"Jacobian mode: M^{det.value} ⊂ Jf, g ∈ M^{need}")
        return RightInverse(f.lifted_to(work), radius)
    nu = nu_exponent(f, ideal)
    if not nu.conclusive:
        raise PreconditionError("I^ν ⊂ I(f) for some ν", nu.reason)
    if not ideal_power(ideal, nu.value).contains(g, f.trunc):
        raise PreconditionError(f"g ∈ I^{nu.value}", "g is not in I^ν modulo M^(trunc+1)")
    logger.info(f"Ideal mode: I^{nu.value} ⊂ I(f), g ∈ I^{nu.value}")
    f_work = f.lifted_to(work)
    lifted = IdealData([h.lifted_to(work) for h in ideal.generators], ideal.n_vars, work)
    return RightInverse(f_work, radius, derivation_basis_for_ideal(lifted, f_work))


def normalize(f: Jet, g: Jet, ideal: Optional[IdealData] = None,
              scale: Optional[ScaleParams] = None, radius=None) -> Certificate:
    """Find phi with f∘phi = f + g.

    ``ideal=None`` selects the Jacobian mode (g ∈ M^{d+2} with M^d ⊂ Jf);
    otherwise g must lie in I^ν with I^ν ⊂ I(f).
    """
    _check_pair(f, g)
    if f.is_constant():
        raise DegenerateInputError("cannot normalize around a constant germ")
    if ideal is not None and (ideal.n_vars != f.n_vars or ideal.trunc != f.trunc):
        raise DimensionError("ideal and germ live in different rings")
    scale = scale or default_scale()
    radius = config.RADIUS if radius is None else radius
    tau = scale.grid[-1]
    trunc = f.trunc
    mode = "jacobian" if ideal is None else "ideal"
    scale_factor = 1.0 / max(1.0, majorant_norm(f, scale.S))

    work = working_trunc(f)
    f_work = f.lifted_to(work)
    steps: List[Step] = []
    failure = None
    b = g.lifted_to(work)
    if not g.is_zero():
        j = _inverse_for(f, g, ideal, radius, work)
        for n in range(work + 1):
            if b.is_zero():
                break
            solution = j.solve(b)
            u = solution.u
            norm = derivation_norm_bound(u, tau)
            steps.append(Step(n, u, int(b.order()), norm, b))
            logger.info(f"Step {n}: ord(b) = {b.order()}, N1(u) ≤ {norm.C:.3e}")
            if not solution.success:
                failure = solution.failure_degree
                break
            b = exp(-u, f_work + b) - f_work
        if failure is None and not b.is_zero():
            failure = int(b.order())
            logger.warning(f"Iteration stopped after {len(steps)} steps with ord(b) = {failure}")

    us = [s.u for s in steps]
    phi = exp_product(list(reversed(us)), f.n_vars, work).with_trunc(trunc)
    inverse_phi = inverse_exp_product(list(reversed(us)), f.n_vars, work).with_trunc(trunc)
    residual = f.compose(phi) - (f + g)
    cert = Certificate(
        f=f, g=g, trunc=trunc, steps=tuple(steps), phi=phi, inverse_phi=inverse_phi,
        residual=residual, mode=mode,
        ideal=tuple(ideal.generators) if ideal is not None else None,
        scale_factor=scale_factor, failure_degree=failure, work_trunc=work,
    )
    if cert.success:
        logger.info(f"Normalized in {len(steps)} steps; order gains {cert.order_gains}")
    else:
        logger.warning(f"Normalization failed at degree {failure}; residual order {residual.order()}")
    return cert


# ---------------------------------------------------------------------------
# Quantitative checks
# ---------------------------------------------------------------------------

def remainder_term(u: Derivation, f: Jet) -> Jet:
    """(e^{-u}(Id + u) - Id) f, exactly."""
    return exp(-u, f + apply(u, f)) - f


def remainder_bound(estimate: NormEstimate, tau: float, s: float) -> Optional[float]:
    """C²/(τ-s)², or None when 3C/(τ-s) > 1/2."""
    if estimate.k != 1:
        raise DomainError(f"remainder bound needs a 1-bounded estimate, got k={estimate.k}")
    if not 0 < s < tau:
        raise DomainError(f"need 0 < s < tau, got s={s}, tau={tau}")
    x = estimate.C / (tau - s)
    if 3.0 * x > 0.5:
        logger.info(f"Remainder bound not claimed: 3C/(tau - s) = {3.0 * x:.3g} > 1/2")
        return None
    return round_up(x * x)


def schedule_constant(cert: Certificate, k: int, scale: Optional[ScaleParams] = None,
                      radius=None) -> float:
    """m = min(1, N^k(j))/2^{k+1}, with N^k(j) sampled for the rescaled germ."""
    if not cert.steps:
        return 1.0 / 2 ** (k + 1)
    scale = scale or default_scale()
    radius = config.RADIUS if radius is None else radius
    if cert.mode == "ideal":
        basis = derivation_basis_for_ideal(IdealData(list(cert.ideal), cert.f.n_vars, cert.trunc), cert.f)
        j = RightInverse(cert.f, radius, basis)
    else:
        j = RightInverse(cert.f, radius)
    j_norm = j.inverse_norm_bound(k, scale.S, scale.grid).C / cert.scale_factor
    return min(1.0, j_norm) / 2 ** (k + 1)


def certify_schedule(cert: Certificate, s: float, k: int = 1, m: Optional[float] = None,
                     grid: Sequence[float] = (), scale: Optional[ScaleParams] = None,
                     radius=None) -> ScheduleVerdict:
    """Check N¹_{s_n}(u_n) ≤ m σ_n^{k+2} along σ_n = s/2^{n+2}, s_0 = 2s,
    s_{n+1} = s_n - 2σ_n, and 3 Σ N¹_s(u_n) < s.

    The recurrence starts at the first step whose u has order ≥ k + 3.
    """
    if not s > 0:
        raise DomainError(f"base radius must be positive, got {s}")
    if m is None:
        m = schedule_constant(cert, k, scale, radius)
    offset = next((i for i, st in enumerate(cert.steps) if st.u.omega >= k + 3), None)
    checked: List[ScheduleStep] = []
    if offset is not None:
        s_n = 2.0 * s
        for i, st in enumerate(cert.steps[offset:]):
            sigma = s / 2 ** (i + 2)
            norm = derivation_norm_bound(st.u, s_n).C
            bound = m * sigma ** (k + 2)
            checked.append(ScheduleStep(st.n, s_n, sigma, norm, bound, norm <= bound))
            s_n = s_n - 2.0 * sigma
    estimates = [derivation_norm_bound(st.u, s) for st in cert.steps]
    criterion = check_product_criterion(estimates, s)
    grid_checks = tuple(
        check_product_criterion([derivation_norm_bound(st.u, t) for st in cert.steps], t)
        for t in grid
    )
    verdict = ScheduleVerdict(tuple(checked), offset, k, float(m), float(s), criterion, grid_checks)
    logger.info(
        f"Schedule: {sum(c.ok for c in checked)}/{len(checked)} steps within m σ^(k+2); "
        f"product criterion {'holds' if criterion.ok else 'fails'} at s = {s} (margin {criterion.margin:.3e})")
    return verdict


def verify_certificate(cert: Certificate) -> bool:
    """Recompute the run from f, g and the recorded u_n and compare."""
    f, g = cert.f, cert.g
    try:
        work = cert.working_trunc
        residual = f.compose(cert.phi) - (f + g)
        if residual != cert.residual:
            logger.warning("Residual does not match f∘phi - (f + g)")
            return False
        us = [st.u for st in cert.steps]
        if exp_product(list(reversed(us)), f.n_vars, work).with_trunc(cert.trunc) != cert.phi:
            logger.warning("phi is not the product of the recorded exponentials")
            return False
        if not cert.phi.compose(cert.inverse_phi).is_identity():
            logger.warning("inverse_phi does not invert phi")
            return False
        f_work = f.lifted_to(work)
        b = g.lifted_to(work)
        previous = -math.inf
        for idx, st in enumerate(cert.steps):
            if st.n != idx or b.is_zero():
                logger.warning(f"Step {idx} is out of sequence")
                return False
            order = b.order()
            if order != st.ord_b or not order > previous:
                logger.warning(f"Step {idx}: ord(b) = {order}, recorded {st.ord_b}")
                return False
            previous = order
            expected = b
            if cert.failure_degree is not None and idx == len(cert.steps) - 1:
                expected = b.truncated_at(cert.failure_degree - 1)
            if apply(st.u, f_work) != expected:
                logger.warning(f"Step {idx}: u(f) differs from b")
                return False
            b = exp(-st.u, f_work + b) - f_work
        if cert.failure_degree is None and not b.is_zero():
            logger.warning("Recorded steps do not bring b to zero")
            return False
    except JetDetError as exc:
        logger.warning(f"Certificate check raised {type(exc).__name__}: {exc}")
        return False
    return True


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def _criterion_record(c: ProductCriterion) -> CriterionRecord:
    return CriterionRecord(sum=c.total, s=c.s, margin=c.margin, ok=c.ok)


def certificate_to_record(cert: Certificate) -> CertificateRecord:
    verdict = cert.schedule
    return CertificateRecord(
        f=jet_to_record(cert.f),
        g=jet_to_record(cert.g),
        trunc=cert.trunc,
        work_trunc=cert.working_trunc,
        mode=cert.mode,
        ideal=[jet_to_record(h) for h in cert.ideal] if cert.ideal is not None else None,
        steps=[StepRecord(n=st.n, u=st.u.to_record(), ord_b=st.ord_b,
                          norm=NormRecord(**st.norm.to_record()))
               for st in cert.steps],
        phi=map_to_record(cert.phi),
        inverse_phi=map_to_record(cert.inverse_phi),
        residual=jet_to_record(cert.residual),
        residual_is_zero=cert.residual.is_zero(),
        success=cert.success,
        failure_degree=cert.failure_degree,
        scale_factor=cert.scale_factor,
        schedule=[ScheduleStepRecord(**dataclasses.asdict(st)) for st in verdict.steps] if verdict else [],
        schedule_offset=verdict.offset if verdict else None,
        loss_k=verdict.k if verdict else None,
        m=verdict.m if verdict else None,
        criterion=_criterion_record(verdict.criterion) if verdict else None,
        grid_checks=[GridCheckRecord(s=c.s, sum=c.total, margin=c.margin, ok=c.ok)
                     for c in verdict.grid_checks] if verdict else [],
        note=verdict.note if verdict else "",
    )


def certificate_from_record(record: CertificateRecord) -> Certificate:
    try:
        f = jet_from_record(record.f.model_dump())
        g = jet_from_record(record.g.model_dump())
        steps = tuple(
            Step(n=st.n, u=Derivation.from_record([c.model_dump() for c in st.u]),
                 ord_b=st.ord_b, norm=NormEstimate(st.norm.k, st.norm.tau, st.norm.C))
            for st in record.steps
        )
        verdict = None
        if record.criterion is not None:
            c = record.criterion
            verdict = ScheduleVerdict(
                steps=tuple(ScheduleStep(**st.model_dump()) for st in record.schedule),
                offset=record.schedule_offset,
                k=record.loss_k if record.loss_k is not None else 1,
                m=record.m if record.m is not None else 0.0,
                s=c.s,
                criterion=ProductCriterion(ok=c.ok, total=c.sum, s=c.s, margin=c.margin),
                grid_checks=tuple(ProductCriterion(ok=gc.ok, total=gc.sum, s=gc.s, margin=gc.margin)
                                  for gc in record.grid_checks),
                note=record.note or SCHEDULE_NOTE,
            )
        return Certificate(
            f=f, g=g, trunc=record.trunc, work_trunc=record.work_trunc, steps=steps,
            phi=map_from_record([p.model_dump() for p in record.phi]),
            inverse_phi=map_from_record([p.model_dump() for p in record.inverse_phi]),
            residual=jet_from_record(record.residual.model_dump()),
            mode=record.mode,
            ideal=tuple(jet_from_record(h.model_dump()) for h in record.ideal) if record.ideal is not None else None,
            scale_factor=record.scale_factor,
            failure_degree=record.failure_degree,
            schedule=verdict,
        )
    except JetDetError as exc:
        raise CertificateError(f"certificate record is inconsistent: {exc}") from exc
