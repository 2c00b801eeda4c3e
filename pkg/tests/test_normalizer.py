import dataclasses
from fractions import Fraction

import numpy as np
import pytest
from sympy.polys.domains import QQ

from jetdet.corpus import a_series, morse_series, random_perturbation
from jetdet.exceptions import DegenerateInputError, PreconditionError
from jetdet.ideal import determinacy_exponent, maximal_ideal
from jetdet.jet import Jet, JetMap, parse_jet, random_jet
from jetdet.lie import Derivation
from jetdet.normalizer import (
    SCHEDULE_NOTE,
    certificate_from_record,
    certificate_to_record,
    certify_schedule,
    normalize,
    remainder_bound,
    remainder_term,
    verify_certificate,
)
from jetdet.scale import derivation_norm_bound, majorant_norm
from jetdet.schemas import CertificateRecord


def _check_run(cert):
    assert cert.success
    assert cert.f.compose(cert.phi) == cert.f + cert.g
    assert all(gain >= 1 for gain in cert.order_gains)
    assert verify_certificate(cert)


def test_cusp_normalization(cusp):
    cert = normalize(cusp, parse_jet("z^5 - (1/2)*z^7", 8))
    _check_run(cert)
    assert cert.steps[0].ord_b == 5


@pytest.mark.parametrize("germ", a_series(3) + morse_series(2), ids=lambda g: g.name)
def test_corpus_iteration(germ, rng):
    f = germ.jet()
    det = determinacy_exponent(f).value
    g = random_perturbation(rng, f.n_vars, f.trunc, det + 2)
    _check_run(normalize(f, g))


def test_zero_perturbation_gives_identity(cusp):
    cert = normalize(cusp, parse_jet("0", 8))
    assert cert.steps == ()
    assert cert.phi.is_identity()
    assert cert.success


def test_precondition_failure(cusp):
    with pytest.raises(PreconditionError) as info:
        normalize(cusp, parse_jet("z^3", 8))
    assert info.value.inclusion == "g ∈ M^4"
    assert info.value.exit_code == 2


def test_constant_germ_is_degenerate():
    with pytest.raises(DegenerateInputError):
        normalize(parse_jet("1", 4), parse_jet("z^3", 4))


def test_ideal_mode(morse2):
    g = parse_jet("z1^4 + (1/2)*z1*z2^3", 6)
    cert = normalize(morse2, g, ideal=maximal_ideal(2, 6))
    assert cert.mode == "ideal"
    _check_run(cert)
    with pytest.raises(PreconditionError) as info:
        normalize(morse2, parse_jet("z1^3", 6, 2), ideal=maximal_ideal(2, 6))
    assert info.value.inclusion == "g ∈ I^4"


def test_tampering_is_detected(cusp):
    cert = normalize(cusp, parse_jet("z^5", 8))
    assert verify_certificate(cert)
    tampered = dataclasses.replace(cert, phi=JetMap.identity(1, 8))
    assert not verify_certificate(tampered)
    wrong_g = dataclasses.replace(cert, g=parse_jet("z^6", 8))
    assert not verify_certificate(wrong_g)


def test_record_round_trip(cusp):
    cert = normalize(cusp, parse_jet("z^5/1024", 8))
    cert = cert.with_schedule(certify_schedule(cert, 0.1, m=1.0))
    record = certificate_to_record(cert)
    parsed = CertificateRecord.model_validate_json(record.model_dump_json())
    restored = certificate_from_record(parsed)
    assert verify_certificate(restored)
    assert certificate_to_record(restored).model_dump_json() == record.model_dump_json()


def test_schedule_and_criterion(cusp):
    cert = normalize(cusp, parse_jet("z^5/1024", 8))
    verdict = certify_schedule(cert, 0.1, k=1, m=1.0, grid=(0.05, 0.1))
    assert verdict.criterion.ok
    assert verdict.criterion_somewhere
    assert len(verdict.grid_checks) == 2
    assert verdict.note == SCHEDULE_NOTE
    assert all(step.s_n > 0 and step.sigma_n > 0 for step in verdict.steps)


def test_remainder_lemma():
    f = parse_jet("z^2", 8)
    u = Derivation.along(0, parse_jet("(1/8)*z^2", 8))
    s, tau = 0.2, 0.4
    bound = remainder_bound(derivation_norm_bound(u, tau), tau, s)
    assert bound is not None
    assert majorant_norm(remainder_term(u, f), s) <= bound * majorant_norm(f, tau)


def test_remainder_bound_not_claimed_for_large_u():
    u = Derivation.along(0, parse_jet("4*z^2", 8))
    assert remainder_bound(derivation_norm_bound(u, 0.4), 0.4, 0.2) is None


@pytest.mark.parametrize("seed", range(5))
def test_morse_convergence_certificate(seed):
    rng = np.random.default_rng(seed)
    f = parse_jet("z1^2 + z2^2", 6)
    g = random_perturbation(rng, 2, 6, 3, max_coeff=Fraction(1, 1024))
    cert = normalize(f, g)
    _check_run(cert)
    verdict = certify_schedule(cert, 0.1, m=1.0)
    assert verdict.criterion.ok


def _square_root_oracle(h):
    """z(1 + zh)^{1/2} by the binomial series."""
    z = parse_jet("z", h.trunc)
    w = z * h
    total = term = Jet.constant(1, 1, h.trunc)
    binom = QQ(1)
    for j in range(1, h.trunc + 1):
        binom = binom * (QQ(1, 2) - (j - 1)) / j
        term = term * w
        if term.is_zero():
            break
        total = total + term.scale(binom)
    return z * total


def test_square_pipeline():
    f = parse_jet("z^2", 12)
    assert determinacy_exponent(f).value == 1
    cert = normalize(f, parse_jet("z^3", 12))
    _check_run(cert)
    # z^2∘phi = z^2 + z^3 forces phi = z(1 + z)^{1/2}
    phi = cert.phi.components[0]
    assert phi == _square_root_oracle(Jet.constant(1, 1, 12))
    assert phi.truncated_at(3) == parse_jet("z + (1/2)*z^2 - (1/8)*z^3", 12)
    assert phi.coefficient((12,)) == parse_jet("(4199/524288)*z^12", 12).coefficient((12,))
    assert cert.working_trunc == 13
    assert phi.trunc == 12


@pytest.mark.parametrize("seed", range(100))
def test_square_pipeline_random_tail(seed):
    rng = np.random.default_rng(seed)
    h = random_jet(rng, 1, 12, density=0.4, max_degree=9)
    g = parse_jet("z^3", 12) * h
    cert = normalize(parse_jet("z^2", 12), g)
    assert cert.success
    assert cert.phi.components[0] == _square_root_oracle(h)


def test_phi_is_lowered_from_the_working_truncation(cusp):
    cert = normalize(cusp, parse_jet("z^5", 8))
    assert cert.working_trunc == 10
    assert all(st.u.trunc == 10 for st in cert.steps)
    assert cert.phi.trunc == 8 and cert.inverse_phi.trunc == 8
    record = certificate_to_record(cert)
    assert record.work_trunc == 10


def test_remainder_lemma_on_random_derivations():
    rng = np.random.default_rng(7)
    tau = 0.4
    claimed = 0
    for _ in range(200):
        n_vars = int(rng.integers(1, 3))
        u = Derivation(tuple(random_jet(rng, n_vars, 6, min_order=2, density=0.3).scale(QQ(1, 256))
                             for _ in range(n_vars)))
        f = random_jet(rng, n_vars, 6, density=0.5)
        estimate = derivation_norm_bound(u, tau)
        for s in (0.1, 0.2, 0.3):
            bound = remainder_bound(estimate, tau, s)
            if bound is None:
                continue
            claimed += 1
            assert majorant_norm(remainder_term(u, f), s) <= bound * majorant_norm(f, tau) + 1e-15
    assert claimed >= 300


def _cyclic_shift(n_vars, trunc, step):
    return JetMap(tuple(Jet.variable((i + step) % n_vars, n_vars, trunc) for i in range(n_vars)))


@pytest.mark.parametrize("germ", morse_series(3)[1:], ids=lambda g: g.name)
def test_normalize_commutes_with_permutations(germ, rng):
    f = germ.jet()
    n, trunc = f.n_vars, f.trunc
    shift, unshift = _cyclic_shift(n, trunc, 1), _cyclic_shift(n, trunc, -1)
    assert f.compose(shift) == f
    g = random_perturbation(rng, n, trunc, 3, max_degree=5)
    phi = normalize(f, g).phi
    permuted = normalize(f, g.compose(shift)).phi
    assert permuted == unshift.compose(phi.compose(shift))
