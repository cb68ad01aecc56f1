import math

import numpy as np
import pytest

from fockdm.algebra import NormalFormOperator, poly_to_normal_form
from fockdm.evolution import (
    MasterTerms,
    PairingError,
    evolve_density,
    liouville_rhs,
    master_rhs,
    time_average_project,
)
from fockdm.fock import FockMatrix, interior_block, realize_matrix, trace_product
from fockdm.poly import parse_poly, random_poly
from fockdm.states import (
    ClassicalState,
    DensityMatrix,
    expectation,
    integrate_state,
    pure_density,
)

SQRT2 = math.sqrt(2.0)


def state1(phi, pi):
    return ClassicalState(np.array([phi]), np.array([pi]))


def number_operator():
    return poly_to_normal_form(parse_poly("0.5*phi1^2 + 0.5*pi1^2", {}))


def random_hermitian(rng, dim):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (g + g.conj().T)
    return h / np.linalg.norm(h)


def random_low_degree_hamiltonian(rng, scale=0.5):
    # real phipi polynomial of total degree <= 3 with bounded coefficients
    while True:
        p = random_poly(rng, modes=1, degree=3, terms=5)
        if not p.is_zero():
            return p * scale


class TestLiouville:
    def test_commuting_state_is_stationary(self):
        rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
        rhs = liouville_rhs(rho, number_operator(), 3)
        assert np.max(np.abs(rhs)) <= 1e-14

    def test_traceless(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            rho = random_hermitian(rng, 16)
            rhs = liouville_rhs(rho, number_operator(), 16)
            assert abs(np.trace(rhs)) <= 1e-12

    def test_matches_rotating_coherent_state(self):
        # H = adag a rotates z(t) = e^{-it} z; finite-difference the exact
        # rotated state and compare with the generator
        D = 32
        dt = 1e-4
        s0 = state1(1.0, 0.0)
        z0 = s0.z[0]

        def rho_at(t):
            z = np.exp(-1j * t) * z0
            phi = SQRT2 * z.real
            pi = SQRT2 * z.imag
            return pure_density(state1(phi, pi), D).data

        fd = (rho_at(dt) - rho_at(-dt)) / (2 * dt)
        rhs = liouville_rhs(pure_density(s0, D), number_operator(), D)
        assert np.max(np.abs(fd - rhs)) <= 1e-6


class TestMasterEquation:
    def test_requires_hermitian_pairing(self):
        lopsided = NormalFormOperator.annihilation().power(2)
        with pytest.raises(PairingError):
            MasterTerms(lopsided)

    def test_trace_conserved_for_arbitrary_matrices(self):
        rng = np.random.default_rng(3)
        D = 24
        for _ in range(12):
            H = poly_to_normal_form(random_low_degree_hamiltonian(rng))
            terms = MasterTerms(H)
            rho = random_hermitian(rng, D)  # not physically realizable
            assert abs(np.trace(master_rhs(rho, terms, D))) <= 1e-10

    def test_trace_conserved_even_for_non_hermitian_input(self):
        rng = np.random.default_rng(5)
        D = 16
        H = poly_to_normal_form(random_low_degree_hamiltonian(rng))
        terms = MasterTerms(H)
        rho = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
        assert abs(np.trace(master_rhs(rho, terms, D))) <= 1e-10

    def test_equals_liouville_for_unit_mass_oscillator(self):
        D = 32
        H = number_operator()
        terms = MasterTerms(H)
        rho = pure_density(state1(1.0, 0.0), D)
        lhs = master_rhs(rho, terms, D)
        rhs = liouville_rhs(rho, H, D)
        diff = np.abs(interior_block(lhs - rhs, 1, D, 4))
        assert diff.max() <= 1e-8

    def test_linearity(self):
        rng = np.random.default_rng(7)
        D = 12
        H = poly_to_normal_form(random_low_degree_hamiltonian(rng))
        terms = MasterTerms(H)
        r1 = random_hermitian(rng, D)
        r2 = random_hermitian(rng, D)
        a, b = 0.7, -1.3
        lhs = master_rhs(a * r1 + b * r2, terms, D)
        rhs = a * master_rhs(r1, terms, D) + b * master_rhs(r2, terms, D)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_finite_difference_of_classical_flow(self):
        # central difference of rho along the trajectory converges to the
        # generator at second order in dt
        rng = np.random.default_rng(9)
        D = 32
        for _ in range(3):
            H = random_low_degree_hamiltonian(rng)
            terms = MasterTerms(poly_to_normal_form(H))
            s0 = state1(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7))
            rho0 = pure_density(s0, D)
            rhs = master_rhs(rho0, terms, D)
            errs = []
            for dt in (1e-2, 1e-3):
                fwd = pure_density(integrate_state(H, s0, dt, dt / 20), D)
                bck = pure_density(integrate_state(H, s0, -dt, dt / 20), D)
                fd = (fwd.data - bck.data) / (2 * dt)
                errs.append(np.max(np.abs(fd - rhs)))
            slope = math.log10(errs[0] / errs[1])
            assert slope >= 1.9

    def test_precomputed_commutators_match_generic_route(self):
        from fockdm.algebra import commutator
        rng = np.random.default_rng(23)
        H = poly_to_normal_form(random_low_degree_hamiltonian(rng))
        terms = MasterTerms(H)
        n = H.modes
        for (create, annih) in H.words:
            for j in range(n):
                left, right = terms.commutator_words(create, annih, j)
                adag_j = NormalFormOperator.creation(j, n)
                a_j = NormalFormOperator.annihilation(j, n)
                word_r = NormalFormOperator(n, {((0,) * n, annih): 1.0})
                word_l = NormalFormOperator(n, {(create, (0,) * n): 1.0})
                assert commutator(adag_j, word_r) - left \
                    == NormalFormOperator.zero(n)
                assert commutator(a_j, word_l) - right \
                    == NormalFormOperator.zero(n)

    def test_unfolded_form_matches_folded_on_hermitian_input(self):
        # rho' + rho'^H assembled from the definition, against master_rhs
        rng = np.random.default_rng(29)
        D = 16
        for _ in range(5):
            H = poly_to_normal_form(random_low_degree_hamiltonian(rng))
            terms = MasterTerms(H)
            rho = random_hermitian(rng, D)
            rho_prime = np.zeros((D, D), dtype=complex)
            a = realize_matrix(NormalFormOperator.annihilation(), D).data
            for (create, annih), coeff in H.words.items():
                left, right = terms.commutator_words(create, annih, 0)
                word_r = realize_matrix(
                    NormalFormOperator(1, {((0,), annih): 1.0}), D).data
                word_l = realize_matrix(
                    NormalFormOperator(1, {(create, (0,)): 1.0}), D).data
                lmat = realize_matrix(left, D).data
                rmat = realize_matrix(right, D).data
                rho_prime += 1j * coeff * (
                    a @ lmat @ rho @ word_l - a.conj().T @ word_r @ rho @ rmat)
            folded = rho_prime + rho_prime.conj().T
            unfolded = master_rhs(rho, terms, D)
            # interior restriction: matrix products of realized factors leak
            # at the truncation edge while the single-word route does not
            margin = H.max_mode_degree() + 1
            diff = np.abs(interior_block(folded - unfolded, 1, D, margin))
            assert diff.max() <= 1e-10

    def test_energy_flux_is_finite_and_reported(self):
        # Tr(master_rhs(rho) H_n) need not vanish for arbitrary matrices;
        # the number is reported by the harness, never asserted to be zero
        rng = np.random.default_rng(11)
        D = 16
        H = poly_to_normal_form(random_low_degree_hamiltonian(rng))
        terms = MasterTerms(H)
        rho = random_hermitian(rng, D)
        flux = trace_product(master_rhs(rho, terms, D),
                             realize_matrix(H, D).data)
        assert np.isfinite(flux.real) and np.isfinite(flux.imag)


class TestEvolveDensity:
    def test_liouville_periodicity(self):
        D = 24
        dt = 2 * math.pi / 4000
        rho0 = pure_density(state1(1.0, 0.0), D)
        out = evolve_density(rho0, "liouville", number_operator(),
                             2 * math.pi, dt)
        assert np.max(np.abs(out.data - rho0.data)) <= 1e-6

    def test_master_tracks_classical_cosine(self):
        D = 24
        H = parse_poly("0.5*phi1^2 + 0.5*pi1^2", {})
        rho0 = pure_density(state1(1.0, 0.0), D)
        out = evolve_density(rho0, "master", poly_to_normal_form(H), 1.0, 1e-3)
        phi_obs = expectation(out, parse_poly("phi1", {}))
        assert abs(phi_obs - math.cos(1.0)) <= 1e-6

    def test_trace_drift_small_both_generators(self):
        D = 16
        H = parse_poly("0.5*pi1^2 + 0.5*phi1^2 + 0.05*phi1^3", {})
        Hn = poly_to_normal_form(H)
        rho0 = pure_density(state1(0.6, 0.2), D)
        for gen in ("liouville", "master"):
            out = evolve_density(rho0, gen, Hn, 10.0, 2e-3)
            assert abs(out.matrix.trace() - 1.0) <= 1e-8

    def test_liouville_preserves_spectrum(self):
        D = 16
        H = parse_poly("0.5*pi1^2 + 0.5*phi1^2 + 0.1*phi1^4", {})
        rho0 = pure_density(state1(0.5, -0.3), D)
        before = np.sort(np.linalg.eigvalsh(rho0.data))
        out = evolve_density(rho0, "liouville", poly_to_normal_form(H), 1.0, 1e-3)
        after = np.sort(np.linalg.eigvalsh(out.data))
        assert np.max(np.abs(before - after)) <= 1e-6

    def test_generator_flux_agreement_unit_mass(self):
        # zero-discrepancy regime: both generators predict the same flux for
        # low-degree observables
        D = 32
        H = number_operator()
        terms = MasterTerms(H)
        rho = pure_density(state1(0.8, -0.5), D)
        m_rhs = master_rhs(rho, terms, D)
        l_rhs = liouville_rhs(rho, H, D)
        for text in ("phi1", "pi1", "phi1^2", "phi1*pi1", "phi1^2*pi1"):
            g = realize_matrix(poly_to_normal_form(parse_poly(text, {})), D).data
            assert abs(trace_product(m_rhs, g) - trace_product(l_rhs, g)) <= 1e-7


class TestTimeAverageProject:
    def test_commuting_state_unchanged(self):
        D = 8
        diag = np.diag(np.linspace(0.4, 0.05, D)).astype(complex)
        diag /= np.trace(diag).real
        rho = DensityMatrix(FockMatrix(1, D, diag))
        out = time_average_project(rho, number_operator(), energy=1.0, delta=7.0)
        assert np.max(np.abs(out.data - rho.data)) <= 1e-12

    def test_trace_normalized(self):
        D = 24
        rho = pure_density(state1(1.0, 0.0), D)
        out = time_average_project(rho, number_operator(), energy=0.5, delta=50.0)
        assert abs(out.matrix.trace() - 1.0) <= 1e-10

    def test_off_diagonal_suppression_at_large_delta(self):
        D = 32
        rho = pure_density(state1(1.0, 0.0), D)
        out = time_average_project(rho, number_operator(), energy=0.5,
                                   delta=200.0)
        off0 = np.abs(rho.data - np.diag(np.diag(rho.data))).max()
        off = np.abs(out.data - np.diag(np.diag(out.data))).max()
        assert off <= (3.0 / 200.0) * off0

    def test_energy_offset_is_inert(self):
        D = 16
        rho = pure_density(state1(0.7, 0.1), D)
        a = time_average_project(rho, number_operator(), energy=0.0, delta=25.0)
        b = time_average_project(rho, number_operator(), energy=3.7, delta=25.0)
        assert np.max(np.abs(a.data - b.data)) <= 1e-12
