import math

import numpy as np
import pytest

import oppload as ol
from oppload.errors import ComplexityError


def hop(lam=0.1, alpha=2.0, beta=2.0, rate=1.0):
    return ol.PairContactParams(contact_rate=lam, alpha=alpha, beta=beta, rate=rate)


class TestGammaApprox:
    def test_single_exponential(self):
        g = ol.gamma_approx([1], [0.5])
        assert (g.gamma_shape, g.delta_rate) == (pytest.approx(1), pytest.approx(0.5))

    def test_iid_sum_is_exact_erlang(self):
        g = ol.gamma_approx([3], [2.0])
        assert (g.gamma_shape, g.delta_rate) == (pytest.approx(3), pytest.approx(2))

    def test_two_hop_moment_match(self):
        g = ol.gamma_approx([1, 1], [1.0, 2.0])
        assert g.gamma_shape == pytest.approx(1.8)
        assert g.delta_rate == pytest.approx(1.2)

    def test_moment_identity_on_random_inputs(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            k = rng.integers(1, 6)
            counts = rng.integers(1, 10, size=k).tolist()
            lams = rng.uniform(0.01, 5.0, size=k).tolist()
            g = ol.gamma_approx(counts, lams)
            mean = sum(n / l for n, l in zip(counts, lams))
            var = sum(n / l**2 for n, l in zip(counts, lams))
            assert g.gamma_shape / g.delta_rate == pytest.approx(mean, abs=1e-12, rel=1e-12)
            assert g.gamma_shape / g.delta_rate**2 == pytest.approx(var, abs=1e-12, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            ol.gamma_approx([1, 2], [1.0])
        with pytest.raises(ValueError):
            ol.gamma_approx([], [])
        with pytest.raises(ValueError):
            ol.gamma_approx([0], [1.0])
        with pytest.raises(ValueError):
            ol.gamma_approx([1], [-1.0])


class TestAvailability:
    def test_one_hop_exponential_cdf(self):
        path = ol.PathSpec((hop(lam=0.01),))
        assert ol.availability(path, 100.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)

    def test_two_equal_hops_exact_erlang(self):
        path = ol.PathSpec((hop(lam=0.1), hop(lam=0.1)))
        expected = 1 - math.exp(-3) * (1 + 3)
        assert ol.availability(path, 30.0) == pytest.approx(expected, abs=1e-10)

    def test_zero_deadline(self):
        path = ol.PathSpec((hop(), hop(), hop()))
        assert ol.availability(path, 0.0) == 0.0


class TestMeanMaxRatio:
    def test_single_contact_is_one(self):
        for alpha in (0.5, 1.0, 2.7, 9.0):
            assert ol.mean_max_ratio(1, alpha) == 1.0

    def test_alpha_one_harmonic(self):
        assert ol.mean_max_ratio(3, 1.0) == pytest.approx(11 / 6, abs=1e-12)

    def test_c2_alpha2(self):
        assert ol.mean_max_ratio(2, 2.0) == pytest.approx(5 / 3, abs=1e-12)

    def test_near_one_routes_to_harmonic(self):
        exact = sum(1 / i for i in range(1, 5))
        assert ol.mean_max_ratio(4, 1.0 + 1e-10) == pytest.approx(exact, abs=1e-9)

    def test_bounds_and_monotone_in_contacts(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            alpha = float(rng.uniform(0.2, 8.0))
            values = [ol.mean_max_ratio(c, alpha) for c in range(1, 20)]
            for c, value in enumerate(values, start=1):
                assert 1.0 <= value <= c
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            ol.mean_max_ratio(0, 2.0)
        with pytest.raises(ValueError):
            ol.mean_max_ratio(2, 0.0)


class TestTransferProb:
    def test_single_contact_pareto_tail(self):
        assert ol.transfer_prob(hop(alpha=2, beta=2), 1, 4.0) == pytest.approx(0.25)

    def test_two_contacts_uses_ratio(self):
        assert ol.transfer_prob(hop(alpha=2, beta=2), 2, 10.0) == pytest.approx(17 / 81)

    def test_guaranteed_when_item_fits_minimum(self):
        for alpha in (0.7, 1.0, 3.0):
            assert ol.transfer_prob(hop(alpha=alpha, beta=5), 1, 5.0) == 1.0
            assert ol.transfer_prob(hop(alpha=alpha, beta=5), 1, 4.0) == 1.0

    def test_monotone_in_contacts_beta_and_size(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            alpha = float(rng.uniform(1.2, 5.0))
            beta = float(rng.uniform(1.0, 4.0))
            size = float(rng.uniform(beta, 8 * beta))
            by_c = [ol.transfer_prob(hop(alpha=alpha, beta=beta), c, size) for c in range(1, 9)]
            assert all(b >= a - 1e-12 for a, b in zip(by_c, by_c[1:]))
            by_beta = [
                ol.transfer_prob(hop(alpha=alpha, beta=b), 3, size)
                for b in np.linspace(0.5, size, 10)
            ]
            assert all(b >= a - 1e-12 for a, b in zip(by_beta, by_beta[1:]))
            by_size = [
                ol.transfer_prob(hop(alpha=alpha, beta=beta), 3, s)
                for s in np.linspace(beta / 2, 10 * beta, 12)
            ]
            assert all(b <= a + 1e-12 for a, b in zip(by_size, by_size[1:]))


class TestDeliveryOneHop:
    def test_single_term_reduces_to_exponential(self):
        h = hop(lam=0.1, alpha=2.0, beta=5.0, rate=1.0)
        got = ol.delivery_prob_onehop(h, ol.DeliveryQuery(5.0, 20.0))
        assert got == pytest.approx(1 - math.exp(-0.1 * 15), abs=1e-10)

    def test_deadline_equal_to_transmission_time(self):
        h = hop(rate=1.0)
        assert ol.delivery_prob_onehop(h, ol.DeliveryQuery(5.0, 5.0)) == 0.0

    def test_matches_monte_carlo(self):
        h = hop(lam=0.05, alpha=2.0, beta=5.0, rate=1.0)
        estimated = ol.delivery_prob_onehop(h, ol.DeliveryQuery(12.0, 200.0))
        simulated = ol.run_monte_carlo_delivery(
            ol.PathSpec((h,)), 12.0, 200.0, runs=20_000, seed=42
        )
        assert abs(estimated - simulated) <= 0.05


class TestDeliveryPath:
    def test_single_hop_path_equals_onehop(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            h = hop(
                lam=float(rng.uniform(0.005, 0.2)),
                alpha=float(rng.uniform(1.2, 6.0)),
                beta=float(rng.uniform(1.0, 5.0)),
                rate=float(rng.uniform(0.5, 20.0)),
            )
            size = float(rng.uniform(0.5, 6.0) * h.beta)
            deadline = float(rng.uniform(size / h.rate + 1.0, 500.0))
            query = ol.DeliveryQuery(size, deadline)
            assert ol.delivery_prob_path(ol.PathSpec((h,)), query) == pytest.approx(
                ol.delivery_prob_onehop(h, query), abs=1e-9
            )

    def test_deadline_below_serial_transmission(self):
        path = ol.PathSpec((hop(rate=1.0), hop(rate=2.0)))
        # serial transmission needs 6 + 3 = 9 time units
        assert ol.delivery_prob_path(path, ol.DeliveryQuery(6.0, 9.0)) == 0.0

    def test_two_hop_matches_monte_carlo(self):
        path = ol.PathSpec(
            (hop(lam=0.05, alpha=2, beta=5, rate=1), hop(lam=0.08, alpha=2, beta=5, rate=1))
        )
        estimated = ol.delivery_prob_path(path, ol.DeliveryQuery(8.0, 300.0))
        simulated = ol.run_monte_carlo_delivery(path, 8.0, 300.0, runs=20_000, seed=7)
        assert abs(estimated - simulated) <= 0.08

    def test_tuple_cap_refused(self):
        path = ol.PathSpec((hop(beta=0.001), hop(beta=0.001)))
        with pytest.raises(ComplexityError):
            ol.delivery_prob_path(path, ol.DeliveryQuery(100.0, 1e6), tuple_cap=1000)

    def test_monotone_in_size_and_deadline(self):
        # the max-based transfer approximation carries sub-0.1% wiggles in
        # the item size once the deadline saturates, so the size sweep
        # allows that much; the deadline sweep is exact
        rng = np.random.default_rng(37)
        for _ in range(5):
            hops = tuple(
                hop(
                    lam=float(rng.uniform(0.004, 0.03)),
                    alpha=float(rng.uniform(3.0, 8.0)),
                    beta=float(rng.uniform(2.0, 4.0)),
                    rate=10.0,
                )
                for _ in range(int(rng.integers(1, 3)))
            )
            path = ol.PathSpec(hops)
            beta = min(h.beta for h in hops)
            by_size = [
                ol.delivery_prob_path(path, ol.DeliveryQuery(k * beta, 400.0))
                for k in range(1, 9)
            ]
            assert all(b <= a + 1e-3 for a, b in zip(by_size, by_size[1:]))
            by_deadline = [
                ol.delivery_prob_path(path, ol.DeliveryQuery(3 * beta, t))
                for t in np.linspace(10.0, 600.0, 8)
            ]
            assert all(b >= a - 1e-9 for a, b in zip(by_deadline, by_deadline[1:]))

    def test_fuzzed_results_stay_probabilities(self):
        rng = np.random.default_rng(41)
        for _ in range(1000):
            k = int(rng.integers(1, 4))
            hops = tuple(
                hop(
                    lam=float(10 ** rng.uniform(-3, 0)),
                    alpha=float(rng.uniform(0.5, 8.0)),
                    beta=float(10 ** rng.uniform(-1, 1)),
                    rate=float(10 ** rng.uniform(-1, 2)),
                )
                for _ in range(k)
            )
            path = ol.PathSpec(hops)
            size = float(10 ** rng.uniform(-1, 1.2))
            deadline = float(10 ** rng.uniform(0, 3))
            try:
                value = ol.delivery_prob_path(path, ol.DeliveryQuery(size, deadline))
            except ComplexityError:
                continue
            assert 0.0 <= value <= 1.0


class TestPathCapacity:
    def test_examples(self):
        assert ol.path_capacity(ol.PathSpec((hop(beta=5),))) == 5
        assert ol.path_capacity(
            ol.PathSpec((hop(beta=3), hop(beta=7), hop(beta=5)))
        ) == 3
        assert ol.path_capacity(ol.PathSpec((hop(beta=2), hop(beta=2)))) == 2


class TestQueryValidation:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ol.DeliveryQuery(0.0, 10.0)
        with pytest.raises(ValueError):
            ol.DeliveryQuery(1.0, 0.0)

    def test_path_needs_a_hop(self):
        with pytest.raises(ValueError):
            ol.PathSpec(())
