"""Delivery probability over opportunistic paths.

An opportunistic path is an ordered list of hops, each behaving like an
independent contact process (see :mod:`oppload.contacts`).  Three layers
build on each other:

* *availability*: the probability that every hop produces at least one
  contact, in order, within the deadline.  Sums of per-hop exponential or
  Erlang waiting times are approximated by a single gamma variable that
  matches the exact mean and variance (a Welch-Satterthwaite style moment
  match).
* *transfer probability*: the probability that a given number of contacts
  on one hop carries a data item, approximating the heavy-tailed sum of
  per-contact Pareto amounts by its maximum scaled with the expected
  sum-to-max ratio.
* *delivery probability*: the probability that a data item fully traverses
  the path within the deadline, summing over the number of contacts each
  hop needs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .contacts import PairContactParams, log_beta, reg_lower_incomplete_gamma
from .errors import ComplexityError

__all__ = [
    "PathSpec",
    "GammaApprox",
    "DeliveryQuery",
    "gamma_approx",
    "availability",
    "mean_max_ratio",
    "transfer_prob",
    "delivery_prob_onehop",
    "delivery_prob_path",
    "path_capacity",
    "DEFAULT_TUPLE_CAP",
]

DEFAULT_TUPLE_CAP = 10**6

# Pareto shapes this close to 1 use the harmonic-number branch of the
# sum-to-max ratio; the general branch degenerates to 0/0 there.
_ALPHA_ONE_TOL = 1e-9

_CEIL_GUARD = 1e-9


@dataclass(frozen=True)
class PathSpec:
    """An ordered opportunistic path of one or more hops."""

    hops: tuple[PairContactParams, ...]

    def __post_init__(self) -> None:
        if len(self.hops) < 1:
            raise ValueError("a path needs at least one hop")
        for hop in self.hops:
            if not isinstance(hop, PairContactParams):
                raise TypeError(f"hops must be PairContactParams, got {type(hop)!r}")

    def __len__(self) -> int:
        return len(self.hops)


@dataclass(frozen=True)
class GammaApprox:
    """Shape/rate of the gamma variable matching a waiting-time sum."""

    gamma_shape: float
    delta_rate: float

    def __post_init__(self) -> None:
        for name in ("gamma_shape", "delta_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class DeliveryQuery:
    """A data item size and the deadline it must be delivered within."""

    data_size: float
    deadline: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.data_size) and self.data_size > 0):
            raise ValueError(f"data_size must be finite and > 0, got {self.data_size!r}")
        if not (math.isfinite(self.deadline) and self.deadline > 0):
            raise ValueError(f"deadline must be finite and > 0, got {self.deadline!r}")


def gamma_approx(
    contact_counts: Sequence[int], lambdas: Sequence[float]
) -> GammaApprox:
    """Moment-matched gamma approximation of a sum of Erlang waiting times.

    Hop ``i`` contributes the waiting time for ``contact_counts[i]``
    contacts of a Poisson process with rate ``lambdas[i]``.  With
    ``M = sum(n_i / lambda_i)`` and ``V = sum(n_i / lambda_i**2)`` the
    returned gamma has shape ``M**2 / V`` and rate ``M / V``, so its mean
    and variance equal ``M`` and ``V`` exactly.

    Raises:
        ValueError: length mismatch, empty input, or nonpositive entries.
    """
    if len(contact_counts) != len(lambdas):
        raise ValueError(
            f"length mismatch: {len(contact_counts)} counts vs {len(lambdas)} rates"
        )
    if not contact_counts:
        raise ValueError("need at least one hop")
    mean = 0.0
    var = 0.0
    for n, lam in zip(contact_counts, lambdas):
        if not (n > 0 and math.isfinite(lam) and lam > 0):
            raise ValueError(f"invalid hop entry (n={n!r}, lambda={lam!r})")
        mean += n / lam
        var += n / (lam * lam)
    return GammaApprox(gamma_shape=mean * mean / var, delta_rate=mean / var)


def availability(path: PathSpec, deadline: float) -> float:
    """Probability the path materializes (one contact per hop) in time.

    For a single hop this is exactly the exponential CDF ``1 - exp(-lambda
    * deadline)``; multi-hop paths use the moment-matched gamma.
    """
    if not (math.isfinite(deadline) and deadline >= 0):
        raise ValueError(f"deadline must be finite and >= 0, got {deadline!r}")
    if deadline == 0:
        return 0.0
    approx = gamma_approx([1] * len(path), [hop.contact_rate for hop in path.hops])
    return reg_lower_incomplete_gamma(approx.gamma_shape, approx.delta_rate * deadline)


@lru_cache(maxsize=65536)
def _mean_max_ratio_cached(contact_count: int, alpha: float) -> float:
    if abs(alpha - 1.0) < _ALPHA_ONE_TOL:
        return sum(1.0 / i for i in range(1, contact_count + 1))
    b = math.exp(log_beta(contact_count, 1.0 / alpha))
    value = (1.0 - contact_count * b) / (1.0 - alpha)
    # the exact value lies in [1, c]; trim float drift at the boundaries
    return min(max(value, 1.0), float(contact_count))


def mean_max_ratio(contact_count: int, alpha: float) -> float:
    """Expected ratio of a Pareto i.i.d. sum to its maximum.

    For ``c`` draws with shape ``alpha`` the expectation is
    ``(1 - c * B(c, 1/alpha)) / (1 - alpha)``, with the harmonic number
    ``H_c`` as the ``alpha = 1`` limit (shapes within 1e-9 of 1 use that
    branch).  The value always lies in ``[1, c]``.
    """
    if contact_count < 1 or int(contact_count) != contact_count:
        raise ValueError(f"contact_count must be a positive integer, got {contact_count!r}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha!r}")
    return _mean_max_ratio_cached(int(contact_count), float(alpha))


def transfer_prob(hop: PairContactParams, contact_count: int, data_size: float) -> float:
    """Probability that ``contact_count`` contacts carry ``data_size``.

    Approximates the Pareto sum by its maximum: with ``R`` the expected
    sum-to-max ratio, the result is
    ``1 - (1 - min((beta * R / D) ** alpha, 1)) ** c``.  Equal to 1
    whenever ``beta * R >= data_size`` (the minimum transfer suffices).
    """
    if not (math.isfinite(data_size) and data_size > 0):
        raise ValueError(f"data_size must be finite and > 0, got {data_size!r}")
    ratio = hop.beta * mean_max_ratio(contact_count, hop.alpha) / data_size
    if ratio >= 1.0:
        return 1.0
    miss = 1.0 - ratio**hop.alpha
    return min(max(1.0 - miss**contact_count, 0.0), 1.0)


def _needed_contacts(data_size: float, beta: float) -> int:
    """Maximum contacts a hop may need: ceil(data_size / beta)."""
    return max(1, math.ceil(data_size / beta - _CEIL_GUARD))


def delivery_prob_onehop(hop: PairContactParams, query: DeliveryQuery) -> float:
    """Delivery probability of a data item over a single hop.

    The item needs at most ``l = ceil(D / beta)`` contacts.  Writing
    ``T' = D / rate`` for the transmission time, the probability is the sum
    over ``i = 1..l`` of

        P(exactly i contacts carry D) * P(i-th contact in time)

    where the in-time factor is the Erlang CDF ``P(i, lambda * (T - T'))``
    and the exactly-i factor is the increment ``TP(i) - TP(i-1)`` of the
    cumulative transfer probability from :func:`transfer_prob` (the
    within-i-contacts success events are nested, so consecutive increments
    decompose them disjointly).  Returns 0 when the deadline cannot even
    cover the transmission time.
    """
    time_budget = query.deadline - query.data_size / hop.rate
    if time_budget <= 0:
        return 0.0
    x = hop.contact_rate * time_budget
    last = _needed_contacts(query.data_size, hop.beta)
    total = 0.0
    prev = 0.0
    for i in range(1, last + 1):
        in_time = reg_lower_incomplete_gamma(i, x)
        if in_time == 0.0:
            break
        success = transfer_prob(hop, i, query.data_size)
        total += (success - prev) * in_time
        if success >= 1.0:
            break
        prev = success
    return min(max(total, 0.0), 1.0)


def delivery_prob_path(
    path: PathSpec, query: DeliveryQuery, tuple_cap: int = DEFAULT_TUPLE_CAP
) -> float:
    """Delivery probability of a data item over a k-hop path.

    Enumerates every per-hop contact-count tuple ``<n_1..n_k>`` with
    ``1 <= n_i <= ceil(D / beta_i)``.  A tuple contributes the product over
    hops of P(hop i succeeds at exactly ``n_i`` contacts), decomposed as in
    :func:`delivery_prob_onehop`, times the probability that the total
    contact waiting time fits in the deadline minus the serial transmission
    time ``T' = sum(D / rate_i)``, evaluated through the moment-matched
    gamma for that tuple.  Single-hop paths are computed by
    :func:`delivery_prob_onehop`, to which this reduces.

    Args:
        path: the path.
        query: item size and deadline.
        tuple_cap: maximum number of tuples to enumerate.

    Raises:
        ComplexityError: the tuple space exceeds ``tuple_cap``.
    """
    if len(path) == 1:
        return delivery_prob_onehop(path.hops[0], query)

    transmission = sum(query.data_size / hop.rate for hop in path.hops)
    time_budget = query.deadline - transmission
    if time_budget <= 0:
        return 0.0

    limits = [_needed_contacts(query.data_size, hop.beta) for hop in path.hops]
    tuple_count = math.prod(limits)
    if tuple_count > tuple_cap:
        raise ComplexityError(
            f"path would require enumerating {tuple_count} contact tuples "
            f"(cap {tuple_cap}); the query is too large for this estimator"
        )

    # Per-hop probability of success at exactly n contacts, n = 1..limit.
    exact: list[list[float]] = []
    for hop, limit in zip(path.hops, limits):
        probs = [transfer_prob(hop, n, query.data_size) for n in range(1, limit + 1)]
        exact.append(
            [probs[n - 1] - (probs[n - 2] if n > 1 else 0.0) for n in range(1, limit + 1)]
        )

    lambdas = [hop.contact_rate for hop in path.hops]
    total = 0.0
    for combo in itertools.product(*(range(1, limit + 1) for limit in limits)):
        weight = 1.0
        for hop_index, n in enumerate(combo):
            weight *= exact[hop_index][n - 1]
            if weight == 0.0:
                break
        if weight == 0.0:
            continue
        approx = gamma_approx(combo, lambdas)
        total += weight * reg_lower_incomplete_gamma(
            approx.gamma_shape, approx.delta_rate * time_budget
        )
    return min(max(total, 0.0), 1.0)


def path_capacity(path: PathSpec) -> float:
    """Data amount the path can carry whenever it materializes: min beta."""
    return min(hop.beta for hop in path.hops)
