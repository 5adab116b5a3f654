"""Exact width spectra and the perturbed length-spectrum counting identity.

All arithmetic in this module is exact: widths are integer multiples of pi
(and of the perturbation size mu) represented as coefficient pairs, and the
square roots inside the closed-form width formulas are integer square roots.
No floating point enters until a value is rendered for display.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from math import isqrt
from typing import NamedTuple

from .checks import CheckReport

__all__ = [
    "LengthValue",
    "SpectrumTable",
    "triangular_dimension",
    "degree_index",
    "hemisphere_width",
    "sphere_width",
    "rp2_width",
    "enumerate_length_spectrum",
    "verify_counting_identity",
]

#: The counting identity only orders k*pi + m*mu correctly for small mu;
#: this note travels with every counting report (see verify_counting_identity).
_NORMALIZATION_NOTE = (
    "width values are normalized as pi * f(p); the alternative 2*pi * f(p) "
    "normalization is inconsistent with the counting window (0, pi*(d+1) + 1] "
    "and with the upper bound pi*f(p) + 1, and is therefore rejected here"
)


class LengthValue(NamedTuple):
    """Symbolic length k*pi + m*mu stored as the integer pair (k, m).

    Tuple (hence lexicographic) ordering on (pi_coeff, mu_coeff) coincides
    with numeric ordering of k*pi + m*mu whenever 0 < mu < 1/(2*(d+1)) and
    k <= d+1, so comparisons stay exact.
    """

    pi_coeff: int
    mu_coeff: int = 0

    @classmethod
    def checked(cls, pi_coeff: int, mu_coeff: int = 0) -> "LengthValue":
        """Construct with the invariants enforced: k, m >= 0, m <= k, (k, m) != (0, 0)."""
        if pi_coeff < 0 or mu_coeff < 0:
            raise ValueError("coefficients must be nonnegative")
        if pi_coeff == 0 and mu_coeff == 0:
            raise ValueError("zero length is excluded from the spectrum")
        if mu_coeff > pi_coeff:
            raise ValueError(
                f"mu coefficient {mu_coeff} exceeds pi coefficient {pi_coeff}"
            )
        return cls(pi_coeff, mu_coeff)

    def value(self, mu: float = 0.0) -> float:
        """Numeric value k*pi + m*mu; floating point enters only here."""
        return self.pi_coeff * math.pi + self.mu_coeff * mu

    def __str__(self) -> str:
        if self.pi_coeff == 0:
            head = ""
        elif self.pi_coeff == 1:
            head = "π"
        else:
            head = f"{self.pi_coeff}π"
        if self.mu_coeff == 0:
            return head or "0"
        tail = "μ" if self.mu_coeff == 1 else f"{self.mu_coeff}μ"
        return f"{head} + {tail}" if head else tail


def triangular_dimension(d: int) -> int:
    """Dimension (d+2)(d+1)/2 of the space of bivariate polynomials of degree <= d."""
    if d < 0:
        raise ValueError(f"degree must be nonnegative, got {d}")
    return (d + 2) * (d + 1) // 2


def degree_index(p: int) -> int:
    """The unique d with triangular_dimension(d-1) <= p <= triangular_dimension(d) - 1.

    Computed directly from the defining bracket by binary search on the
    strictly increasing sequence D(d) = triangular_dimension(d), so this is
    an independent route from the closed-form floor in hemisphere_width.
    """
    if p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    hi = 1
    while (hi + 2) * (hi + 1) // 2 <= p:  # D(hi) <= p
        hi *= 2
    lo = hi // 2  # D(lo) <= p < D(hi), except when hi == 1
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if (mid + 2) * (mid + 1) // 2 <= p:
            lo = mid
        else:
            hi = mid
    # hi is now the smallest d with D(d) > p, i.e. D(hi-1) <= p <= D(hi)-1.
    return hi


def hemisphere_width(p: int) -> LengthValue:
    """Width of the round hemisphere: pi * floor((-1 + sqrt(1 + 8p)) / 2).

    The floor is exact because isqrt is: for integers q, q <= sqrt(n) iff
    q <= isqrt(n). Python integers never overflow, so no wrapping can occur.
    """
    if p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    return LengthValue((isqrt(1 + 8 * p) - 1) // 2, 0)


def sphere_width(p: int) -> LengthValue:
    """Width of the round two-sphere: 2 * pi * floor(sqrt(p))."""
    if p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    return LengthValue(2 * isqrt(p), 0)


def rp2_width(p: int) -> LengthValue:
    """Width of the round projective plane: 2 * pi * floor((1 + sqrt(1 + 8p)) / 4)."""
    if p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    n = 1 + 8 * p
    q = (1 + isqrt(n)) // 4
    # Exact-floor certificate for the irrational case: q = floor((1+sqrt(n))/4)
    # iff 4q - 1 <= sqrt(n) < 4q + 3, an integer comparison after squaring.
    assert (4 * q - 1) ** 2 <= n < (4 * q + 3) ** 2
    return LengthValue(2 * q, 0)


@dataclass
class SpectrumTable:
    """Sorted, deduplicated candidate lengths k*pi + m*mu for degree bound d."""

    d: int
    values: list[LengthValue]
    multiplicity_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("spectrum values must be strictly increasing")
        counted = Counter(v.pi_coeff for v in self.values)
        if dict(counted) != self.multiplicity_map:
            raise ValueError("multiplicity_map disagrees with values")

    @property
    def total_count(self) -> int:
        return len(self.values)

    def collapsed_pi_multiset(self) -> list[int]:
        """The multiset of pi coefficients left after sending mu to zero."""
        return sorted(v.pi_coeff for v in self.values)


def enumerate_length_spectrum(d: int) -> SpectrumTable:
    """All candidate lengths n1*pi + n2*(pi+mu) + n3*(2pi+mu) below the cutoff.

    Rewriting gives k = n1 + n2 + 2*n3 and m = n2 + n3; a pair (k, m) is
    achievable exactly when 0 <= m <= k (witness n3 = 0, n2 = m, n1 = k - m),
    and the window (0, pi*(d+1) + 1] is exactly k <= d+1 for admissible mu.
    """
    if d < 0:
        raise ValueError(f"degree must be nonnegative, got {d}")
    values = [
        LengthValue.checked(k, m) for k in range(1, d + 2) for m in range(k + 1)
    ]
    multiplicity = {k: k + 1 for k in range(1, d + 2)}
    return SpectrumTable(d=d, values=values, multiplicity_map=multiplicity)


def verify_counting_identity(d: int) -> CheckReport:
    """Cross-verify the enumerated spectrum against the counting identity.

    Checks, with counterexamples on failure:
      (a) cardinality equals D(d+1) - 1 = (d+1)(d+4)/2;
      (b) multiplicity of pi coefficient j is j+1 and equals the number of
          p with degree_index(p) == j, i.e. D(j) - D(j-1);
      (c) values are strictly increasing and distinct;
      (d) dropping the mu coefficients reproduces the multiset
          {pi * degree_index(p) : p = 1 .. D(d+1)-1}.
    """
    report = CheckReport(subject=f"counting-identity d={d}", notes=(_NORMALIZATION_NOTE,))
    table = enumerate_length_spectrum(d)
    expected_total = (d + 1) * (d + 4) // 2
    dd1 = triangular_dimension(d + 1)

    report.add(
        "spectrum-count",
        table.total_count == expected_total == dd1 - 1,
        table.total_count,
        expected_total,
        f"D(d+1)-1 = {dd1 - 1}",
    )

    degree_counts = Counter(degree_index(p) for p in range(1, dd1))
    bad = [
        j
        for j in range(1, d + 2)
        if not (
            table.multiplicity_map.get(j) == j + 1 == degree_counts[j]
            == triangular_dimension(j) - triangular_dimension(j - 1)
        )
    ]
    report.add(
        "spectrum-multiplicities",
        not bad,
        {j: table.multiplicity_map.get(j) for j in bad} if bad else "all j+1",
        "j+1 per pi coefficient j",
        f"first failing j: {bad[0]}" if bad else "",
    )

    non_increasing = [
        (a, b) for a, b in zip(table.values, table.values[1:]) if b <= a
    ]
    report.add(
        "spectrum-strictly-increasing",
        not non_increasing,
        len(non_increasing),
        0,
        f"first violation: {non_increasing[0]}" if non_increasing else "",
    )

    collapsed = table.collapsed_pi_multiset()
    by_degree = sorted(degree_index(p) for p in range(1, dd1))
    report.add(
        "spectrum-collapse",
        collapsed == by_degree,
        f"{len(collapsed)} values",
        f"{len(by_degree)} values",
        "" if collapsed == by_degree else f"first mismatch at index "
        f"{next(i for i, (x, y) in enumerate(zip(collapsed, by_degree)) if x != y)}",
    )
    return report
