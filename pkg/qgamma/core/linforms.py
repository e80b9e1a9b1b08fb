"""
Linear forms I = c·γ + L - A in base 2, base 3 and general base q.

Every residual is I = Σ_{ν>n} Σ_{t≥0} σ_{t,q} ∫_0^1 x^(q^ν+t-1) D(x) dx for a
damping polynomial D with D = c + F_q·P. Splitting D that way gives

    L = c·n·log q + Σ_{l≥1} coeff_l·T_l,
    A = c·(n·H_{q-1} - DS_q(n)) - coeff_0·T_0,

with coeff the coefficients of G_q·P, T_l = Σ_{ν>n} 1/(q^ν + l) and DS_q the
finite block sum of integral_part(). The residual oracles sum the left-hand
side independently through the periodic-sign kernel.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import List, Optional, Sequence

from qgamma.config import settings
from qgamma.core.numerics import FixedPoint, FixedSum, HPReal, format_hpreal
from qgamma.core.numtheory import lcm_upto
from qgamma.core.qlog import log_fixed, tail_sum_table
from qgamma.core.qpoly import a_coeffs, b_coeffs, g_poly
from qgamma.core.series import (
    chi_ratio_log2,
    periodic_sign_sum,
    periodic_sign_terms,
    reference_gamma,
)
from qgamma.schemas.schema_linforms import (
    DecompositionRecord,
    FormRoute,
    LinearFormDecomposition,
    SNuM,
)
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.tasks.base import logged_task
from qgamma.util.exceptions import IntegralityFailure, RangeError
from qgamma.util.logger import set_base, setup_logger

logger = setup_logger(__name__)


def r_m(m: int, t: int) -> Fraction:
    """R_m(t) = m!/(t(t+1)...(t+m)) = ∫_0^1 x^(t-1)(1-x)^m dx."""
    if m < 0 or t < 1:
        raise ValueError(f"need m >= 0 and t >= 1, got m={m}, t={t}")
    return Fraction(1, t * comb(t + m, m))


def r_m_partial_fractions(m: int, t: int) -> Fraction:
    """R_m(t) = Σ_{j=0}^m (-1)^j C(m,j)/(t+j)."""
    if m < 0 or t < 1:
        raise ValueError(f"need m >= 0 and t >= 1, got m={m}, t={t}")
    return sum(
        (Fraction((-1) ** j * comb(m, j), t + j) for j in range(m + 1)), Fraction(0)
    )


def _internal_bits(plan: PrecisionPlan, *magnitudes: int, terms: int = 2) -> int:
    return (
        plan.work_bits
        + max((abs(x).bit_length() for x in magnitudes), default=0)
        + math.ceil(math.log2(max(terms, 2)))
        + settings.MIN_GUARD_BITS
    )


def s_num(nu: int, m: int, plan: PrecisionPlan) -> SNuM:
    """
    S_{ν,m} = 2^m·β(2^ν) - Σ_{j=1}^m C(m,j) Σ_{κ=0}^{j-1} (-1)^κ/(2^ν+κ),
    with β(N) = Σ_{κ≥0} (-1)^κ/(N+κ) summed through its Euler transform.
    """
    if nu < 1 or m < 0:
        raise ValueError(f"need ν >= 1 and m >= 0, got ν={nu}, m={m}")
    N = 1 << nu
    bits = plan.work_bits + m + settings.MIN_GUARD_BITS
    beta = periodic_sign_sum(2, 0, N, bits)
    finite = Fraction(0)
    partial = Fraction(0)
    for j in range(1, m + 1):
        kappa = j - 1
        partial += Fraction((-1) ** kappa, N + kappa)
        finite += comb(m, j) * partial
    value = beta.scale(1 << m) - FixedPoint.from_fraction(finite, bits)
    return SNuM(nu=nu, m=m, value=value.to_hpreal())


def s_num_direct(nu: int, m: int, plan: PrecisionPlan) -> SNuM:
    """S_{ν,m} = Σ_k R_{m+k}(2^ν)/2^(k+1)."""
    if nu < 1 or m < 0:
        raise ValueError(f"need ν >= 1 and m >= 0, got ν={nu}, m={m}")
    value = periodic_sign_sum(2, m, 1 << nu, plan.work_bits + settings.MIN_GUARD_BITS)
    return SNuM(nu=nu, m=m, value=value.to_hpreal())


def s_num_alternating(nu: int, m: int, terms: int, prec: int = 128) -> HPReal:
    """Partial alternating sum Σ_{t<terms} (-1)^t R_m(2^ν+t); remainder bounded by the next term."""
    N = 1 << nu
    partial = sum((Fraction((-1) ** t) * r_m(m, N + t) for t in range(terms)), Fraction(0))
    return HPReal.exact(partial, prec).with_error(r_m(m, N + terms))


def _residual_series(
    q: int,
    n: int,
    m: int,
    weights: Sequence[int],
    bits: int,
    head: int = 0,
) -> FixedPoint:
    """
    Σ_{ν>n} Σ_i w_i Σ_{t≥0} σ_{t,q} R_m(q^ν + i + t).

    The first `head` inner terms (a multiple of q) are summed directly; the
    rest goes through the accelerated kernel. The ν-loop stops once the
    geometric bound of the remaining blocks is below half a unit.
    """
    if head % q:
        raise ValueError(f"head={head} must be a multiple of q={q}")
    weight_abs = sum(abs(w) for w in weights)
    inner_bits = bits + max(abs(w) for w in weights).bit_length() + len(weights).bit_length()
    log2_r = chi_ratio_log2(q) - math.log2(q)
    r = 2**log2_r
    scale_log2 = math.log2(weight_abs) + math.log2(r / (1 - r)) + math.log2(q)
    acc = FixedSum(inner_bits)
    nu = n + 1
    while True:
        M = q**nu
        size = (M * comb(M + m, m)).bit_length() - 1
        if scale_log2 + inner_bits - size < -1:
            break
        for i, w in enumerate(weights):
            if w == 0:
                continue
            sub = FixedSum(inner_bits)
            for t in range(head):
                x = M + i + t
                sub.add_quotient(q - 1 if t % q == 0 else -1, x * comb(x + m, m))
            periodic_sign_terms(q, m, M + i + head, sub)
            acc.add_fixed(sub.result().scale(w))
        nu += 1
    acc.add_error_units(1)
    return acc.result().rescale(bits)


def _check_base2_range(n: int, m: int) -> None:
    if n < 0 or m < 0 or m > 1 << (n + 1):
        raise RangeError(
            f"base-2 forms need 0 <= m <= 2^(n+1), got n={n}, m={m}", {"n": n, "m": m}
        )


def i_base2_oracle(n: int, m: int, plan: PrecisionPlan) -> HPReal:
    """I_{n,m} = Σ_{ν>n} S_{ν,m}."""
    _check_base2_range(n, m)
    return _residual_series(2, n, m, [1], plan.work_bits + settings.MIN_GUARD_BITS).to_hpreal()


def i_base3_oracle(
    n: int, m: int, plan: PrecisionPlan, block: int = 3, head_blocks: int = 1
) -> HPReal:
    """
    I_{n,m,3} = Σ_{ν>n} Σ_{t≥0} σ_{t,3} R_m(3^ν + t), the first `head_blocks`
    blocks of `block` terms summed directly.
    """
    if block % 3:
        raise ValueError(f"block size must be a multiple of 3, got {block}")
    if n < 0 or m < 0 or m >= 3 ** (n + 1):
        raise RangeError(f"base-3 oracle needs 0 <= m < 3^(n+1), got n={n}, m={m}", {"n": n, "m": m})
    bits = plan.work_bits + settings.MIN_GUARD_BITS
    return _residual_series(3, n, m, [1], bits, head=block * head_blocks).to_hpreal()


def i_damped_oracle(q: int, n: int, m: int, plan: PrecisionPlan) -> HPReal:
    """I_{n,m,q} with the plain (1-x)^m damping, any base the kernel accepts."""
    if n < 0 or m < 0:
        raise RangeError(f"need n, m >= 0, got n={n}, m={m}", {"n": n, "m": m})
    return _residual_series(q, n, m, [1], plan.work_bits + settings.MIN_GUARD_BITS).to_hpreal()


def damping_weights(q: int, m: int) -> List[int]:
    """Coefficients g_i of G_q(x)^m."""
    return list((g_poly(q) ** m).coeffs) or [0]


def i_baseq_oracle(q: int, n: int, m: int, plan: PrecisionPlan) -> HPReal:
    """I'_{n,m,q} = Σ_i g_i Σ_{ν>n} Σ_t σ_t R_m(q^ν + i + t), with G_q^m = Σ g_i x^i."""
    _check_baseq_range(q, n, m)
    bits = plan.work_bits + settings.MIN_GUARD_BITS
    return _residual_series(q, n, m, damping_weights(q, m), bits).to_hpreal()


def _check_baseq_range(q: int, n: int, m: int) -> None:
    if q < 2 or n < 0 or m < 0 or m * (q - 1) > q ** (n + 1):
        raise RangeError(
            f"base-q forms need 0 <= m <= q^(n+1)/(q-1), got q={q}, n={n}, m={m}",
            {"q": q, "n": n, "m": m},
        )


def _check_base3_range(n: int, k: int) -> None:
    if n < 0 or k < 1 or 6 * k >= 3 ** (n + 1):
        raise RangeError(
            f"base-3 forms need k >= 1 and 6k < 3^(n+1), got n={n}, k={k}", {"n": n, "k": k}
        )


def harmonic_block(q: int, n: int) -> Fraction:
    """
    n·H_{q-1} - DS_q(n), with
    DS_q(n) = Σ_{ν=2}^n Σ_{μ=1}^{q^(ν-1)-1} ((q-1)/(qμ) - Σ_{λ=1}^{q-1} 1/(qμ+λ)).
    """
    total = n * sum((Fraction(1, mu) for mu in range(1, q)), Fraction(0))
    for nu in range(2, n + 1):
        for mu in range(1, q ** (nu - 1)):
            total -= Fraction(q - 1, q * mu)
            for lam in range(1, q):
                total += Fraction(1, q * mu + lam)
    return total


def harmonic_block_fixed(q: int, n: int, bits: int) -> FixedPoint:
    acc = FixedSum(bits)
    for mu in range(1, q):
        acc.add_quotient(n, mu)
    for nu in range(2, n + 1):
        for mu in range(1, q ** (nu - 1)):
            acc.add_quotient(-(q - 1), q * mu)
            for lam in range(1, q):
                acc.add_quotient(1, q * mu + lam)
    return acc.result()


def integral_part(q: int, n: int, plan: PrecisionPlan) -> HPReal:
    """n(H_{q-1} - log q) - DS_q(n) = Σ_{ν=1}^n Σ_{t≥0} σ_{t,q}/(q^ν + t)."""
    bits = plan.work_bits + n.bit_length() + settings.MIN_GUARD_BITS
    return (harmonic_block_fixed(q, n, bits) - log_fixed(q, bits).scale(n)).to_hpreal()


@dataclass(frozen=True)
class FormSpec:
    """Integer data of one linear form: γ coefficient and the coefficients of G_q·P."""

    route: FormRoute
    q: int
    n: int
    m: int
    gamma_coeff: int
    coeffs: tuple
    k: Optional[int] = None

    @property
    def l_indices(self) -> List[int]:
        return [l for l in range(1, len(self.coeffs)) if self.coeffs[l]]

    @property
    def magnitude_bits(self) -> int:
        largest = max([abs(self.gamma_coeff)] + [abs(c) for c in self.coeffs])
        return largest.bit_length()


def base2_coeffs(m: int) -> List[int]:
    """ℓ_κ = (-1)^(κ-1)·Σ_{j>κ} C(m,j) for κ = 0..m-1; ℓ_0 = -(2^m - 1)."""
    suffix = 0
    coeffs = [0] * m
    for kappa in range(m - 1, -1, -1):
        suffix += comb(m, kappa + 1)
        coeffs[kappa] = suffix if kappa % 2 else -suffix
    return coeffs


def base2_spec(n: int, m: int) -> FormSpec:
    _check_base2_range(n, m)
    return FormSpec(FormRoute.BASE2, 2, n, m, 1 << m, tuple(base2_coeffs(m)))


def base3_spec(n: int, k: int) -> FormSpec:
    _check_base3_range(n, k)
    return FormSpec(FormRoute.BASE3, 3, n, 6 * k, (-27) ** k, tuple(a_coeffs(k)), k=k)


def baseq_spec(q: int, n: int, m: int) -> FormSpec:
    _check_baseq_range(q, n, m)
    coeffs = tuple(b_coeffs(q, m)) if m else ()
    return FormSpec(FormRoute.BASEQ, q, n, m, q**m, coeffs)


def tail_zero(q: int, n: int) -> Fraction:
    """T_0 = 1/(q^n (q-1))."""
    return Fraction(1, q**n * (q - 1))


def a_part_exact(spec: FormSpec) -> Fraction:
    coeff0 = spec.coeffs[0] if spec.coeffs else 0
    return spec.gamma_coeff * harmonic_block(spec.q, spec.n) - coeff0 * tail_zero(spec.q, spec.n)


def a_part_fixed(spec: FormSpec, bits: int) -> FixedPoint:
    coeff0 = spec.coeffs[0] if spec.coeffs else 0
    inner = bits + spec.magnitude_bits + 2
    value = harmonic_block_fixed(spec.q, spec.n, inner).scale(spec.gamma_coeff)
    value = value - FixedPoint.from_fraction(coeff0 * tail_zero(spec.q, spec.n), inner)
    return value.rescale(bits)


def l_part_fixed(spec: FormSpec, bits: int) -> FixedPoint:
    """L = c·n·log q + Σ_{l≥1} coeff_l·T_l, reduced in ascending l."""
    indices = spec.l_indices
    inner = bits + spec.magnitude_bits + math.ceil(math.log2(len(indices) + 2)) + 2
    acc = FixedSum(inner)
    if spec.n:
        acc.add_fixed(log_fixed(spec.q, inner).scale(spec.gamma_coeff * spec.n))
    tails = tail_sum_table(spec.q, spec.n, indices, inner)
    for l, tail in zip(indices, tails):
        acc.add_fixed(tail.scale(spec.coeffs[l]))
    return acc.result().rescale(bits)


def l_coefficients_integral(spec: FormSpec) -> tuple[int, bool]:
    """d_N·coeff_l/l ∈ ℤ for all l, N the largest index."""
    N = max(len(spec.coeffs) - 1, 1)
    d = lcm_upto(N).value
    return N, all((d * spec.coeffs[l]) % l == 0 for l in spec.l_indices)


def decompose(spec: FormSpec, plan: PrecisionPlan, with_residual: bool = True) -> LinearFormDecomposition:
    """Assemble L, A and (optionally) the residual I for a form."""
    set_base(spec.q)
    bits = _internal_bits(plan, spec.gamma_coeff, terms=len(spec.coeffs) + 2)
    L = l_part_fixed(spec, bits).to_hpreal()

    a_integral: Optional[bool] = None
    if spec.q**spec.n <= settings.EXACT_A_LIMIT:
        A_exact = a_part_exact(spec)
        a_integral = (lcm_upto(spec.q**spec.n).value * A_exact).denominator == 1
        if not a_integral:
            raise IntegralityFailure(
                "d_{q^n}·A is not an integer",
                {"q": spec.q, "n": spec.n, "m": spec.m, "A": str(A_exact)},
            )
        A = A_exact
        A_h = HPReal.exact(A_exact, bits + spec.magnitude_bits + 8)
    else:
        A_h = a_part_fixed(spec, bits).to_hpreal()
        A = A_h

    l_clearing_N, l_integral = l_coefficients_integral(spec)

    I = None
    if with_residual:
        gamma = reference_gamma(bits + spec.gamma_coeff.bit_length())
        I = gamma.mul_exact(spec.gamma_coeff) + L - A_h

    logger.info(
        "Linear form assembled",
        extra={
            "data": {
                "route": spec.route.value,
                "q": spec.q,
                "n": spec.n,
                "m": spec.m,
                "bits": bits,
                "l_terms": len(spec.l_indices),
                "a_exact": isinstance(A, Fraction),
            }
        },
    )
    return LinearFormDecomposition(
        route=spec.route,
        q=spec.q,
        n=spec.n,
        m=spec.m,
        k=spec.k,
        gamma_coeff=spec.gamma_coeff,
        L=L,
        A=A,
        I=I,
        coeff_table=list(spec.coeffs),
        a_integral=a_integral,
        l_clearing_N=l_clearing_N,
        l_coeffs_integral=l_integral,
        work_bits=bits,
    )


@logged_task
def decompose_base2(
    n: int, m: int, plan: PrecisionPlan, with_residual: bool = True
) -> LinearFormDecomposition:
    """
    I_{n,m} = 2^m·γ + L_{n,m} - A_{n,m}.

    Raises:
        RangeError: If m > 2^(n+1).
    """
    return decompose(base2_spec(n, m), plan, with_residual)


@logged_task
def decompose_base3(
    n: int, k: int, plan: PrecisionPlan, with_residual: bool = True
) -> LinearFormDecomposition:
    """
    I_{n,6k,3} = (-27)^k·γ + L_{n,6k,3} - A_{n,6k,3}, with the j = 0 tail
    a_{0,k}/(2·3^n) carried in A.

    Raises:
        RangeError: If 6k >= 3^(n+1).
    """
    return decompose(base3_spec(n, k), plan, with_residual)


@logged_task
def decompose_baseq(
    q: int, n: int, m: int, plan: PrecisionPlan, with_residual: bool = True
) -> LinearFormDecomposition:
    """
    I'_{n,m,q} = q^m·γ + L'_{n,m,q} - A'_{n,m,q}.

    Raises:
        RangeError: If m > q^(n+1)/(q-1).
    """
    return decompose(baseq_spec(q, n, m), plan, with_residual)


def residual_oracle(dec: LinearFormDecomposition, plan: PrecisionPlan) -> HPReal:
    """Independent series value of the residual of `dec`."""
    if dec.route is FormRoute.BASE2:
        return i_base2_oracle(dec.n, dec.m, plan)
    if dec.route is FormRoute.BASE3:
        return i_base3_oracle(dec.n, dec.m, plan)
    return i_baseq_oracle(dec.q, dec.n, dec.m, plan)


def decomposition_record(dec: LinearFormDecomposition, significant: int = 40) -> DecompositionRecord:
    A = dec.A if isinstance(dec.A, HPReal) else HPReal.exact(dec.A, dec.work_bits + 64)
    return DecompositionRecord(
        route=dec.route,
        q=dec.q,
        n=dec.n,
        m=dec.m,
        k=dec.k,
        gamma_coeff=str(dec.gamma_coeff),
        L=format_hpreal(dec.L, significant),
        A=format_hpreal(A, significant),
        I=format_hpreal(dec.I, significant) if dec.I is not None else None,
        a_exact=dec.a_is_exact,
        a_integral=dec.a_integral,
        l_clearing_N=dec.l_clearing_N,
        coeff_table=[str(c) for c in dec.coeff_table],
        work_bits=dec.work_bits,
    )
