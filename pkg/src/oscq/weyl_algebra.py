"""Exact noncommutative operator algebra for Weyl (symmetric) quantization.

Operators are normal-ordered polynomials in the position operators q1..qn and
the derivative slots d1..dn (d_i = d/dq_i), with every position factor to the
left of every derivative factor.  The momentum operator is p_i = -i hbar d_i,
with hbar kept explicit as a formal grading so that hbar^2-order quantization
defects are visible exactly.

Coefficients are Gaussian rationals (exact rational real and imaginary
parts); together with the hbar power stored in the monomial key they realize
Gaussian-rational polynomials in hbar.  A monomial key is

    (a1, ..., an, b1, ..., bn, h)

for q^a d^b hbar^h.  Re-normal-ordering uses [d_i, q_j] = delta_ij, which is
equivalent to the canonical commutation relation [q_i, p_j] = i hbar delta_ij.
"""

from __future__ import annotations

import math
import re as _re
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Sequence

from .errors import DimensionMismatchError, InputError
from .poly_algebra import PolyObservable, poisson_bracket

# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @staticmethod
    def of(value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, bool):
            raise InputError("boolean is not a coefficient")
        if isinstance(value, (int, Fraction)):
            return GaussianRational(Fraction(value), Fraction(0))
        raise InputError(f"cannot interpret {type(value).__name__} as Gaussian rational")

    def __add__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.of(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.of(other)
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * GaussianRational(other.re / norm, -other.im / norm)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero

    def __repr__(self):
        return f"({self.re}, {self.im})"


GR_ZERO = GaussianRational()
GR_ONE = GaussianRational(Fraction(1), Fraction(0))
GR_I = GaussianRational(Fraction(0), Fraction(1))
GR_MINUS_I = GaussianRational(Fraction(0), Fraction(-1))


def _i_power(k: int) -> GaussianRational:
    return (GR_ONE, GR_I, -GR_ONE, GR_MINUS_I)[k % 4]


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

OpKey = tuple  # (a1..an, b1..bn, h)


class WeylOperator:
    """Immutable normal-ordered operator polynomial with exact coefficients."""

    __slots__ = ("num_dof", "_terms", "_hash")

    def __init__(self, num_dof: int, terms: Mapping[OpKey, object] | None = None):
        if not isinstance(num_dof, int) or num_dof < 1:
            raise InputError(f"num_dof must be a positive integer, got {num_dof!r}")
        width = 2 * num_dof + 1
        canonical: dict[OpKey, GaussianRational] = {}
        for key, raw in (terms or {}).items():
            key = tuple(key)
            if len(key) != width:
                raise InputError(
                    f"monomial key {key} has length {len(key)}, expected {width}"
                )
            if any((not isinstance(e, int)) or e < 0 for e in key):
                raise InputError(f"exponents must be nonnegative integers: {key}")
            coeff = GaussianRational.of(raw)
            if coeff.is_zero:
                continue
            if key in canonical:
                raise InputError(f"duplicate monomial key {key}")
            canonical[key] = coeff
        object.__setattr__(self, "num_dof", num_dof)
        object.__setattr__(self, "_terms", canonical)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("WeylOperator is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, num_dof: int = 1) -> "WeylOperator":
        return cls(num_dof, {})

    @classmethod
    def identity(cls, num_dof: int = 1) -> "WeylOperator":
        return cls(num_dof, {(0,) * (2 * num_dof + 1): GR_ONE})

    @classmethod
    def position(cls, index: int = 1, num_dof: int = 1) -> "WeylOperator":
        key = [0] * (2 * num_dof + 1)
        key[index - 1] = 1
        return cls(num_dof, {tuple(key): GR_ONE})

    @classmethod
    def derivative(cls, index: int = 1, num_dof: int = 1) -> "WeylOperator":
        key = [0] * (2 * num_dof + 1)
        key[num_dof + index - 1] = 1
        return cls(num_dof, {tuple(key): GR_ONE})

    @classmethod
    def momentum(cls, index: int = 1, num_dof: int = 1) -> "WeylOperator":
        """p_i = -i hbar d_i."""
        key = [0] * (2 * num_dof + 1)
        key[num_dof + index - 1] = 1
        key[-1] = 1
        return cls(num_dof, {tuple(key): GR_MINUS_I})

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> Mapping[OpKey, GaussianRational]:
        return MappingProxyType(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def _check_dim(self, other: "WeylOperator") -> None:
        if self.num_dof != other.num_dof:
            raise DimensionMismatchError(
                f"operators have {self.num_dof} and {other.num_dof} degrees of freedom"
            )

    # -- linear structure ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = WeylOperator(
                self.num_dof,
                {(0,) * (2 * self.num_dof + 1): GaussianRational.of(other)},
            )
        if not isinstance(other, WeylOperator):
            return NotImplemented
        self._check_dim(other)
        merged = dict(self._terms)
        for key, c in other._terms.items():
            merged[key] = merged.get(key, GR_ZERO) + c
        return WeylOperator(self.num_dof, merged)

    __radd__ = __add__

    def __neg__(self):
        return WeylOperator(self.num_dof, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, WeylOperator):
            return self + (-other)
        return self + (-GaussianRational.of(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "WeylOperator":
        factor = GaussianRational.of(factor)
        return WeylOperator(self.num_dof, {k: c * factor for k, c in self._terms.items()})

    def times_hbar(self, power: int = 1) -> "WeylOperator":
        if power < 0:
            raise InputError("hbar power must be nonnegative")
        return WeylOperator(
            self.num_dof,
            {key[:-1] + (key[-1] + power,): c for key, c in self._terms.items()},
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if isinstance(other, WeylOperator):
            return op_mul(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, WeylOperator):
            return NotImplemented
        return self.num_dof == other.num_dof and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(
                self, "_hash", hash((self.num_dof, frozenset(self._terms.items())))
            )
        return self._hash

    def __repr__(self):
        return f"WeylOperator({self.num_dof}, {self.to_text()!r})"

    def to_text(self) -> str:
        """Canonical text: terms ``(re, im) * q1^a * d1^b * hbar^h``."""
        if not self._terms:
            return "0"
        n = self.num_dof
        pieces = []
        for key in sorted(self._terms):
            c = self._terms[key]
            factors = [f"({c.re}, {c.im})"]
            for i in range(n):
                if key[i]:
                    factors.append(f"q{i + 1}" + (f"^{key[i]}" if key[i] > 1 else ""))
            for i in range(n):
                e = key[n + i]
                if e:
                    factors.append(f"d{i + 1}" + (f"^{e}" if e > 1 else ""))
            if key[-1]:
                factors.append("hbar" + (f"^{key[-1]}" if key[-1] > 1 else ""))
            pieces.append(" * ".join(factors))
        return " + ".join(pieces)


_OP_TERM = _re.compile(
    r"""\(\s*(?P<re>[+-]?\d+(?:/\d+)?)\s*,\s*(?P<im>[+-]?\d+(?:/\d+)?)\s*\)
        (?P<factors>(?:\s*\*?\s*(?:q|d)\d+(?:\^\d+)?|\s*\*?\s*hbar(?:\^\d+)?)*)
    """,
    _re.VERBOSE,
)
_OP_FACTOR = _re.compile(r"(?P<name>(?:q|d)\d+|hbar)(?:\^(?P<pow>\d+))?")


def parse_operator(text: str, num_dof: int | None = None) -> WeylOperator:
    """Parse the operator text grammar emitted by ``WeylOperator.to_text``."""
    stripped = text.strip()
    if stripped == "0":
        return WeylOperator.zero(num_dof or 1)
    entries = []
    pos = 0
    max_index = 1
    while pos < len(stripped):
        ch = stripped[pos]
        if ch.isspace() or ch == "+":
            pos += 1
            continue
        m = _OP_TERM.match(stripped, pos)
        if not m:
            raise InputError(f"cannot parse operator near {stripped[pos:pos + 16]!r}")
        pos = m.end()
        coeff = GaussianRational(Fraction(m.group("re")), Fraction(m.group("im")))
        powers: dict[tuple[str, int], int] = {}
        hpow = 0
        for fm in _OP_FACTOR.finditer(m.group("factors")):
            power = int(fm.group("pow") or 1)
            name = fm.group("name")
            if name == "hbar":
                hpow += power
                continue
            letter, idx = name[0], int(name[1:])
            max_index = max(max_index, idx)
            powers[(letter, idx)] = powers.get((letter, idx), 0) + power
        entries.append((coeff, powers, hpow))
    if not entries:
        raise InputError(f"no terms found in operator text {text!r}")
    n = num_dof if num_dof is not None else max_index
    if max_index > n:
        raise InputError(f"text references coordinate {max_index} but num_dof={n}")
    terms: dict[OpKey, GaussianRational] = {}
    for coeff, powers, hpow in entries:
        a = [0] * n
        b = [0] * n
        for (letter, idx), power in powers.items():
            (a if letter == "q" else b)[idx - 1] += power
        key = tuple(a) + tuple(b) + (hpow,)
        terms[key] = terms.get(key, GR_ZERO) + coeff
    return WeylOperator(n, terms)


# ---------------------------------------------------------------------------
# Product and commutator
# ---------------------------------------------------------------------------


def op_mul(a: WeylOperator, b: WeylOperator) -> WeylOperator:
    """Associative operator product with exact re-normal-ordering.

    Per coordinate, d^s q^t = sum_k k! C(s,k) C(t,k) q^{t-k} d^{s-k}; different
    coordinates commute.
    """
    a._check_dim(b)
    n = a.num_dof
    out: dict[OpKey, GaussianRational] = {}
    for k1, c1 in a._terms.items():
        for k2, c2 in b._terms.items():
            base = c1 * c2
            h = k1[-1] + k2[-1]
            # Expand the per-coordinate commutations as a cross product of
            # the swap counts k_i <= min(d-power of a, q-power of b).
            ranges = [range(min(k1[n + i], k2[i]) + 1) for i in range(n)]
            for swaps in _cartesian(ranges):
                weight = 1
                qexp = []
                dexp = []
                for i, k in enumerate(swaps):
                    s, t = k1[n + i], k2[i]
                    weight *= math.factorial(k) * math.comb(s, k) * math.comb(t, k)
                    qexp.append(k1[i] + t - k)
                    dexp.append(s - k + k2[n + i])
                key = tuple(qexp) + tuple(dexp) + (h,)
                out[key] = out.get(key, GR_ZERO) + base * weight
    return WeylOperator(n, out)


def _cartesian(ranges):
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _cartesian(ranges[1:]):
            yield (head,) + tail


def commutator(a: WeylOperator, b: WeylOperator) -> WeylOperator:
    """AB - BA, exact."""
    return op_mul(a, b) - op_mul(b, a)


def over_i_hbar(a: WeylOperator) -> WeylOperator:
    """Multiply by 1/(i hbar); every term must carry a power of hbar.

    This is the scaling of the Dirac bracket condition in the convention
    [q, p] = i hbar fixed by p = -i hbar d: the condition reads
    W({f, g}) = [W(f), W(g)] / (i hbar), and the scaled commutator of two
    quantized classical observables is again hbar-graded with nonnegative
    powers (the hbar^0 component of a commutator always cancels).
    """
    out: dict[OpKey, GaussianRational] = {}
    for key, c in a._terms.items():
        if key[-1] < 1:
            raise InputError(
                "operator has an hbar^0 term; 1/(i hbar)-scaling is undefined"
            )
        out[key[:-1] + (key[-1] - 1,)] = c * GR_MINUS_I
    return WeylOperator(a.num_dof, out)


# ---------------------------------------------------------------------------
# Weyl quantization and its inverse
# ---------------------------------------------------------------------------


def _mccoy_single(m: int, n: int) -> dict[tuple[int, int, int], GaussianRational]:
    """Normal-ordered symmetrization S(q^m p^n) for one coordinate.

    McCoy's formula S(q^m p^n) = 2^-n sum_r C(n,r) p^r q^m p^{n-r}, with
    p = -i hbar d and d^r q^m = sum_k k! C(r,k) C(m,k) q^{m-k} d^{r-k}.
    Keys are (q-power, d-power, hbar-power).
    """
    out: dict[tuple[int, int, int], GaussianRational] = {}
    prefactor = _i_power(3 * n)  # (-i)^n
    for r in range(n + 1):
        c_r = Fraction(math.comb(n, r), 2**n)
        for k in range(min(r, m) + 1):
            weight = math.factorial(k) * math.comb(r, k) * math.comb(m, k)
            key = (m - k, n - k, n)
            coeff = prefactor * (c_r * weight)
            out[key] = out.get(key, GR_ZERO) + coeff
    return {k: c for k, c in out.items() if not c.is_zero}


def weyl_quantize(f: PolyObservable) -> WeylOperator:
    """Symmetric (Weyl) quantization of a classical polynomial observable.

    Linear; W(1) = I, W(q) = q, W(p) = -i hbar d.  Monomials are fully
    symmetrized over operator orderings and then normal-ordered, coordinate
    by coordinate (cross-coordinate factors commute).
    """
    if not f.is_classical:
        raise InputError("weyl_quantize requires a classical observable (hbar^0)")
    return _quantize_terms(f)


def weyl_quantize_graded(f: PolyObservable) -> WeylOperator:
    """Extension of ``weyl_quantize`` to hbar-graded polynomials by linearity:
    W(hbar^k f) = hbar^k W(f).  This is the inverse of ``weyl_symbol``.
    """
    return _quantize_terms(f)


def _quantize_terms(f: PolyObservable) -> WeylOperator:
    n = f.num_dof
    out = WeylOperator.zero(n)
    for key, coeff in f.terms.items():
        factors = [_mccoy_single(key[i], key[n + i]) for i in range(n)]
        # Outer product over coordinates: exponents concatenate, hbar adds.
        combined = {((), (), key[-1]): GaussianRational.of(coeff)}
        for single in factors:
            nxt: dict = {}
            for (qs, ds, h), c in combined.items():
                for (a, b, hh), cc in single.items():
                    k2 = (qs + (a,), ds + (b,), h + hh)
                    prev = nxt.get(k2, GR_ZERO)
                    nxt[k2] = prev + c * cc
            combined = nxt
        terms = {qs + ds + (h,): c for (qs, ds, h), c in combined.items()}
        out = out + WeylOperator(n, terms)
    return out


@dataclass(frozen=True)
class OperatorSymbol:
    """Weyl symbol split into real and imaginary polynomial parts."""

    re: PolyObservable
    im: PolyObservable

    @property
    def is_real(self) -> bool:
        return self.im.is_zero

    def as_classical_poly(self) -> PolyObservable:
        if not self.is_real:
            raise InputError("symbol has a nonzero imaginary part")
        return self.re

    def quantize(self) -> WeylOperator:
        return weyl_quantize_graded(self.re) + weyl_quantize_graded(self.im).scale(GR_I)


def weyl_symbol(a: WeylOperator) -> OperatorSymbol:
    """The unique hbar-graded polynomial whose Weyl quantization is ``a``.

    Peels the operator from the top total degree down: the leading normal-
    ordered term of W(q^a p^b) is (-i hbar)^b q^a d^b, so each top term maps
    back to a symbol monomial, whose re-quantization is subtracted exactly.
    Operators whose symbol would need a negative hbar power (only reachable
    by hand-building bare derivative terms) are rejected.
    """
    n = a.num_dof
    remaining = dict(a._terms)
    sym_re: PolyObservable = PolyObservable.zero(n)
    sym_im: PolyObservable = PolyObservable.zero(n)
    while remaining:
        top_degree = max(sum(k[: 2 * n]) for k in remaining)
        batch_re: dict = {}
        batch_im: dict = {}
        for key, c in list(remaining.items()):
            if sum(key[: 2 * n]) != top_degree:
                continue
            btot = sum(key[n : 2 * n])
            if key[-1] < btot:
                raise InputError(
                    "operator term carries fewer hbar powers than derivative "
                    "slots; no polynomial symbol with nonnegative hbar grade"
                )
            coeff = c * _i_power(btot)  # divide by (-i)^b
            skey = key[:-1] + (key[-1] - btot,)
            if coeff.re:
                batch_re[skey] = batch_re.get(skey, Fraction(0)) + coeff.re
            if coeff.im:
                batch_im[skey] = batch_im.get(skey, Fraction(0)) + coeff.im
        batch_re_poly = PolyObservable(n, batch_re)
        batch_im_poly = PolyObservable(n, batch_im)
        sym_re = sym_re + batch_re_poly
        sym_im = sym_im + batch_im_poly
        reproduced = weyl_quantize_graded(batch_re_poly) + weyl_quantize_graded(
            batch_im_poly
        ).scale(GR_I)
        for key, c in reproduced._terms.items():
            left = remaining.get(key, GR_ZERO) - c
            if left.is_zero:
                remaining.pop(key, None)
            else:
                remaining[key] = left
    return OperatorSymbol(sym_re, sym_im)


# ---------------------------------------------------------------------------
# Dirac condition and the Groenewold-van Hove contradiction
# ---------------------------------------------------------------------------


def dirac_defect(f: PolyObservable, g: PolyObservable) -> WeylOperator:
    """[W(f), W(g)]/(i hbar) - W({f, g}); zero exactly when the Dirac
    condition holds for the pair under Weyl quantization."""
    f._check_dim(g)
    comm = commutator(weyl_quantize(f), weyl_quantize(g))
    return over_i_hbar(comm) - weyl_quantize(poisson_bracket(f, g))


@dataclass(frozen=True)
class GvhReport:
    """Two operator values forced for the quantization of q^2 p^2, and their
    nonzero difference: the Groenewold-van Hove contradiction witness."""

    candidate_a: WeylOperator
    candidate_b: WeylOperator
    difference: WeylOperator
    difference_symbol: PolyObservable
    bracket_q3_p3: PolyObservable
    bracket_q2p_qp2: PolyObservable
    ordering: str = "weyl-symmetric"

    def to_jsonable(self) -> dict:
        return {
            "candidate_a": self.candidate_a.to_text(),
            "candidate_b": self.candidate_b.to_text(),
            "difference": self.difference.to_text(),
            "difference_symbol": self.difference_symbol.to_text(),
            "bracket_q3_p3": self.bracket_q3_p3.to_text(),
            "bracket_q2p_qp2": self.bracket_q2p_qp2.to_text(),
            "ordering": self.ordering,
        }


def gvh_contradiction() -> GvhReport:
    """Force two values for the quantization of q^2 p^2 via the Dirac
    condition and exhibit their hbar^2 disagreement.

    Uses {q^3, p^3} = 9 q^2 p^2 and {q^2 p, q p^2} = 3 q^2 p^2 (both verified
    with the exact Poisson bracket before use):

        candidate_a = (1/9) [W(q^3), W(p^3)] / (i hbar)
        candidate_b = (1/3) [W(q^2 p), W(q p^2)] / (i hbar)

    The difference is a nonzero rational multiple of hbar^2 * I.
    """
    q = PolyObservable.q()
    p = PolyObservable.p()
    q2p2 = q**2 * p**2

    br_a = poisson_bracket(q**3, p**3)
    br_b = poisson_bracket(q**2 * p, q * p**2)
    if br_a != q2p2 * 9 or br_b != q2p2 * 3:
        raise InputError("canonical bracket identities failed; exact algebra broken")

    cand_a = over_i_hbar(commutator(weyl_quantize(q**3), weyl_quantize(p**3))).scale(
        Fraction(1, 9)
    )
    cand_b = over_i_hbar(
        commutator(weyl_quantize(q**2 * p), weyl_quantize(q * p**2))
    ).scale(Fraction(1, 3))
    diff = cand_a - cand_b
    symbol = weyl_symbol(diff)
    return GvhReport(
        candidate_a=cand_a,
        candidate_b=cand_b,
        difference=diff,
        difference_symbol=symbol.as_classical_poly(),
        bracket_q3_p3=br_a,
        bracket_q2p_qp2=br_b,
    )


# ---------------------------------------------------------------------------
# Full-quantization condition checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionResult:
    name: str
    status: str  # "pass" | "fail" | "assumed"
    detail: str

    def to_jsonable(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


@dataclass(frozen=True)
class QuantizationConditionsReport:
    conditions: tuple[ConditionResult, ...]
    ordering: str = "weyl-symmetric"

    @property
    def testable_pass(self) -> bool:
        return all(c.status == "pass" for c in self.conditions if c.status != "assumed")

    def to_jsonable(self) -> dict:
        return {
            "conditions": [c.to_jsonable() for c in self.conditions],
            "testable_pass": self.testable_pass,
            "ordering": self.ordering,
        }


def verify_quantization_conditions(
    basis: Sequence[PolyObservable], rng=None, samples: int = 12
) -> QuantizationConditionsReport:
    """Check the full-quantization conditions on the span of ``basis``.

    Additivity and real homogeneity are exercised on random rational linear
    combinations, the bracket condition pairwise via ``dirac_defect``, and
    unit preservation on the constant.  Irreducibility has no finite
    computational test and is reported as assumed, never verified.
    """
    basis = list(basis)
    if not basis:
        raise InputError("verify_quantization_conditions requires a nonempty basis")
    for b in basis:
        basis[0]._check_dim(b)
    n = basis[0].num_dof
    if rng is None:
        import random

        rng = random.Random(0)

    def combo():
        out = PolyObservable.zero(n)
        for b in basis:
            out = out + b * Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        return out

    failures_1 = []
    failures_2 = []
    for _ in range(samples):
        f, g = combo(), combo()
        if weyl_quantize(f + g) != weyl_quantize(f) + weyl_quantize(g):
            failures_1.append((f, g))
        lam = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        if weyl_quantize(f * lam) != weyl_quantize(f).scale(lam):
            failures_2.append((f, lam))

    failures_3 = []
    for i, f in enumerate(basis):
        for g in basis[i + 1 :]:
            defect = dirac_defect(f, g)
            if not defect.is_zero:
                failures_3.append((f, g, defect))

    one_ok = weyl_quantize(PolyObservable.one(n)) == WeylOperator.identity(n)

    conditions = (
        ConditionResult(
            "additivity",
            "pass" if not failures_1 else "fail",
            f"{samples} random pairs from the span",
        ),
        ConditionResult(
            "real homogeneity",
            "pass" if not failures_2 else "fail",
            f"{samples} random rational scalings",
        ),
        ConditionResult(
            "bracket condition",
            "pass" if not failures_3 else "fail",
            (
                "dirac_defect = 0 for all basis pairs"
                if not failures_3
                else "nonzero defect on: "
                + "; ".join(
                    f"({f.to_text()}, {g.to_text()}) -> {d.to_text()}"
                    for f, g, d in failures_3[:4]
                )
            ),
        ),
        ConditionResult(
            "unit preservation",
            "pass" if one_ok else "fail",
            "W(1) == I" if one_ok else "W(1) != I",
        ),
        ConditionResult(
            "irreducibility",
            "assumed",
            "no finite computational test; Schrodinger representation assumed",
        ),
    )
    return QuantizationConditionsReport(conditions)
