"""Exact classical observable algebra on flat phase space R^2n.

Observables are sparse polynomials in the canonical coordinates q1..qn,
p1..pn and a formal grading symbol hbar, with exact rational coefficients.
Nothing in this module ever touches floating point: bracket identities and
quantization-obstruction fingerprints are exact rational statements, and
rounding would blur them.

A monomial is keyed by the exponent tuple

    (a1, ..., an, b1, ..., bn, h)

where ``a`` are the q-exponents, ``b`` the p-exponents and ``h`` the power of
hbar.  Zero coefficients are never stored, so two equal observables have
identical term maps.
"""

from __future__ import annotations

import math
import re
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Sequence

from .errors import DimensionMismatchError, InputError

Exponent = tuple  # (a1..an, b1..bn, h), all nonnegative ints

_COEFF_TYPES = (int, Fraction)


def _as_fraction(value) -> Fraction:
    """Coerce an exact coefficient; floats are rejected, never rounded in."""
    if isinstance(value, bool):
        raise InputError("boolean is not a polynomial coefficient")
    if isinstance(value, _COEFF_TYPES):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise InputError(
        f"coefficients must be exact rationals, got {type(value).__name__}"
    )


class PolyObservable:
    """Immutable sparse polynomial in (q, p, hbar) with rational coefficients."""

    __slots__ = ("num_dof", "_terms", "_hash")

    def __init__(self, num_dof: int, terms: Mapping[Exponent, object] | None = None):
        if not isinstance(num_dof, int) or num_dof < 1:
            raise InputError(f"num_dof must be a positive integer, got {num_dof!r}")
        width = 2 * num_dof + 1
        canonical: dict[Exponent, Fraction] = {}
        for key, raw in (terms or {}).items():
            key = tuple(key)
            if len(key) != width:
                raise InputError(
                    f"exponent tuple {key} has length {len(key)}, expected {width}"
                )
            if any((not isinstance(e, int)) or e < 0 for e in key):
                raise InputError(f"exponents must be nonnegative integers: {key}")
            coeff = _as_fraction(raw)
            if coeff == 0:
                continue
            if key in canonical:
                raise InputError(f"duplicate monomial key {key}")
            canonical[key] = coeff
        object.__setattr__(self, "num_dof", num_dof)
        object.__setattr__(self, "_terms", canonical)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("PolyObservable is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, num_dof: int = 1) -> "PolyObservable":
        return cls(num_dof, {})

    @classmethod
    def one(cls, num_dof: int = 1) -> "PolyObservable":
        return cls.constant(1, num_dof)

    @classmethod
    def constant(cls, value, num_dof: int = 1) -> "PolyObservable":
        return cls(num_dof, {(0,) * (2 * num_dof + 1): _as_fraction(value)})

    @classmethod
    def q(cls, index: int = 1, num_dof: int = 1) -> "PolyObservable":
        """Coordinate q_index (1-based)."""
        return cls.monomial(num_dof, q={index: 1})

    @classmethod
    def p(cls, index: int = 1, num_dof: int = 1) -> "PolyObservable":
        """Momentum p_index (1-based)."""
        return cls.monomial(num_dof, p={index: 1})

    @classmethod
    def hbar(cls, power: int = 1, num_dof: int = 1) -> "PolyObservable":
        return cls.monomial(num_dof, h=power)

    @classmethod
    def monomial(
        cls,
        num_dof: int = 1,
        q: Mapping[int, int] | None = None,
        p: Mapping[int, int] | None = None,
        h: int = 0,
        coeff=1,
    ) -> "PolyObservable":
        """Single term ``coeff * prod q_i^{q[i]} * prod p_i^{p[i]} * hbar^h``."""
        a = [0] * num_dof
        b = [0] * num_dof
        for store, spec in ((a, q or {}), (b, p or {})):
            for idx, power in spec.items():
                if not 1 <= idx <= num_dof:
                    raise InputError(f"coordinate index {idx} outside 1..{num_dof}")
                store[idx - 1] = power
        return cls(num_dof, {tuple(a) + tuple(b) + (h,): coeff})

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_classical(self) -> bool:
        """True when no term carries a power of hbar."""
        return all(key[-1] == 0 for key in self._terms)

    def coefficient(self, key: Exponent) -> Fraction:
        return self._terms.get(tuple(key), Fraction(0))

    def total_degree(self) -> int:
        """Max combined (q, p) degree; hbar does not count. Zero poly -> -1."""
        if not self._terms:
            return -1
        return max(sum(key[:-1]) for key in self._terms)

    def degree_in_p(self) -> int:
        if not self._terms:
            return -1
        n = self.num_dof
        return max(sum(key[n : 2 * n]) for key in self._terms)

    def degree_in_q(self) -> int:
        if not self._terms:
            return -1
        n = self.num_dof
        return max(sum(key[:n]) for key in self._terms)

    def hbar_component(self, power: int) -> "PolyObservable":
        """The coefficient polynomial of hbar^power, reported at grade zero."""
        picked = {
            key[:-1] + (0,): c for key, c in self._terms.items() if key[-1] == power
        }
        return PolyObservable(self.num_dof, picked)

    # -- arithmetic --------------------------------------------------------

    def _check_dim(self, other: "PolyObservable") -> None:
        if self.num_dof != other.num_dof:
            raise DimensionMismatchError(
                f"operands have {self.num_dof} and {other.num_dof} degrees of freedom"
            )

    def __add__(self, other):
        if isinstance(other, _COEFF_TYPES):
            other = PolyObservable.constant(other, self.num_dof)
        if not isinstance(other, PolyObservable):
            return NotImplemented
        self._check_dim(other)
        merged = dict(self._terms)
        for key, c in other._terms.items():
            merged[key] = merged.get(key, Fraction(0)) + c
        return PolyObservable(self.num_dof, merged)

    __radd__ = __add__

    def __neg__(self):
        return PolyObservable(self.num_dof, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, PolyObservable) else -_as_fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, _COEFF_TYPES):
            scale = _as_fraction(other)
            return PolyObservable(
                self.num_dof, {k: c * scale for k, c in self._terms.items()}
            )
        if not isinstance(other, PolyObservable):
            return NotImplemented
        self._check_dim(other)
        prod: dict[Exponent, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key = tuple(e1 + e2 for e1, e2 in zip(k1, k2))
                prod[key] = prod.get(key, Fraction(0)) + c1 * c2
        return PolyObservable(self.num_dof, prod)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise InputError("polynomial powers must be nonnegative integers")
        out = PolyObservable.one(self.num_dof)
        base = self
        e = exponent
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def times_hbar(self, power: int = 1) -> "PolyObservable":
        if power < 0:
            raise InputError("hbar power must be nonnegative")
        return PolyObservable(
            self.num_dof,
            {key[:-1] + (key[-1] + power,): c for key, c in self._terms.items()},
        )

    def diff_q(self, index: int = 1) -> "PolyObservable":
        return self._diff(index - 1)

    def diff_p(self, index: int = 1) -> "PolyObservable":
        return self._diff(self.num_dof + index - 1)

    def _diff(self, slot: int) -> "PolyObservable":
        out: dict[Exponent, Fraction] = {}
        for key, c in self._terms.items():
            e = key[slot]
            if e == 0:
                continue
            new = key[:slot] + (e - 1,) + key[slot + 1 :]
            out[new] = out.get(new, Fraction(0)) + c * e
        return PolyObservable(self.num_dof, out)

    # -- equality / text ----------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, PolyObservable):
            return NotImplemented
        return self.num_dof == other.num_dof and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(
                self, "_hash", hash((self.num_dof, frozenset(self._terms.items())))
            )
        return self._hash

    def __repr__(self):
        return f"PolyObservable({self.num_dof}, {self.to_text()!r})"

    def to_text(self) -> str:
        """Canonical text form, terms in lexicographic exponent order.

        Grammar (whitespace-insensitive, also accepted by :func:`parse_poly`):
        sum of terms ``coeff * q1^a1 * ... * pn^bn * hbar^h`` with rational
        coefficients written ``num`` or ``num/den``; factors with zero
        exponent are omitted, as is ``^1``.
        """
        if not self._terms:
            return "0"
        n = self.num_dof
        pieces = []
        for key in sorted(self._terms):
            coeff = self._terms[key]
            factors = []
            for i in range(n):
                if key[i]:
                    factors.append(f"q{i + 1}" + (f"^{key[i]}" if key[i] > 1 else ""))
            for i in range(n):
                e = key[n + i]
                if e:
                    factors.append(f"p{i + 1}" + (f"^{e}" if e > 1 else ""))
            if key[-1]:
                factors.append(f"hbar" + (f"^{key[-1]}" if key[-1] > 1 else ""))
            term = " * ".join([str(coeff)] + factors)
            pieces.append(term)
        return " + ".join(pieces)


_TOKEN = re.compile(
    r"""(?P<coeff>[+-]?\d+(?:/\d+)?)
      | (?P<var>(?:q|p)\d*|hbar)(?:\^(?P<pow>\d+))?
      | (?P<star>\*)
      | (?P<sign>[+-])
    """,
    re.VERBOSE,
)


def parse_poly(text: str, num_dof: int | None = None) -> PolyObservable:
    """Parse the textual polynomial grammar emitted by ``to_text``.

    Bare ``q``/``p`` are aliases for ``q1``/``p1``.  ``num_dof`` defaults to
    the largest coordinate index mentioned (at least 1).  Whitespace and
    explicit ``*`` separators are both optional.
    """
    stripped = text.strip()
    if not stripped:
        raise InputError("empty polynomial text")

    # Tokenize, splitting into terms at binary +/- positions: a sign token or
    # a signed coefficient that directly follows a variable or coefficient.
    tokens: list[tuple[str, str, str]] = []
    pos = 0
    while pos < len(stripped):
        if stripped[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(stripped, pos)
        if not m:
            raise InputError(f"cannot parse polynomial near {stripped[pos:pos + 12]!r}")
        pos = m.end()
        if m.group("coeff") is not None:
            tokens.append(("coeff", m.group("coeff"), ""))
        elif m.group("var") is not None:
            tokens.append(("var", m.group("var"), m.group("pow") or "1"))
        elif m.group("star") is not None:
            tokens.append(("star", "*", ""))
        else:
            tokens.append(("sign", m.group("sign"), ""))

    max_index = 1
    parsed: list[tuple[Fraction, dict, int]] = []
    coeff = Fraction(1)
    powers: dict[tuple[str, int], int] = {}
    hpow = 0
    saw_content = False
    pending_sign = False
    last_kind = ""

    def flush():
        nonlocal coeff, powers, hpow, saw_content
        if pending_sign and not saw_content:
            raise InputError(f"dangling sign in polynomial text {text!r}")
        if saw_content:
            parsed.append((coeff, powers, hpow))
        coeff, powers, hpow, saw_content = Fraction(1), {}, 0, False

    for kind, value, extra in tokens:
        if kind == "sign":
            if last_kind in ("var", "coeff"):
                flush()
                pending_sign = True
            if value == "-":
                coeff = -coeff
        elif kind == "coeff":
            if value[0] in "+-" and last_kind in ("var", "coeff"):
                flush()
                pending_sign = True
            coeff *= Fraction(value)
            saw_content = True
        elif kind == "var":
            saw_content = True
            power = int(extra)
            if value == "hbar":
                hpow += power
            else:
                letter = value[0]
                idx = int(value[1:]) if len(value) > 1 else 1
                if idx < 1:
                    raise InputError(f"coordinate index must be >= 1 in {value!r}")
                max_index = max(max_index, idx)
                powers[(letter, idx)] = powers.get((letter, idx), 0) + power
        last_kind = kind
    if pending_sign and not saw_content:
        raise InputError(f"dangling sign in polynomial text {text!r}")
    flush()
    if not parsed:
        raise InputError(f"no terms found in polynomial text {text!r}")

    n = num_dof if num_dof is not None else max_index
    if max_index > n:
        raise InputError(f"text references coordinate {max_index} but num_dof={n}")
    result: dict[Exponent, Fraction] = {}
    for coeff, powers, hpow in parsed:
        a = [0] * n
        b = [0] * n
        for (letter, idx), power in powers.items():
            (a if letter == "q" else b)[idx - 1] += power
        key = tuple(a) + tuple(b) + (hpow,)
        result[key] = result.get(key, Fraction(0)) + coeff
    return PolyObservable(n, result)


# ---------------------------------------------------------------------------
# Brackets
# ---------------------------------------------------------------------------


def _require_classical(*polys: PolyObservable) -> None:
    for f in polys:
        if not f.is_classical:
            raise InputError("operation requires classical observables (hbar grade 0)")


def poisson_bracket(f: PolyObservable, g: PolyObservable) -> PolyObservable:
    """Canonical Poisson bracket sum_i (df/dq_i dg/dp_i - df/dp_i dg/dq_i)."""
    f._check_dim(g)
    _require_classical(f, g)
    out = PolyObservable.zero(f.num_dof)
    for i in range(1, f.num_dof + 1):
        out = out + f.diff_q(i) * g.diff_p(i) - f.diff_p(i) * g.diff_q(i)
    return out


def _multi_derivative(f: PolyObservable, alpha: Sequence[int], beta: Sequence[int],
                      cache: dict) -> PolyObservable:
    """d_q^alpha d_p^beta f, memoized per polynomial."""
    key = (tuple(alpha), tuple(beta))
    hit = cache.get(key)
    if hit is not None:
        return hit
    out = f
    for i, e in enumerate(alpha):
        for _ in range(e):
            out = out.diff_q(i + 1)
    for i, e in enumerate(beta):
        for _ in range(e):
            out = out.diff_p(i + 1)
    cache[key] = out
    return out


def _compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _bidifferential_power(f: PolyObservable, g: PolyObservable, m: int,
                          fcache: dict, gcache: dict) -> PolyObservable:
    """m-th power of the Poisson bidifferential applied to (f, g).

    Pi^m(f, g) = sum over multi-indices alpha, beta with |alpha|+|beta| = m of
    m!/(alpha! beta!) (-1)^{|beta|} (d_q^alpha d_p^beta f)(d_p^alpha d_q^beta g).
    """
    n = f.num_dof
    out = PolyObservable.zero(n)
    fact_m = math.factorial(m)
    for asum in range(m + 1):
        bsum = m - asum
        for alpha in _compositions(asum, n):
            for beta in _compositions(bsum, n):
                left = _multi_derivative(f, alpha, beta, fcache)
                if left.is_zero:
                    continue
                right = _multi_derivative(g, beta, alpha, gcache)
                if right.is_zero:
                    continue
                weight = Fraction(
                    fact_m,
                    math.prod(math.factorial(e) for e in alpha)
                    * math.prod(math.factorial(e) for e in beta),
                )
                if bsum % 2:
                    weight = -weight
                out = out + left * right * weight
    return out


def moyal_bracket(f: PolyObservable, g: PolyObservable) -> PolyObservable:
    """Full Moyal bracket of classical polynomials, exact in all hbar orders.

    The series

        {f, g}_M = sum_{k>=0} (-1)^k / ((2k+1)! 4^k) hbar^{2k} Pi^{2k+1}(f, g)

    terminates for polynomials; its hbar^0 part is the Poisson bracket.
    """
    f._check_dim(g)
    _require_classical(f, g)
    max_order = min(f.total_degree(), g.total_degree())
    out = PolyObservable.zero(f.num_dof)
    fcache: dict = {}
    gcache: dict = {}
    k = 0
    while 2 * k + 1 <= max_order:
        m = 2 * k + 1
        term = _bidifferential_power(f, g, m, fcache, gcache)
        if not term.is_zero:
            weight = Fraction((-1) ** k, math.factorial(m) * 4**k)
            out = out + (term * weight).times_hbar(2 * k)
        k += 1
    return out


def is_constant_of_motion(f: PolyObservable, h: PolyObservable) -> bool:
    """True iff the Poisson bracket {f, h} vanishes identically."""
    return poisson_bracket(f, h).is_zero


def in_involution(fs: Sequence[PolyObservable]) -> bool:
    """True iff all pairwise Poisson brackets of the given observables vanish."""
    fs = list(fs)
    if not fs:
        raise InputError("in_involution requires a nonempty list")
    for i, f in enumerate(fs):
        for g in fs[i + 1 :]:
            if not poisson_bracket(f, g).is_zero:
                return False
    return True


# ---------------------------------------------------------------------------
# Subalgebra classification and span membership
# ---------------------------------------------------------------------------


class SubalgebraTag(Enum):
    """Quantizability class of a 1-dof polynomial observable.

    P1 is the Heisenberg span {1, q, p}; P2 the total-degree-<=2 polynomials;
    PINF1 the polynomials at most linear in p; everything else is GENERAL.
    Any P1 member classifies into the smallest applicable tag.
    """

    P1 = "P1"
    P2 = "P2"
    PINF1 = "PInf1"
    GENERAL = "GENERAL"


def classify_subalgebra(f: PolyObservable) -> SubalgebraTag:
    """Smallest of P1 / P2 / PInf1 / GENERAL containing the observable."""
    if f.num_dof != 1:
        raise InputError("subalgebra classification is defined for num_dof=1 only")
    if not f.is_classical:
        raise InputError("classification applies to classical observables")
    if f.total_degree() <= 1:
        return SubalgebraTag.P1
    if f.total_degree() <= 2:
        return SubalgebraTag.P2
    if f.degree_in_p() <= 1:
        return SubalgebraTag.PINF1
    return SubalgebraTag.GENERAL


def in_span(target: PolyObservable, basis: Sequence[PolyObservable]) -> bool:
    """Exact rational span membership via sparse Gaussian elimination."""
    basis = list(basis)
    if not basis:
        raise InputError("span membership requires a nonempty basis")
    for b in basis:
        target._check_dim(b)
    pivots: list[tuple[Exponent, dict]] = []

    def reduce(vec: dict) -> dict:
        vec = dict(vec)
        for pivot_key, pivot_vec in pivots:
            c = vec.get(pivot_key)
            if c:
                scale = c / pivot_vec[pivot_key]
                for k, v in pivot_vec.items():
                    new = vec.get(k, Fraction(0)) - scale * v
                    if new:
                        vec[k] = new
                    else:
                        vec.pop(k, None)
        return vec

    # Insertion order matters: each new pivot vector is already reduced
    # against all earlier pivots, so reducing in that same order never
    # reintroduces an eliminated monomial.
    for b in basis:
        vec = reduce(dict(b.terms))
        if vec:
            pivots.append((min(vec), vec))
    return not reduce(dict(target.terms))


def bracket_closed(basis: Sequence[PolyObservable]) -> bool:
    """True iff every pairwise Poisson bracket lies in the span of the basis."""
    basis = list(basis)
    if not basis:
        raise InputError("bracket_closed requires a nonempty basis")
    for i, f in enumerate(basis):
        for g in basis[i + 1 :]:
            br = poisson_bracket(f, g)
            if br.is_zero:
                continue
            if not in_span(br, basis):
                return False
    return True


# ---------------------------------------------------------------------------
# Randomized observables (testing and self-check support)
# ---------------------------------------------------------------------------


def random_observable(rng, num_dof: int = 1, max_degree: int = 4,
                      n_terms: int = 4) -> PolyObservable:
    """Sparse random classical observable with small rational coefficients.

    ``rng`` is a ``random.Random``; results are reproducible from its seed.
    """
    terms: dict[Exponent, Fraction] = {}
    for _ in range(n_terms):
        total = rng.randint(0, max_degree)
        exps = [0] * (2 * num_dof)
        for _ in range(total):
            exps[rng.randrange(2 * num_dof)] += 1
        coeff = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        key = tuple(exps) + (0,)
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return PolyObservable(num_dof, terms)
