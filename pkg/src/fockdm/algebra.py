"""Normal-ordered operator algebra over n bosonic modes.

An operator is a finite sum of words ``C * (adag)^create * (a)^annih`` with
all creation factors to the left of all annihilation factors; ``create`` and
``annih`` are per-mode exponent tuples.  Products are rewritten back into
this form with the commutation rule a adag = adag a + 1, one mode at a time:

    a^r adag^l = sum_k k! C(r,k) C(l,k) adag^(l-k) a^(r-k)

Coefficients are complex doubles; after every operation words whose
coefficient magnitude falls below ``poly.DROP_TOL`` are dropped, so exact
identities cancel to the empty operator.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping

from .poly import DROP_TOL, MultiIndex, PolyExpr

WordKey = tuple[MultiIndex, MultiIndex]


class NormalFormOperator:
    """Canonical sum of normal-ordered words, merged by (create, annih)."""

    __slots__ = ("modes", "words")

    def __init__(self, modes: int, words: Mapping[WordKey, complex] | None = None):
        if modes < 1:
            raise ValueError("modes must be >= 1")
        clean: dict[WordKey, complex] = {}
        if words:
            for (create, annih), coeff in words.items():
                if len(create) != modes or len(annih) != modes:
                    raise ValueError(f"word {(create, annih)} does not match "
                                     f"{modes} modes")
                c = complex(coeff)
                if abs(c) > DROP_TOL:
                    key = (tuple(create), tuple(annih))
                    clean[key] = clean.get(key, 0.0) + c
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "words",
                           {k: v for k, v in clean.items() if abs(v) > DROP_TOL})

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("NormalFormOperator is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, modes: int = 1) -> "NormalFormOperator":
        return cls(modes, {})

    @classmethod
    def identity(cls, modes: int = 1) -> "NormalFormOperator":
        e = (0,) * modes
        return cls(modes, {(e, e): 1.0})

    @classmethod
    def annihilation(cls, mode: int = 0, modes: int = 1) -> "NormalFormOperator":
        e = (0,) * modes
        r = tuple(1 if j == mode else 0 for j in range(modes))
        return cls(modes, {(e, r): 1.0})

    @classmethod
    def creation(cls, mode: int = 0, modes: int = 1) -> "NormalFormOperator":
        e = (0,) * modes
        c = tuple(1 if j == mode else 0 for j in range(modes))
        return cls(modes, {(c, e): 1.0})

    @classmethod
    def word(cls, coeff: complex, create: Iterable[int],
             annih: Iterable[int]) -> "NormalFormOperator":
        create = tuple(create)
        annih = tuple(annih)
        return cls(len(create), {(create, annih): coeff})

    # -- queries ---------------------------------------------------------------

    def is_zero(self, tol: float = DROP_TOL) -> bool:
        return all(abs(c) <= tol for c in self.words.values())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.words.values()), default=0.0)

    def per_mode_degrees(self) -> list[tuple[int, int]]:
        """Per mode, the maximal creation and annihilation exponents."""
        out = [(0, 0)] * self.modes
        for create, annih in self.words:
            out = [(max(c0, c), max(r0, r))
                   for (c0, r0), c, r in zip(out, create, annih)]
        return out

    def max_word_degree(self) -> int:
        return max((sum(c) + sum(r) for c, r in self.words), default=0)

    def max_mode_degree(self) -> int:
        """Largest create+annih exponent any single mode carries in a word."""
        return max((max(c + r for c, r in zip(create, annih))
                    for create, annih in self.words), default=0)

    def approx_eq(self, other: "NormalFormOperator", tol: float = 1e-12) -> bool:
        return (self - other).max_abs_coeff() <= tol

    def __eq__(self, other):
        if not isinstance(other, NormalFormOperator):
            return NotImplemented
        return self.modes == other.modes and self.words == other.words

    def __hash__(self):
        return hash((self.modes, tuple(sorted(self.words.items()))))

    # -- algebra -----------------------------------------------------------------

    def __add__(self, other: "NormalFormOperator") -> "NormalFormOperator":
        self._check(other)
        words = dict(self.words)
        for key, c in other.words.items():
            words[key] = words.get(key, 0.0) + c
        return NormalFormOperator(self.modes, words)

    def __sub__(self, other: "NormalFormOperator") -> "NormalFormOperator":
        return self + (-other)

    def __neg__(self) -> "NormalFormOperator":
        return NormalFormOperator(self.modes,
                                  {k: -v for k, v in self.words.items()})

    def scale(self, factor: complex) -> "NormalFormOperator":
        return NormalFormOperator(self.modes,
                                  {k: factor * v for k, v in self.words.items()})

    def __mul__(self, other):
        if isinstance(other, NormalFormOperator):
            return normal_order_product(self, other)
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def adjoint(self) -> "NormalFormOperator":
        """Hermitian conjugate; swaps creation and annihilation words."""
        return NormalFormOperator(
            self.modes,
            {(annih, create): coeff.conjugate()
             for (create, annih), coeff in self.words.items()})

    def power(self, n: int) -> "NormalFormOperator":
        if n < 0:
            raise ValueError("operator powers must be nonnegative")
        out = NormalFormOperator.identity(self.modes)
        for _ in range(n):
            out = normal_order_product(out, self)
        return out

    def _check(self, other: "NormalFormOperator"):
        if self.modes != other.modes:
            raise ValueError("mode count mismatch")

    # -- presentation ---------------------------------------------------------

    def __repr__(self) -> str:
        if not self.words:
            return "0"
        bits = []
        for (create, annih) in sorted(self.words):
            c = self.words[(create, annih)]
            factors = []
            for j, e in enumerate(create):
                if e:
                    factors.append(f"ad{j + 1}" + (f"^{e}" if e > 1 else ""))
            for j, e in enumerate(annih):
                if e:
                    factors.append(f"a{j + 1}" + (f"^{e}" if e > 1 else ""))
            body = " ".join(factors) if factors else "1"
            bits.append(f"({c:.6g})*{body}")
        return " + ".join(bits)

    def to_json(self) -> list[dict]:
        return [{"re": c.real, "im": c.imag,
                 "create": list(create), "annih": list(annih)}
                for (create, annih), c in sorted(self.words.items())]

    @classmethod
    def from_json(cls, obj: list | str, modes: int | None = None) -> "NormalFormOperator":
        if isinstance(obj, str):
            obj = json.loads(obj)
        words = {(tuple(w["create"]), tuple(w["annih"])): complex(w["re"], w["im"])
                 for w in obj}
        if modes is None:
            if not words:
                raise ValueError("mode count required for an empty word list")
            modes = len(next(iter(words))[0])
        return cls(modes, words)


def _reorder_single_mode(r: int, l: int) -> list[tuple[int, int, int]]:
    """Rewrite a^r adag^l as sum of k!*C(r,k)*C(l,k) adag^(l-k) a^(r-k)."""
    out = []
    for k in range(min(r, l) + 1):
        w = math.factorial(k) * math.comb(r, k) * math.comb(l, k)
        out.append((w, l - k, r - k))
    return out


def normal_order_product(u: NormalFormOperator,
                         v: NormalFormOperator) -> NormalFormOperator:
    """True operator product u v, rewritten into normal-ordered words."""
    u._check(v)
    n = u.modes
    words: dict[WordKey, complex] = {}
    for (c1, r1), a1 in u.words.items():
        for (c2, r2), a2 in v.words.items():
            # per-mode reordering of the inner block a^r1 adag^c2
            options = [_reorder_single_mode(r1[j], c2[j]) for j in range(n)]
            stack = [((), (), a1 * a2)]
            for j, opts in enumerate(options):
                stack = [
                    (create + (c1[j] + lm,), annih + (rm + r2[j],), coeff * w)
                    for create, annih, coeff in stack
                    for (w, lm, rm) in opts
                ]
            for create, annih, coeff in stack:
                key = (create, annih)
                words[key] = words.get(key, 0.0) + coeff
    return NormalFormOperator(n, words)


def commutator(a: NormalFormOperator,
               b: NormalFormOperator) -> NormalFormOperator:
    """AB - BA in normal form."""
    return normal_order_product(a, b) - normal_order_product(b, a)


def poly_to_normal_form(p: PolyExpr) -> NormalFormOperator:
    """Map a polynomial to its normal-product field operator.

    Each zy-chart monomial z^n y^m becomes the word (adag)^m a^n with the
    same coefficient; no reordering constants are introduced, so quadratic
    energies carry no zero-point term.  phipi-chart input is converted first.
    """
    zp = p.to_zy() if p.chart == "phipi" else p
    n = zp.modes
    if n == 0:
        raise ValueError("a field operator needs at least one mode")
    words: dict[WordKey, complex] = {}
    for exps, coeff in zp.terms.items():
        zpart, ypart = exps[:n], exps[n:]
        words[(ypart, zpart)] = words.get((ypart, zpart), 0.0) + coeff
    return NormalFormOperator(n, words)


def hermitian_pair_check(op: NormalFormOperator,
                         tol: float = 1e-12) -> tuple[bool, dict[WordKey, WordKey]]:
    """Check that words pair off under Hermitian conjugation.

    Returns (ok, pairing) where pairing maps every word key to its conjugate
    partner (itself for self-conjugate words).  ok is True iff each word
    (create, annih) has the partner (annih, create) present with the complex
    conjugate coefficient, which makes the operator Hermitian.
    """
    pairing: dict[WordKey, WordKey] = {}
    ok = True
    for (create, annih), coeff in op.words.items():
        partner = (annih, create)
        mate = op.words.get(partner)
        if mate is None or abs(mate - coeff.conjugate()) > tol * max(1.0, abs(coeff)):
            ok = False
            continue
        pairing[(create, annih)] = partner
    return ok, pairing


def nested_commutator_order(op: NormalFormOperator, mode: int) -> tuple[int, int]:
    """Maximal creation/annihilation word degrees in one mode.

    Repeated commutators with a_j (resp. adag_j) vanish after
    ``annih degree + 1`` (resp. ``create degree + 1``) steps, so the
    closed-form discrepancy machinery applies when both values are <= 3.
    """
    if not 0 <= mode < op.modes:
        raise ValueError("mode out of range")
    cmax = rmax = 0
    for create, annih in op.words:
        cmax = max(cmax, create[mode])
        rmax = max(rmax, annih[mode])
    return cmax, rmax


def low_order_gate(op: NormalFormOperator, cap: int = 3) -> bool:
    """True when every mode has creation and annihilation degrees <= cap."""
    return all(c <= cap and r <= cap
               for c, r in (nested_commutator_order(op, j)
                            for j in range(op.modes)))


def random_normal_operator(rng, modes: int = 1, degree: int = 3,
                           words: int = 4, hermitian: bool = True,
                           dyadic: bool = True) -> NormalFormOperator:
    """Random operator for identity sweeps.

    Dyadic coefficients (multiples of 1/4) keep all the integer-weight
    commutator identities exact in double precision, so symbolic residuals
    cancel to the empty operator rather than to float dust.
    """
    out: dict[WordKey, complex] = {}
    for _ in range(words):
        create = [0] * modes
        annih = [0] * modes
        for j in range(modes):
            create[j] = int(rng.integers(0, degree + 1))
            annih[j] = int(rng.integers(0, degree + 1))
        key = (tuple(create), tuple(annih))
        if dyadic:
            coeff = complex(int(rng.integers(-8, 9)), int(rng.integers(-8, 9))) / 4
        else:
            coeff = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        if not coeff:
            continue
        out[key] = out.get(key, 0.0) + coeff
        if hermitian:
            mate = (key[1], key[0])
            out[mate] = out.get(mate, 0.0) + coeff.conjugate()
    if not out:
        e = (0,) * modes
        one = tuple(1 if j == 0 else 0 for j in range(modes))
        out = {(one, one): 1.0}
    return NormalFormOperator(modes, out)
