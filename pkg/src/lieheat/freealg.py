"""Exact arithmetic in the free associative algebra on n generators.

Series are truncated at a fixed total degree and stored sparsely: one dict
per homogeneous degree, mapping words (tuples of 0-based generator indices)
to rational coefficients.  Zero coefficients are never stored, so equality
is structural equality.  All arithmetic is exact; floats are rejected.

Coefficients are gmpy2.mpq when available (much faster), plain Fraction
otherwise.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Mapping

try:
    from gmpy2 import mpq as _RAT
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _RAT = Fraction

MAX_DEGREE = 8

_ZERO = _RAT(0)
_ONE = _RAT(1)


class FreeAlgebraError(ValueError):
    pass


class ShapeMismatchError(FreeAlgebraError):
    """Operands have different ngens or dmax."""


class ConstantTermError(FreeAlgebraError):
    """Constant term violates the precondition of exp/log/dynkin."""


def rational(num, den=None):
    """Coerce to the exact coefficient type.  Floats are rejected."""
    if den is not None:
        return _RAT(int(num), int(den))
    if isinstance(num, float):
        raise FreeAlgebraError("floating point is not allowed in the free algebra")
    if isinstance(num, str):
        return _RAT(Fraction(num))
    if isinstance(num, Fraction):
        return _RAT(num.numerator, num.denominator)
    return _RAT(num)


def _check_word(word, ngens, dmax):
    if len(word) > dmax:
        raise FreeAlgebraError(f"word {word} exceeds truncation degree {dmax}")
    for g in word:
        if not 0 <= g < ngens:
            raise FreeAlgebraError(f"generator index {g} out of range for ngens={ngens}")


class FreeSeries:
    """A truncated noncommutative power series with exact rational coefficients."""

    __slots__ = ("ngens", "dmax", "_levels")

    def __init__(self, ngens: int, dmax: int, terms: Mapping[tuple, object] | None = None):
        if ngens < 1:
            raise FreeAlgebraError("need at least one generator")
        if not 0 <= dmax <= MAX_DEGREE:
            raise FreeAlgebraError(f"dmax must be in [0, {MAX_DEGREE}]")
        self.ngens = ngens
        self.dmax = dmax
        self._levels = [dict() for _ in range(dmax + 1)]
        if terms:
            for word, coeff in terms.items():
                word = tuple(word)
                _check_word(word, ngens, dmax)
                c = rational(coeff)
                if c:
                    lvl = self._levels[len(word)]
                    acc = lvl.get(word, _ZERO) + c
                    if acc:
                        lvl[word] = acc
                    else:
                        lvl.pop(word, None)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, ngens, dmax):
        return cls(ngens, dmax)

    @classmethod
    def one(cls, ngens, dmax):
        s = cls(ngens, dmax)
        s._levels[0][()] = _ONE
        return s

    @classmethod
    def generator(cls, i, ngens, dmax):
        s = cls(ngens, dmax)
        _check_word((i,), ngens, dmax)
        s._levels[1][(i,)] = _ONE
        return s

    @classmethod
    def _raw(cls, ngens, dmax, levels):
        s = cls(ngens, dmax)
        s._levels = levels
        return s

    def _blank(self):
        return [dict() for _ in range(self.dmax + 1)]

    # -- basic queries -----------------------------------------------------

    def coeff(self, word):
        word = tuple(word)
        if len(word) > self.dmax:
            return _ZERO
        return self._levels[len(word)].get(word, _ZERO)

    def is_zero(self):
        return not any(self._levels)

    def degree_part(self, n):
        """The homogeneous degree-n component, as a series of the same shape."""
        out = self._blank()
        if 0 <= n <= self.dmax:
            out[n] = dict(self._levels[n])
        return FreeSeries._raw(self.ngens, self.dmax, out)

    def min_degree(self):
        """Smallest degree carrying a term, or None for the zero series."""
        for d, lvl in enumerate(self._levels):
            if lvl:
                return d
        return None

    def terms(self):
        """Iterate (word, coeff) by increasing degree, words sorted."""
        for lvl in self._levels:
            for word in sorted(lvl):
                yield word, lvl[word]

    def nterms(self):
        return sum(len(lvl) for lvl in self._levels)

    def truncate(self, dmax):
        """Copy truncated to a (smaller or equal) degree."""
        if dmax > self.dmax:
            raise FreeAlgebraError("cannot extend the truncation degree")
        out = [dict(self._levels[d]) for d in range(dmax + 1)]
        return FreeSeries._raw(self.ngens, dmax, out)

    def _check_compat(self, other):
        if not isinstance(other, FreeSeries):
            raise TypeError(f"expected FreeSeries, got {type(other).__name__}")
        if self.ngens != other.ngens or self.dmax != other.dmax:
            raise ShapeMismatchError(
                f"incompatible shapes: ({self.ngens},{self.dmax}) vs ({other.ngens},{other.dmax})"
            )

    # -- ring operations ----------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, FreeSeries):
            return NotImplemented
        return (
            self.ngens == other.ngens
            and self.dmax == other.dmax
            and self._levels == other._levels
        )

    def __hash__(self):
        return hash(
            (self.ngens, self.dmax, tuple(frozenset(l.items()) for l in self._levels))
        )

    def __add__(self, other):
        self._check_compat(other)
        out = [dict(lvl) for lvl in self._levels]
        for d, lvl in enumerate(other._levels):
            tgt = out[d]
            for w, c in lvl.items():
                acc = tgt.get(w, _ZERO) + c
                if acc:
                    tgt[w] = acc
                else:
                    tgt.pop(w, None)
        return FreeSeries._raw(self.ngens, self.dmax, out)

    def __neg__(self):
        out = [{w: -c for w, c in lvl.items()} for lvl in self._levels]
        return FreeSeries._raw(self.ngens, self.dmax, out)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, scalar):
        c = rational(scalar)
        if not c:
            return FreeSeries.zero(self.ngens, self.dmax)
        out = [{w: c * v for w, v in lvl.items()} for lvl in self._levels]
        return FreeSeries._raw(self.ngens, self.dmax, out)

    def __mul__(self, other):
        if not isinstance(other, FreeSeries):
            return self.scale(other)
        self._check_compat(other)
        dmax = self.dmax
        out = self._blank()
        for da, la in enumerate(self._levels):
            if not la:
                continue
            for db in range(dmax - da + 1):
                lb = other._levels[db]
                if not lb:
                    continue
                tgt = out[da + db]
                for wa, ca in la.items():
                    for wb, cb in lb.items():
                        w = wa + wb
                        acc = tgt.get(w, _ZERO) + ca * cb
                        if acc:
                            tgt[w] = acc
                        else:
                            del tgt[w]
        return FreeSeries._raw(self.ngens, self.dmax, out)

    def __rmul__(self, scalar):
        return self.scale(scalar)

    def __truediv__(self, scalar):
        c = rational(scalar)
        if not c:
            raise ZeroDivisionError("division of a series by zero")
        return self.scale(_ONE / c)

    def __repr__(self):
        parts = []
        for word, c in self.terms():
            mono = "".join(f"X{g}" for g in word) or "1"
            parts.append(f"{c}*{mono}")
            if len(parts) > 8:
                parts.append("...")
                break
        body = " + ".join(parts) if parts else "0"
        return f"FreeSeries(ngens={self.ngens}, dmax={self.dmax}: {body})"

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        terms = [
            {"word": list(w), "num": str(c.numerator), "den": str(c.denominator)}
            for w, c in self.terms()
        ]
        return {"ngens": self.ngens, "dmax": self.dmax, "terms": terms}

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, obj):
        s = cls(int(obj["ngens"]), int(obj["dmax"]))
        for t in obj["terms"]:
            word = tuple(int(g) for g in t["word"])
            _check_word(word, s.ngens, s.dmax)
            c = rational(int(t["num"]), int(t["den"]))
            if c:
                s._levels[len(word)][word] = c
        return s

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


# -- module-level operations (the stable public surface) --------------------


def add(a: FreeSeries, b: FreeSeries) -> FreeSeries:
    return a + b


def mul(a: FreeSeries, b: FreeSeries) -> FreeSeries:
    return a * b


def bracket(a: FreeSeries, b: FreeSeries) -> FreeSeries:
    """Commutator ab - ba."""
    return a * b - b * a


def exp(a: FreeSeries) -> FreeSeries:
    """exp of a series with zero constant term, truncated."""
    if a.coeff(()):
        raise ConstantTermError("exp requires a zero constant term")
    result = FreeSeries.one(a.ngens, a.dmax)
    term = FreeSeries.one(a.ngens, a.dmax)
    for k in range(1, a.dmax + 1):
        term = (term * a) / k
        if term.is_zero():
            break
        result = result + term
    return result


def log(a: FreeSeries) -> FreeSeries:
    """log of a series with constant term 1, truncated."""
    if a.coeff(()) != _ONE:
        raise ConstantTermError("log requires constant term equal to 1")
    p = a - FreeSeries.one(a.ngens, a.dmax)
    result = FreeSeries.zero(a.ngens, a.dmax)
    power = FreeSeries.one(a.ngens, a.dmax)
    mind = p.min_degree()
    if mind is None:
        return result
    kmax = a.dmax // mind
    for k in range(1, kmax + 1):
        power = power * p
        if power.is_zero():
            break
        result = result + power.scale(rational((-1) ** (k + 1), k))
    return result


def exp_single(i: int, length, ngens: int, dmax: int) -> FreeSeries:
    """exp(length * X_i) built directly; cheap building block for products."""
    s = FreeSeries(ngens, dmax)
    c = _ONE
    length = rational(length)
    word = ()
    s._levels[0][()] = _ONE
    for k in range(1, dmax + 1):
        word = word + (i,)
        c = c * length / k
        s._levels[k][word] = c
    return s


def _dynkin_map(word, coeff):
    """Expand the left-nested bracket [[...[x_w0,x_w1],...],x_wn] into words."""
    acc = {(word[0],): coeff}
    for g in word[1:]:
        nxt = {}
        for u, c in acc.items():
            w1 = u + (g,)
            v = nxt.get(w1, _ZERO) + c
            if v:
                nxt[w1] = v
            else:
                nxt.pop(w1, None)
            w2 = (g,) + u
            v = nxt.get(w2, _ZERO) - c
            if v:
                nxt[w2] = v
            else:
                nxt.pop(w2, None)
        acc = nxt
    return acc


def dynkin_is_lie(a: FreeSeries) -> bool:
    """Dynkin criterion: a is a Lie element iff delta(p_n) = n*p_n per degree."""
    if a.coeff(()):
        raise ConstantTermError("the Dynkin test requires a zero constant term")
    for n in range(1, a.dmax + 1):
        lvl = a._levels[n]
        if not lvl:
            continue
        image = {}
        for word, c in lvl.items():
            for w, v in _dynkin_map(word, c).items():
                acc = image.get(w, _ZERO) + v
                if acc:
                    image[w] = acc
                else:
                    del image[w]
        if image != {w: n * c for w, c in lvl.items()}:
            return False
    return True


def multilinear_part(a: FreeSeries, variables: Iterable[int]) -> FreeSeries:
    """Words in which each listed generator appears exactly once and no other."""
    target = tuple(sorted(variables))
    if len(set(target)) != len(target):
        raise FreeAlgebraError("variable set contains duplicates")
    out = a._blank()
    n = len(target)
    if n <= a.dmax:
        lvl = a._levels[n]
        sel = {w: c for w, c in lvl.items() if tuple(sorted(w)) == target}
        out[n] = sel
    return FreeSeries._raw(a.ngens, a.dmax, out)
