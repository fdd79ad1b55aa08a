"""Closed-form functions on the flat torus with exact partial derivatives.

Expressions are immutable trees. The coordinates ``x`` and ``y`` are not
functions themselves: they may only enter through ``sin``/``cos`` of an
integer linear phase, which keeps every admitted expression 2pi-periodic.

>>> u = cos(x) * exp(sin(2 * x + y))
>>> ux = u.diff("x")
"""
import math
import numbers

import numpy as np

TWO_PI = 2.0 * math.pi


class NonPeriodicError(TypeError):
    pass


class Phase:
    """Linear phase kx * x + ky * y + offset with integer kx, ky."""

    __slots__ = ("kx", "ky", "offset")

    def __init__(self, kx, ky, offset=0.0):
        self.kx, self.ky, self.offset = int(kx), int(ky), float(offset)

    def __add__(self, other):
        if isinstance(other, Phase):
            return Phase(self.kx + other.kx, self.ky + other.ky, self.offset + other.offset)
        if isinstance(other, numbers.Real):
            return Phase(self.kx, self.ky, self.offset + other)
        raise NonPeriodicError("a bare coordinate can only be combined with other phases or constants")

    __radd__ = __add__

    def __neg__(self):
        return Phase(-self.kx, -self.ky, -self.offset)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, numbers.Integral) and not isinstance(other, bool):
            return Phase(self.kx * other, self.ky * other, self.offset * other)
        if isinstance(other, numbers.Real) and float(other).is_integer():
            return self * int(other)
        raise NonPeriodicError(f"phase scaled by {other!r} is not 2pi-periodic")

    __rmul__ = __mul__

    def __repr__(self):
        return f"({self.kx}*x + {self.ky}*y + {self.offset:g})"


x = Phase(1, 0)
y = Phase(0, 1)


def _lift(value):
    if isinstance(value, ExactFunction):
        return value
    if isinstance(value, Phase):
        raise NonPeriodicError("coordinates may only appear inside sin/cos")
    if isinstance(value, numbers.Real):
        return Const(float(value))
    raise TypeError(f"cannot use {type(value).__name__} in an expression")


class ExactFunction:
    __slots__ = ("_derivs", "__weakref__")

    def __init__(self):
        self._derivs = {}

    # arithmetic
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return add(self, mul(Const(-1.0), _lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), mul(Const(-1.0), self))

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        if not isinstance(other, numbers.Real) or other == 0:
            raise TypeError("expressions may only be divided by non-zero constants")
        return mul(Const(1.0 / other), self)

    def __pow__(self, k):
        if not isinstance(k, numbers.Integral) or k < 0:
            raise TypeError("only non-negative integer powers are supported")
        return power(self, int(k))

    # calculus
    def diff(self, var, order=1):
        if var not in ("x", "y"):
            raise ValueError(f"unknown variable {var!r}")
        out = self
        for _ in range(order):
            d = out._derivs.get(var)
            if d is None:
                d = out._diff(var)
                out._derivs[var] = d
            out = d
        return out

    def _diff(self, var):
        raise NotImplementedError

    # evaluation
    def __call__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        xs, ys = np.broadcast_arrays(xs, ys)
        return np.broadcast_to(self._eval(xs, ys, {}), xs.shape).astype(float)

    def _eval(self, xs, ys, cache):
        key = id(self)
        v = cache.get(key)
        if v is None:
            v = self._compute(xs, ys, cache)
            cache[key] = v
        return v

    def is_zero(self):
        return False


class Const(ExactFunction):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = float(value)

    def _diff(self, var):
        return ZERO

    def _compute(self, xs, ys, cache):
        return self.value

    def is_zero(self):
        return self.value == 0.0

    def __repr__(self):
        return f"{self.value:g}"


ZERO = Const(0.0)
ONE = Const(1.0)


class Wave(ExactFunction):
    """cos(kx * x + ky * y + offset + quarter * pi/2).

    Derivatives only advance ``quarter``, so every derivative of a wave shares
    one pair of cos/sin evaluations of the base phase.
    """

    __slots__ = ("phase", "quarter")

    def __init__(self, phase, quarter=0):
        super().__init__()
        self.phase = phase
        self.quarter = quarter % 4

    def _diff(self, var):
        k = self.phase.kx if var == "x" else self.phase.ky
        if k == 0:
            return ZERO
        return mul(Const(k), Wave(self.phase, self.quarter + 1))

    def _compute(self, xs, ys, cache):
        p = self.phase
        key = ("wave", p.kx, p.ky, p.offset)
        cs = cache.get(key)
        if cs is None:
            theta = p.kx * xs + p.ky * ys + p.offset
            cs = (np.cos(theta), np.sin(theta))
            cache[key] = cs
        c, s = cs
        return (c, -s, -c, s)[self.quarter]

    def __repr__(self):
        return f"cos{self.phase!r}" if self.quarter == 0 else f"cos({self.phase!r} + {self.quarter}pi/2)"


class Sum(ExactFunction):
    __slots__ = ("terms",)

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def _diff(self, var):
        out = ZERO
        for t in self.terms:
            out = add(out, t.diff(var))
        return out

    def _compute(self, xs, ys, cache):
        total = self.terms[0]._eval(xs, ys, cache)
        for t in self.terms[1:]:
            total = total + t._eval(xs, ys, cache)
        return total

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.terms)) + ")"


class Prod(ExactFunction):
    __slots__ = ("factors",)

    def __init__(self, factors):
        super().__init__()
        self.factors = tuple(factors)

    def _diff(self, var):
        out = ZERO
        for i, f in enumerate(self.factors):
            df = f.diff(var)
            if df.is_zero():
                continue
            term = df
            for k, g in enumerate(self.factors):
                if k != i:
                    term = mul(term, g)
            out = add(out, term)
        return out

    def _compute(self, xs, ys, cache):
        total = self.factors[0]._eval(xs, ys, cache)
        for f in self.factors[1:]:
            total = total * f._eval(xs, ys, cache)
        return total

    def __repr__(self):
        return "*".join(map(repr, self.factors))


class Power(ExactFunction):
    __slots__ = ("base", "k")

    def __init__(self, base, k):
        super().__init__()
        self.base, self.k = base, k

    def _diff(self, var):
        return mul(mul(Const(self.k), power(self.base, self.k - 1)), self.base.diff(var))

    def _compute(self, xs, ys, cache):
        return self.base._eval(xs, ys, cache) ** self.k

    def __repr__(self):
        return f"{self.base!r}**{self.k}"


class _Unary(ExactFunction):
    __slots__ = ("arg",)
    name = "?"

    def __init__(self, arg):
        super().__init__()
        self.arg = arg

    def __repr__(self):
        return f"{self.name}({self.arg!r})"


class Exp(_Unary):
    __slots__ = ()
    name = "exp"

    def _diff(self, var):
        return mul(self, self.arg.diff(var))

    def _compute(self, xs, ys, cache):
        return np.exp(self.arg._eval(xs, ys, cache))


class Sin(_Unary):
    __slots__ = ()
    name = "sin"

    def _diff(self, var):
        return mul(Cos(self.arg), self.arg.diff(var))

    def _compute(self, xs, ys, cache):
        return np.sin(self.arg._eval(xs, ys, cache))


class Cos(_Unary):
    __slots__ = ()
    name = "cos"

    def _diff(self, var):
        return mul(Const(-1.0), mul(Sin(self.arg), self.arg.diff(var)))

    def _compute(self, xs, ys, cache):
        return np.cos(self.arg._eval(xs, ys, cache))


def add(a, b):
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    terms = (a.terms if isinstance(a, Sum) else (a,)) + (b.terms if isinstance(b, Sum) else (b,))
    return Sum(terms)


def mul(a, b):
    if a.is_zero() or b.is_zero():
        return ZERO
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(a, Const) and a.value == 1.0:
        return b
    if isinstance(b, Const) and b.value == 1.0:
        return a
    factors = (a.factors if isinstance(a, Prod) else (a,)) + (b.factors if isinstance(b, Prod) else (b,))
    consts = [f for f in factors if isinstance(f, Const)]
    if len(consts) > 1:
        c = math.prod(f.value for f in consts)
        rest = tuple(f for f in factors if not isinstance(f, Const))
        return mul(Const(c), Prod(rest) if len(rest) > 1 else rest[0]) if rest else Const(c)
    return Prod(factors)


def power(base, k):
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** k)
    if base.is_zero():
        return ZERO
    return Power(base, k)


def cos(arg):
    if isinstance(arg, Phase):
        return Wave(arg)
    arg = _lift(arg)
    return Const(math.cos(arg.value)) if isinstance(arg, Const) else Cos(arg)


def sin(arg):
    if isinstance(arg, Phase):
        return Wave(arg, quarter=-1)
    arg = _lift(arg)
    return Const(math.sin(arg.value)) if isinstance(arg, Const) else Sin(arg)


def exp(arg):
    arg = _lift(arg)
    return Const(math.exp(arg.value)) if isinstance(arg, Const) else Exp(arg)


def const(value):
    return Const(value)


# flat-torus differential operators


def gradient(f):
    return f.diff("x"), f.diff("y")


def grad_dot(f, g):
    fx, fy = gradient(f)
    gx, gy = gradient(g)
    return fx * gx + fy * gy


def grad_norm_sq(f):
    fx, fy = gradient(f)
    return fx ** 2 + fy ** 2


def neg_laplacian(f):
    """-(f_xx + f_yy): the Laplacian with the geometers' positive sign."""
    return -(f.diff("x", 2) + f.diff("y", 2))


def hessian_norm_sq(u):
    uxy = u.diff("x").diff("y")
    return u.diff("x", 2) ** 2 + 2 * uxy ** 2 + u.diff("y", 2) ** 2


def hessian_form(h, u):
    """D^2 h (grad u, grad u)."""
    ux, uy = gradient(u)
    hxy = h.diff("x").diff("y")
    return h.diff("x", 2) * ux ** 2 + 2 * hxy * ux * uy + h.diff("y", 2) * uy ** 2


def apply_Lh(u, h, alpha):
    """exp(-(alpha-1) h) * (Delta u + alpha <grad h, grad u>) with Delta = -div grad."""
    return exp(-(alpha - 1) * h) * (neg_laplacian(u) + alpha * grad_dot(h, u))


def grid(n):
    t = TWO_PI * np.arange(n) / n
    return np.meshgrid(t, t, indexing="ij")


def grid_blocks(n, rows=8):
    """Row blocks of the uniform n x n grid; keeps intermediate arrays cache-sized."""
    t = TWO_PI * np.arange(n) / n
    for start in range(0, n, rows):
        xs, ys = np.meshgrid(t[start:start + rows], t, indexing="ij")
        yield xs, ys


def evaluate_many(funcs, xs, ys):
    """Evaluate several expressions on one point set with a shared node cache."""
    xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    cache = {}
    return [np.broadcast_to(f._eval(xs, ys, cache), xs.shape) for f in funcs]


def torus_quadrature(f, n):
    """(2pi/n)^2 times the sum of f over the uniform n x n grid."""
    return torus_quadrature_many([f], n)[0]


def torus_quadrature_many(funcs, n):
    if n < 16:
        raise ValueError("quadrature grid must have n >= 16")
    partial = [[] for _ in funcs]
    for xs, ys in grid_blocks(n):
        for acc, v in zip(partial, evaluate_many(funcs, xs, ys)):
            acc.append(float(np.sum(v)))
    return [(TWO_PI / n) ** 2 * math.fsum(acc) for acc in partial]


def random_trig_poly(rng, n_terms=3, max_freq=3, amplitude=1.0):
    """Sum of ``n_terms`` cosines with random integer wave vectors and phases."""
    out = ZERO
    for _ in range(n_terms):
        kx, ky = rng.integers(-max_freq, max_freq + 1, size=2)
        if kx == 0 and ky == 0:
            kx = 1
        a = amplitude * rng.uniform(-1.0, 1.0) / n_terms
        out = out + a * cos(int(kx) * x + int(ky) * y + rng.uniform(0, TWO_PI))
    return out
