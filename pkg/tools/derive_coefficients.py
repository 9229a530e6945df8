"""
Derive diagonal-norm SBP operator coefficient tables exactly.

Produces, for interior orders 2q = 2, 4, 6:
  - norm boundary weights h_0..h_{w-1} (w = 2q), interior weight 1
  - first-derivative boundary closure rows (w rows, w+q columns)
  - central interior stencil (offsets -q..q)
  - one-sided boundary-derivative row of order q+1 (q+2 nodes)
  - remainder averaging weights gamma_{alpha,j} for the narrow
    variable-coefficient second derivative, alpha = q+1..2q

Constraints used:
  - H D1 + D1^T H = -e0 e0^T + eN eN^T (Q := H D1 antisymmetric up to corners)
  - D1 closure rows exact on monomials of degree <= q, interior rows 2q
  - interior stencil of D1^T H b D1 + R(b) confined to bandwidth 2q+1
    (band cancellation determines gamma)

Where the solution family has free parameters (2q = 6 first derivative),
the minimum-Frobenius-norm member is selected via exact normal equations.

Run:  python tools/derive_coefficients.py
Output: python source for the tables on stdout (pasted into
src/sbpelastic/_coefficients.py).
"""

from fractions import Fraction

import sympy as sp


def central_stencil(q):
    """Central first-derivative stencil of order 2q on offsets -q..q."""
    offsets = list(range(-q, q + 1))
    n = len(offsets)
    A = sp.Matrix(n, n, lambda p, j: sp.Integer(offsets[j]) ** p)
    rhs = sp.Matrix([1 if p == 1 else 0 for p in range(n)])
    sol = A.solve(rhs)
    return {offsets[j]: sol[j] for j in range(n)}


def one_sided_row(q):
    """One-sided first-derivative row of order q+1 on nodes 0..q+1."""
    m = q + 2
    A = sp.Matrix(m, m, lambda p, j: sp.Integer(j) ** p)
    rhs = sp.Matrix([1 if p == 1 else 0 for p in range(m)])
    return list(A.solve(rhs))


def monomial_rhs(p, i):
    """d/dx x^p at x=i, i.e. p*i^(p-1) with 0^0 = 1."""
    if p == 0:
        return sp.Integer(0)
    if p == 1:
        return sp.Integer(1)
    return sp.Integer(p) * sp.Integer(i) ** (p - 1)


def derive_d1_h(q):
    """Solve jointly for norm boundary weights and D1 closure rows."""
    d = central_stencil(q)
    w = 2 * q
    ncols = w + q

    hvars = [sp.Symbol(f"h{i}") for i in range(w)]
    qvars = {}
    for i in range(w):
        for j in range(i + 1, w):
            qvars[(i, j)] = sp.Symbol(f"q_{i}_{j}")

    def Q(i, j):
        if j >= w:
            return -d.get(i - j, sp.Integer(0))
        if i == j:
            return sp.Rational(-1, 2) if i == 0 else sp.Integer(0)
        if i < j:
            return qvars[(i, j)]
        return -qvars[(j, i)]

    eqs = []
    for i in range(w):
        for p in range(q + 1):
            lhs = sum(Q(i, j) * sp.Integer(j) ** p for j in range(ncols))
            eqs.append(sp.Eq(lhs, hvars[i] * monomial_rhs(p, i)))

    unknowns = hvars + list(qvars.values())
    sols = sp.linsolve(eqs, unknowns)
    assert len(sols) == 1, "inconsistent closure system"
    sol = list(sols)[0]

    free = sorted(set().union(*(expr.free_symbols for expr in sol)),
                  key=lambda s: s.name) if any(
                      expr.free_symbols for expr in sol) else []
    if free:
        # Minimum-norm member over the closure entries (exact normal eqs).
        qexprs = sol[len(hvars):]
        obj = sum(e ** 2 for e in qexprs)
        grad = [sp.diff(obj, f) for f in free]
        fsol = sp.solve(grad, free, dict=True)
        assert len(fsol) == 1
        sol = [sp.together(e.subs(fsol[0])) for e in sol]

    hvals = list(sol[:len(hvars)])
    assert all(v > 0 for v in hvals), "non-positive norm weight"
    qmap = dict(zip(qvars.keys(), sol[len(hvars):]))

    def Qnum(i, j):
        if j >= w:
            return -d.get(i - j, sp.Integer(0))
        if i == j:
            return sp.Rational(-1, 2) if i == 0 else sp.Integer(0)
        if i < j:
            return qmap[(i, j)]
        return -qmap[(j, i)]

    closure = [[sp.Rational(Qnum(i, j) / hvals[i]) for j in range(ncols)]
               for i in range(w)]
    return hvals, closure, d


def derive_gamma(q):
    """Band-cancellation weights for the narrow D2 remainder.

    R(b) = sum_alpha (1/h) Dt_a^T B_a(b) Dt_a,  B_a(b)_r = sum_j g_{a,j} b_{r+j},
    Dt_a = forward undivided difference of order alpha (binomial rows).
    Conditions: interior bands q+1..2q of D1^T H b D1 + R(b) vanish for all b.
    """
    d = central_stencil(q)
    alphas = list(range(q + 1, 2 * q + 1))
    gvars = {(a, j): sp.Symbol(f"g_{a}_{j}") for a in alphas
             for j in range(a + 1)}

    def nu(a, m):
        if m < 0 or m > a:
            return sp.Integer(0)
        return sp.Integer((-1) ** (a - m)) * sp.binomial(a, m)

    eqs = []
    for k in range(q + 1, 2 * q + 1):
        shifts = range(-2 * q, 2 * q + k + 1)
        for s in shifts:
            wide = d.get(-s, sp.Integer(0)) * d.get(k - s, sp.Integer(0))
            rem = sum(gvars[(a, j)] * nu(a, j - s) * nu(a, j - s + k)
                      for a in alphas for j in range(a + 1))
            if wide == 0 and rem == 0:
                continue
            eqs.append(sp.Eq(wide + rem, 0))

    unknowns = [gvars[k] for k in sorted(gvars)]
    sols = sp.linsolve(eqs, unknowns)
    assert len(sols) == 1, "no band-cancellation solution"
    sol = list(sols)[0]
    free = sorted(set().union(*(e.free_symbols for e in sol)),
                  key=lambda s: s.name) if any(
                      e.free_symbols for e in sol) else []
    if free:
        # Prefer the symmetric nonnegative member: minimize sum of squares.
        obj = sum(e ** 2 for e in sol)
        grad = [sp.diff(obj, f) for f in free]
        fsol = sp.solve(grad, free, dict=True)
        assert len(fsol) == 1
        sol = [sp.together(e.subs(fsol[0])) for e in sol]
    gamma = {a: [sp.Rational(sol[i]) for i, k in enumerate(sorted(gvars))
                 if k[0] == a] for a in alphas}
    for a in alphas:
        for v in gamma[a]:
            assert v >= 0, f"negative remainder weight at alpha={a}: {gamma[a]}"
    return gamma


def frac(x):
    x = sp.Rational(x)
    return Fraction(int(x.p), int(x.q))


def main():
    print("# Generated by tools/derive_coefficients.py -- do not edit by hand.")
    print("from fractions import Fraction as F")
    print()
    print("TABLES = {")
    for q in (1, 2, 3):
        h, closure, d = derive_d1_h(q)
        gamma = derive_gamma(q)
        s_row = one_sided_row(q)
        print(f"    {2 * q}: {{")
        print(f"        'h': {[frac(v) for v in h]!r},")
        print(f"        'd1_closure': {[[frac(v) for v in row] for row in closure]!r},")
        print(f"        'd1_interior': {[frac(d[o]) for o in range(-q, q + 1)]!r},")
        print(f"        's_row': {[frac(v) for v in s_row]!r},")
        print("        'gamma': {")
        for a in sorted(gamma):
            print(f"            {a}: {[frac(v) for v in gamma[a]]!r},")
        print("        },")
        print("    },")
    print("}")


if __name__ == "__main__":
    main()
