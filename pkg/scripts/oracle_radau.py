"""Derive 3-point Radau IIA collocation data exactly with sympy.

Nodes are the roots of the degree-3 right-Radau polynomial on (0, 1];
the differentiation matrix D[j,i] = l_i'(c_j) uses Lagrange basis
polynomials over the four nodes {0, c1, c2, 1}.  Printed at 25 digits
for freezing into gaslift_rto.nlp.builders and its tests.
"""

import sympy as sp

tau = sp.symbols("tau")

c1 = (4 - sp.sqrt(6)) / 10
c2 = (4 + sp.sqrt(6)) / 10
nodes = [sp.Integer(0), c1, c2, sp.Integer(1)]
colloc = nodes[1:]


def lagrange(i):
    p = sp.Integer(1)
    for k, nk in enumerate(nodes):
        if k != i:
            p *= (tau - nk) / (nodes[i] - nk)
    return sp.simplify(p)


basis = [lagrange(i) for i in range(4)]

D = sp.Matrix(3, 4, lambda j, i: sp.diff(basis[i], tau).subs(tau, colloc[j]))
D = sp.simplify(D)

# quadrature weights: integrals of the Lagrange basis over the three
# collocation nodes only (degree-2 interpolation)
qbasis = []
for i in range(3):
    p = sp.Integer(1)
    for k in range(3):
        if k != i:
            p *= (tau - colloc[k]) / (colloc[i] - colloc[k])
    qbasis.append(p)
b = [sp.integrate(q, (tau, 0, 1)) for q in qbasis]

print("exact nodes:", [sp.nsimplify(c) for c in colloc])
print("exact b    :", [sp.simplify(x) for x in b])
ref_b = [(16 - sp.sqrt(6)) / 36, (16 + sp.sqrt(6)) / 36, sp.Rational(1, 9)]
assert all(sp.simplify(x - y) == 0 for x, y in zip(b, ref_b))

# identities: rows of D annihilate constants; cubic differentiation exact
for j in range(3):
    assert sp.simplify(sum(D[j, :])) == 0
    lhs = sum(D[j, i] * nodes[i] ** 3 for i in range(4))
    assert sp.simplify(lhs - 3 * colloc[j] ** 2) == 0

print("\nc =", [sp.N(x, 25) for x in colloc])
print("b =", [sp.N(x, 25) for x in b])
print("D =")
for j in range(3):
    print("  ", [sp.N(D[j, i], 25) for i in range(4)])
