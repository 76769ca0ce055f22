#!/usr/bin/env python3
"""Generate the manufactured solutions and derived data used by the demos.

Every source term and interface residual is obtained by symbolic
differentiation, then emitted as C++ (src/manufactured_data.cpp).

    python3 tools/manufactured.py > src/manufactured_data.cpp
"""

import sympy as sp

x, y = sp.symbols("x[0] x[1]", real=True)
pi = sp.pi


def grad(f):
    return sp.Matrix([sp.diff(f, x), sp.diff(f, y)])


def vgrad(u):
    # Row i holds the gradient of component i.
    return sp.Matrix([[sp.diff(u[i], x), sp.diff(u[i], y)] for i in range(2)])


def div(u):
    return sp.diff(u[0], x) + sp.diff(u[1], y)


def mdiv(s):
    return sp.Matrix([sp.diff(s[i, 0], x) + sp.diff(s[i, 1], y) for i in range(2)])


# Babuska: -lap u + u = f on the unit square, u = g on the boundary.
u_b = sp.cos(pi * x) * sp.cos(pi * y)
f_b = sp.simplify(-(sp.diff(u_b, x, 2) + sp.diff(u_b, y, 2)) + u_b)

# Darcy-Stokes. The Stokes velocity comes from a stream function so that it
# is divergence free; the Darcy velocity obeys Darcy's law exactly.
psi = x**2 * sp.sin(pi * y)
u1 = sp.Matrix([sp.diff(psi, y), -sp.diff(psi, x)])
p1 = sp.cos(pi * x) * sp.sin(pi * y)
p2 = sp.sin(pi * x) * sp.cos(pi * y) + x * y
u2 = -grad(p2)

D = (vgrad(u1) + vgrad(u1).T) / 2
sigma = D - p1 * sp.eye(2)
f1 = sp.simplify(-mdiv(sigma))
f2 = sp.simplify(div(u2))
assert sp.simplify(div(u1)) == 0

n = sp.Matrix([1, 0])
tau = sp.Matrix([0, 1])
# Interface residuals on x = 1/2 (zero for a solution of the homogeneous coupling).
g_mass = sp.simplify((u1 - u2).dot(n))
g_stress = sp.simplify((n.T * sigma * n)[0] + p2)
g_bjs = sp.simplify((tau.T * sigma * n)[0] + u1.dot(tau))

scalars = {
    "babuska_u": u_b,
    "babuska_f": f_b,
    "stokes_p": p1,
    "darcy_p": p2,
    "darcy_f": f2,
    "interface_mass": g_mass,
    "interface_stress": g_stress,
    "interface_bjs": g_bjs,
    "stokes_div": sp.simplify(div(u1)),
}
vectors = {
    "babuska_grad_u": grad(u_b),
    "stokes_u": u1,
    "stokes_f": f1,
    "darcy_u": u2,
    "darcy_grad_p": grad(p2),
}
matrices = {
    "stokes_grad_u": vgrad(u1),
    "stokes_sigma": sigma,
}


def code(e):
    return sp.ccode(sp.simplify(e), standard="c99").replace("M_PI", "std::numbers::pi")


out = []
out.append("// Generated by tools/manufactured.py; do not edit.")
out.append('#include "msa/manufactured.hpp"')
out.append("")
out.append("#include <cmath>")
out.append("#include <numbers>")
out.append("")
out.append("namespace msa::manufactured {")
out.append("")
out.append("using std::cos;")
out.append("using std::sin;")
out.append("using std::pow;")
for name, e in scalars.items():
    out.append("")
    out.append(f"double {name}([[maybe_unused]] const Point& x)")
    out.append("{")
    out.append(f"  return {code(e)};")
    out.append("}")
for name, v in vectors.items():
    out.append("")
    out.append(f"std::array<double, 2> {name}([[maybe_unused]] const Point& x)")
    out.append("{")
    out.append(f"  return {{{code(v[0])}, {code(v[1])}}};")
    out.append("}")
for name, m in matrices.items():
    out.append("")
    out.append(f"std::array<double, 4> {name}([[maybe_unused]] const Point& x)")
    out.append("{")
    entries = ", ".join(code(m[i, j]) for i in range(2) for j in range(2))
    out.append(f"  return {{{entries}}};")
    out.append("}")
out.append("")
out.append("} // namespace msa::manufactured")
print("\n".join(out))
