"""Independent reference values for the pendulum model tests.

The equations of motion are rederived here from the Lagrangian with sympy
(generalized coordinates x_w and theta, motor torque acting between body and
wheels), then evaluated at a few states. Printed values are frozen into
tests/test_model.cpp.
"""
import sympy as sp

d, l, r, mB, mW, J, g, igb, Km, RM, I2 = sp.symbols("d l r m_B m_W J g i_gb K_m R_M I_2", positive=True)
t = sp.symbols("t")
u = sp.symbols("u")
x = sp.Function("x")(t)
th = sp.Function("theta")(t)

xd, thd = sp.diff(x, t), sp.diff(th, t)
# Body COM at (x + l sin th, l cos th); two wheels translate with x and spin at x/r.
body_v2 = (xd + l * sp.cos(th) * thd) ** 2 + (l * sp.sin(th) * thd) ** 2
T_kin = sp.Rational(1, 2) * mB * body_v2 + sp.Rational(1, 2) * I2 * thd**2
T_kin += 2 * (sp.Rational(1, 2) * mW * xd**2 + sp.Rational(1, 2) * J * (xd / r) ** 2)
V = mB * g * l * sp.cos(th)
L = T_kin - V

# Two geared motors; relative wheel speed xd/r - thd.
torque = 2 * igb * Km / RM * (u - Km * igb * (xd / r - thd))
Qx, Qth = torque / r, -torque

eqs = [
    sp.diff(sp.diff(L, xd), t) - sp.diff(L, x) - Qx,
    sp.diff(sp.diff(L, thd), t) - sp.diff(L, th) - Qth,
]
xdd, thdd = sp.diff(x, t, 2), sp.diff(th, t, 2)
sol = sp.solve(eqs, [xdd, thdd], dict=True)[0]

params = {d: 0.10, l: 0.01, r: 0.04, mB: 0.368, mW: 0.02, J: 2.25e-5, g: 9.81,
          igb: 49.86, Km: 1.5e-3, RM: 12.0, I2: 2.1748e-4}

vx, vth, vxd, vthd, vu = sp.symbols("vx vth vxd vthd vu")
subs_state = {x: vx, th: vth, xd: vxd, thd: vthd, u: vu}


def accel(state, volts):
    out = []
    for key in (xdd, thdd):
        expr = sol[key].subs({xd: vxd, thd: vthd}).subs({th: vth, x: vx, u: vu})
        val = expr.subs(params).subs({vx: state[0], vxd: state[1], vth: state[2], vthd: state[3], vu: volts})
        out.append(sp.N(val, 20))
    return out


for state, volts in [((0, 0, 0.1, 0), 0.0), ((0.3, -0.4, 0.7, 1.2), 1.5), ((0, 0.2, -1.2, -2.0), -2.2)]:
    a = accel(state, volts)
    print(f"state={state} u={volts}: xddot={a[0]:.17e} thetaddot={a[1]:.17e}")
