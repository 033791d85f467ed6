"""Pointwise residuals of every identity the evolution is meant to preserve.

The quasi-constraint, symmetry, gauge, and Euler relations are evaluated
with true frame derivatives e_i = a[i, m](d_m - b_m d_0); the coordinate
time derivatives they contain are substituted from the evolution
right-hand side, so a report is a pure function of a grid state.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .eos import eos_eval
from .errors import VacuumMode
from .fields import LPAIRS, SPAIRS, SP_INDEX, SP_SIGN
from .initial_data import codazzi_rhs, spatial_riemann
from .stencil import StencilConfig, coordinate_derivative
from .system import (SpatialDerivs, _conn_last_space_dir, _conn_last_time,
                     _first_pair_spatial, rhs)

RESIDUAL_NAMES = ("gauss", "codazzi", "bianchi_cyclic", "div_curvature",
                  "einstein_S", "symmetry_R", "symmetry_omega",
                  "gauge_f", "gauge_v", "euler_P", "fgauge_F")


def norms(field, L=1.0):
    """Discrete (L2, Linf) of a residual field.

    L2 = sqrt(V * grid mean of the squared pointwise magnitude), so a
    constant scalar c gives (|c| sqrt(V), |c|); component axes are the
    leading ones.  Reductions are single fixed-order numpy sums, so
    repeated runs are bit-identical.
    """
    f = np.asarray(field, dtype=float)
    if f.size == 0:
        return 0.0, 0.0
    npts = int(np.prod(f.shape[-3:])) if f.ndim >= 3 else f.size
    l2 = float(np.sqrt((L ** 3) * np.sum(f ** 2) / npts))
    linf = float(np.max(np.abs(f)))
    return l2, linf


class Workspace:
    """Shared inputs for the monitors: one RHS evaluation plus derivative
    stacks of every field the residual formulas differentiate."""

    def __init__(self, state, stencil=None):
        self.state = state
        self.stencil = stencil or StencilConfig()
        self.sderivs = SpatialDerivs.compute(state, self.stencil)
        self.dt = rhs(state, self.sderivs, self.stencil)
        self.a = state.frame.a
        self.B = state.frame.bvec()
        dx = state.dx
        order = self.stencil.fd_order

        def dstack(f):
            return np.stack([coordinate_derivative(f, m, dx, order) for m in (1, 2, 3)])

        self.dstack = dstack
        self.d_rss = self.sderivs.r_ss
        self.d_r0s = self.sderivs.r_0s


def _frame_deriv(a, B, dstack_f, dt_f):
    """e_i f = a[i, m] d_m f + B_i d0 f for a field with any component rank."""
    ef = np.einsum('im...,m...->i...', a, dstack_f)
    if dt_f is not None:
        extra = dt_f.ndim - (B.ndim - 1)   # component axes of f
        ef = ef + B[(slice(None),) + (None,) * extra] * dt_f[None]
    return ef


def gauss_codazzi_residuals(state, ws=None):
    """Residuals of the Gauss and Codazzi relations (LHS - RHS).

    gauss[c1, c2] checks R_hkij against Rt + XX for the pair combination
    (SPAIRS[c1], SPAIRS[c2]); codazzi[c, j] checks R_hk0j.
    """
    ws = ws or Workspace(state)
    X = state.conn.X
    Rt = spatial_riemann(state.frame, state.conn.omega, state.dx, ws.stencil,
                         domega=ws.dt.domega)
    gauss = np.empty((3, 3) + state.grid_shape)
    for c1, (h, k) in enumerate(SPAIRS):
        for c2, (i, j) in enumerate(SPAIRS):
            rhs_val = Rt[c1, c2] + X[j, k] * X[i, h] - X[i, k] * X[j, h]
            gauss[c1, c2] = state.curv.r_ss[c1, 3 + c2] - rhs_val

    Cod = codazzi_rhs(state.frame, state.conn, state.dx, ws.stencil, dX=ws.dt.dX)
    codazzi = np.empty((3, 3) + state.grid_shape)
    for c, (h, k) in enumerate(SPAIRS):
        for j in range(3):
            codazzi[c, j] = state.curv.r_ss[c, j] + Cod[j, h, k]
    return gauss, codazzi


def _cov_deriv_spatial_rows(state, ws, rows, d_rows, dt_rows, first_labels):
    """Full covariant derivative D_c of curvature rows with spatial first
    pair, for all spatial directions c.

    rows[r]: packed (6, grid) with first pair first_labels[r] = (alpha, beta),
    both spatial (0-based).  Returns D[c, r, P].
    """
    X = state.conn.X
    omega = state.conn.omega
    e_rows = _frame_deriv(ws.a, ws.B, d_rows, dt_rows)
    out = np.empty((3,) + rows.shape)
    RS = _first_pair_spatial(state.curv.r_ss)
    r_0s = state.curv.r_0s
    for c in range(3):
        corr = _conn_last_space_dir(c, X, omega, rows)
        for r, (al, be) in enumerate(first_labels):
            # -G^sig_{c al} R_{sig be} - G^sig_{c be} R_{al sig}
            t = (- X[c, al] * r_0s[be] + X[c, be] * r_0s[al]
                 - np.einsum('p...,pP...->P...', omega[c, al], RS[:, be])
                 - np.einsum('p...,pP...->P...', omega[c, be], RS[al]))
            out[c, r] = e_rows[c, r] + t - corr[r]
    return out


def bianchi_cyclic_residual(state, ws=None):
    """Cyclic sum D_1 R_23.. + D_2 R_31.. + D_3 R_12.., packed (6, grid)."""
    ws = ws or Workspace(state)
    rows = np.stack([SP_SIGN[i, j] * state.curv.r_ss[SP_INDEX[i, j]]
                     for (i, j) in ((1, 2), (2, 0), (0, 1))])
    d_rows = np.stack([SP_SIGN[i, j] * ws.d_rss[:, SP_INDEX[i, j]]
                       for (i, j) in ((1, 2), (2, 0), (0, 1))], axis=1)
    dt_rows = np.stack([SP_SIGN[i, j] * ws.dt.dr_ss[SP_INDEX[i, j]]
                        for (i, j) in ((1, 2), (2, 0), (0, 1))])
    D = _cov_deriv_spatial_rows(state, ws, rows, d_rows, dt_rows,
                                [(1, 2), (2, 0), (0, 1)])
    return D[0, 0] + D[1, 1] + D[2, 2]


def div_curvature_residual(state, ws=None):
    """sum_h D_h R_{h0 lam mu} - (D_lam rho_{mu 0} - D_mu rho_{lam 0}), packed."""
    ws = ws or Workspace(state)
    X = state.conn.X
    Y = state.conn.Y
    omega = state.conn.omega
    r_0s = state.curv.r_0s
    RS = _first_pair_spatial(state.curv.r_ss)

    e_r0s = _frame_deriv(ws.a, ws.B, ws.d_r0s, ws.dt.dr_0s)
    lhs = np.zeros((6,) + state.grid_shape)
    omtr = np.einsum('llp...->p...', omega)
    for h in range(3):
        corr = _conn_last_space_dir(h, X, omega, r_0s[h][None])[0]
        lhs += (- e_r0s[h, h]
                + np.einsum('p...,pP...->P...', omega[h, h], r_0s)
                - np.einsum('j...,jP...->P...', X[h], RS[h])
                + corr)

    if not state.is_vacuum():
        mu = state.fluid.mu
        eos = state.fluid.eos
        p = eos.w * mu
        emu = _frame_deriv(ws.a, ws.B, ws.sderivs.mu, ws.dt.dmu)
        rho_side = np.zeros((6,) + state.grid_shape)
        for m_ in range(3):   # P = (0, m): -Y_m (mu + p) - (1 + 3w)/2 e_m mu
            rho_side[m_] = -Y[m_] * (mu + p) - 0.5 * (1.0 + 3.0 * eos.w) * emu[m_]
        for c, (l_, m_) in enumerate(SPAIRS):   # P = (l, m)
            rho_side[3 + c] = (X[m_, l_] - X[l_, m_]) * (mu + p)
        lhs = lhs - rho_side
    return lhs


def einstein_residual(state):
    """S = Ricc - rho (vacuum: rho = 0) and the scalar curvature trace.

    Ricc_{ab} = eta^{cd} R_{ca db} contracted from the stored blocks;
    Ricc_{0j} and Ricc_{j0} are kept distinct (their mismatch is the
    pair-exchange defect).
    """
    r_ss = state.curv.r_ss
    r_0s = state.curv.r_0s
    grid = state.grid_shape
    ricc = np.zeros((4, 4) + grid)

    ricc[0, 0] = sum(r_0s[l, l] for l in range(3))
    for j in range(3):
        acc0j = np.zeros(grid)
        accj0 = np.zeros(grid)
        for l in range(3):
            if l == j:
                continue
            # Ricc_0j += R_l0lj = -R_0l (l, j)
            acc0j -= r_0s[l, 3 + SP_INDEX[l, j]] * SP_SIGN[l, j]
            # Ricc_j0 += R_ljl0 = -(sign) r_ss[(l,j), (0,l)]
            accj0 -= SP_SIGN[l, j] * r_ss[SP_INDEX[l, j], l]
        ricc[0, j + 1] = acc0j
        ricc[j + 1, 0] = accj0
    for h in range(3):
        for j in range(3):
            acc = -r_0s[h, j]
            for l in range(3):
                if l == h or l == j:
                    continue
                acc = acc + SP_SIGN[l, h] * SP_SIGN[l, j] * \
                    r_ss[SP_INDEX[l, h], 3 + SP_INDEX[l, j]]
            ricc[h + 1, j + 1] = acc

    scal = -ricc[0, 0] + ricc[1, 1] + ricc[2, 2] + ricc[3, 3]

    S = ricc
    if not state.is_vacuum():
        mu = state.fluid.mu
        p = state.fluid.eos.w * mu
        S = ricc.copy()
        S[0, 0] -= 0.5 * (3.0 * p + mu)
        for i in range(1, 4):
            S[i, i] -= 0.5 * (mu - p)
    return S, scal


def symmetry_residuals(state):
    """Non-storage-enforced symmetries: pair exchange, the algebraic cyclic
    identity, and the omega antisymmetry.

    Returns a dict of residual fields; ``pair_exchange`` is the 6 x 6
    pair-basis matrix minus its transpose.
    """
    grid = state.grid_shape
    G = np.zeros((6, 6) + grid)
    for A, (al, be) in enumerate(LPAIRS):
        if al == 0:
            G[A] = state.curv.r_0s[be - 1]
        else:
            G[A] = state.curv.r_ss[SP_INDEX[al - 1, be - 1]]
    pair_exchange = G - np.einsum('AB...->BA...', G)

    # algebraic first Bianchi: R_{<1,2,3> nu} summed cyclically over the
    # first three slots, one component per nu
    cyc = np.zeros((4,) + grid)
    trip = ((0, 1), (1, 2), (2, 0))
    for nu in range(4):
        acc = np.zeros(grid)
        for (al, be), mu_ in zip(trip, (2, 0, 1)):
            lam = mu_ + 1               # 4-label of the third slot
            if lam == nu:
                continue
            c = SP_INDEX[al, be]
            idx = LPAIRS.index((min(lam, nu), max(lam, nu)))
            sgn = 1.0 if lam < nu else -1.0
            acc = acc + sgn * state.curv.r_ss[c, idx]
        cyc[nu] = acc

    om = state.conn.omega
    omega_antisym = om + np.swapaxes(om, 1, 2)
    return {"pair_exchange": pair_exchange, "algebraic_cyclic": cyc,
            "omega_antisym": omega_antisym}


def gauge_commutator_residuals(state, ws=None):
    """Structure-coefficient defects f_ij and v^p_ij of the frame.

    The true commutators of e_i = a[i, m](d_m - b_m d_0) are computed
    from coordinate derivatives of a and b (time pieces substituted from
    the evolution), re-expressed in the frame basis, and compared with
    the gauge values X_[i,j] and w^p_[i,j].
    """
    ws = ws or Workspace(state)
    a = state.frame.a
    X = state.conn.X
    Y = state.conn.Y
    B = ws.B
    ainv = state.frame.inverse()

    d_a = ws.dstack(a)
    e_a = _frame_deriv(a, B, d_a, ws.dt.da)          # e_i a[j, m]
    dB = -np.einsum('ik...,k...->i...', X, B)
    if not state.is_vacuum():
        dB = dB + Y
    d_Bf = ws.dstack(B)
    e_B = _frame_deriv(a, B, d_Bf, dB)               # e_i B_j

    anti = e_a - np.einsum('ijm...->jim...', e_a)    # e_i a_j^m - e_j a_i^m
    Cp = np.einsum('ijm...,mp...->ijp...', anti, ainv)
    ainvB = np.einsum('mp...,p...->m...', ainv, B)
    C0 = -np.einsum('ijm...,m...->ij...', anti, ainvB) \
        + e_B - np.einsum('ij...->ji...', e_B)

    f = 0.5 * (C0 - (X - np.einsum('ij...->ji...', X)))
    v = Cp - (state.conn.omega - np.einsum('jip...->ijp...', state.conn.omega))
    return f, v


def euler_residuals(state, ws=None):
    """Euler constraint P_i = Y_i + e_i F and the rotation-type quantity
    Fg_ij = sd_[i Y_j] + X_[i,j] tr X / mu'."""
    if state.is_vacuum():
        raise VacuumMode("euler_residuals requires a fluid state")
    ws = ws or Workspace(state)
    eos = state.fluid.eos
    mu = state.fluid.mu
    _, mu_pr, F, _ = eos_eval(eos, mu)
    trX = np.einsum('ll...->...', state.conn.X)
    dF = -trX / mu_pr
    eF = _frame_deriv(ws.a, ws.B, ws.dstack(F), dF)
    P = state.conn.Y + eF

    eY = _frame_deriv(ws.a, ws.B, ws.dstack(state.conn.Y), ws.dt.dY)
    sdY = eY - np.einsum('ijp...,p...->ij...', state.conn.omega, state.conn.Y)
    X = state.conn.X
    Fg = sdY - np.einsum('ij...->ji...', sdY) \
        + (X - np.einsum('ij...->ji...', X)) * (trX / mu_pr)
    return P, Fg


@dataclass
class ResidualReport:
    """L2 and Linf norms of every monitored residual at one time."""

    t: float
    l2: dict
    linf: dict

    def row(self):
        out = [self.t]
        for name in RESIDUAL_NAMES:
            out += [self.l2[name], self.linf[name]]
        return out

    def max_constraint(self):
        """Largest Linf among the constraint-type residuals (used for the
        blow-up halt)."""
        keys = ("gauss", "codazzi", "bianchi_cyclic", "div_curvature", "einstein_S")
        return max(self.linf[k] for k in keys)

    def max_all(self):
        return max(self.linf.values())

    def __str__(self):
        parts = [f"t={self.t:.6g}"]
        parts += [f"{k}={self.linf[k]:.3e}" for k in RESIDUAL_NAMES]
        return "  ".join(parts)


def compute_report(state, stencil=None):
    """Evaluate every residual and reduce to norms; vacuum states report
    zero for the fluid-only rows."""
    ws = Workspace(state, stencil)
    L = state.L
    l2, linf = {}, {}

    def put(name, field):
        l2[name], linf[name] = norms(field, L)

    gauss, codazzi = gauss_codazzi_residuals(state, ws)
    put("gauss", gauss)
    put("codazzi", codazzi)
    put("bianchi_cyclic", bianchi_cyclic_residual(state, ws))
    put("div_curvature", div_curvature_residual(state, ws))
    S, _ = einstein_residual(state)
    put("einstein_S", S)
    sym = symmetry_residuals(state)
    put("symmetry_R", np.concatenate([sym["pair_exchange"].reshape((-1,) + state.grid_shape),
                                      sym["algebraic_cyclic"]]))
    put("symmetry_omega", sym["omega_antisym"])
    f, v = gauge_commutator_residuals(state, ws)
    put("gauge_f", f)
    put("gauge_v", v)
    if state.is_vacuum():
        l2["euler_P"] = linf["euler_P"] = 0.0
        l2["fgauge_F"] = linf["fgauge_F"] = 0.0
    else:
        P, Fg = euler_residuals(state, ws)
        put("euler_P", P)
        put("fgauge_F", Fg)
    return ResidualReport(state.t, l2, linf)
