"""Right-hand sides of the reduced vacuum and fluid evolution systems.

The evolved unknowns are the frame (a, b), the connection (omega, X, Y),
the curvature pairs (r_ss, r_0s) and, in fluid mode, the density mu.
Schematically, with e_0 = d/dx^0 and e_k = a[k, m] (d_m - b_m d_0):

    d0 a_i^l   = -X_ik a_k^l
    d0 b       = -a^{-1} Y                                          (vacuum: 0)
    d0 w^i_hj  = R_0hij - X_hk w^i_kj - Y_i X_hj + Y_j X_hi
    d0 X_hi    = -R_h0i0 - X_hj X_ji
                 + Y_h Y_i + sd_i Y_h + (tr X / mu')(X_hi - X_ih)   [fluid]
    mu' d0 Y_h = sd^l X_hl + Y_l (X_lh - X_hl) + Y_h tr X
                 + X_hl e_l(mu) / (mu + p)                          [fluid]
    d0 mu      = -(mu + p) tr X                                     [fluid]
    D_0 R_hk.. = -D_k R_0h.. + D_h R_0k..
    D_0 R_0h.. = D^l R_lh..  (+ D_mu rho_lh - D_lam rho_muh)        [fluid]

where sd is the spatial covariant derivative (omega only) and D the
full frame covariant derivative with connection components
w^0_0a = w^a_00 = Y_a, w^j_0i = 0, w^0_ij = w^j_i0 = X_ij and the
spatial w^p_ij (direction-first index convention throughout).

Every frame derivative of an evolved curvature or fluid-velocity
quantity contributes a -b_m d0 piece; those coordinate time derivatives
are moved to the left and eliminated with the closed-form inverses of
the symmetric principal blocks (see blocks.py).  The substitutions
d0 F = -tr X / mu' and e_l F = e_l(mu) / (mu'(mu + p)), with d0 mu known
in closed form, keep the Y equation explicit after the block solve.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonPositiveDensity, SingularPrincipal, VacuumMode
from .fields import SPAIRS, SP_INDEX, SP_SIGN
from .stencil import StencilConfig, coordinate_derivative

PD_FLOOR = 1e-10


@dataclass
class TimeDerivative:
    """Coordinate time derivative of every evolved field."""

    da: np.ndarray
    db: np.ndarray
    domega: np.ndarray
    dX: np.ndarray
    dr_ss: np.ndarray
    dr_0s: np.ndarray
    dY: Optional[np.ndarray] = None
    dmu: Optional[np.ndarray] = None

    def arrays(self):
        out = [self.da, self.db, self.domega, self.dX, self.dr_ss, self.dr_0s]
        if self.dY is not None:
            out += [self.dY, self.dmu]
        return out


@dataclass
class SpatialDerivs:
    """Coordinate-direction derivative stacks of the stencil-coupled fields.

    Leading axis is the coordinate direction (x^1, x^2, x^3).
    """

    r_ss: np.ndarray                 # (3, 3, 6, *grid)
    r_0s: np.ndarray                 # (3, 3, 6, *grid)
    X: Optional[np.ndarray] = None   # (3, 3, 3, *grid)
    Y: Optional[np.ndarray] = None   # (3, 3, *grid)
    mu: Optional[np.ndarray] = None  # (3, *grid)

    @classmethod
    def compute(cls, state, stencil):
        dx, order = state.dx, stencil.fd_order

        def dstack(f):
            return np.stack([coordinate_derivative(f, m, dx, order) for m in (1, 2, 3)])

        if state.is_vacuum():
            return cls(dstack(state.curv.r_ss), dstack(state.curv.r_0s))
        return cls(dstack(state.curv.r_ss), dstack(state.curv.r_0s),
                   dstack(state.conn.X), dstack(state.conn.Y),
                   dstack(state.fluid.mu))


def _first_pair_spatial(r_ss):
    """RS[l, h, P] = R_{lh, P} with both first indices spatial (0-based)."""
    RS = np.zeros((3, 3) + r_ss.shape[1:], dtype=r_ss.dtype)
    for c, (h, k) in enumerate(SPAIRS):
        RS[h, k] = r_ss[c]
        RS[k, h] = -r_ss[c]
    return RS


def _spatial_pairs_of(r_0s):
    """W[h, i, j] = R_{0h, (i, j)} for spatial i, j (0-based)."""
    W = np.zeros((3, 3, 3) + r_0s.shape[2:], dtype=r_0s.dtype)
    for c, (i, j) in enumerate(SPAIRS):
        W[:, i, j] = r_0s[:, 3 + c]
        W[:, j, i] = -r_0s[:, 3 + c]
    return W


def _conn_last_time(Y, T):
    """Connection correction on the packed last pair, direction e_0.

    T has shape (rows, 6, *grid); returns the packed
    w^sig_{0 lam} T_{sig mu} + w^sig_{0 mu} T_{lam sig}.
    """
    out = np.zeros_like(T)
    for m_ in range(3):                      # P = (0, m): Y_j T_{(j, m)}
        acc = 0.0
        for j_ in range(3):
            if j_ == m_:
                continue
            acc = acc + Y[j_] * (SP_SIGN[j_, m_] * T[:, 3 + SP_INDEX[j_, m_]])
        out[:, m_] = acc
    for c, (l_, m_) in enumerate(SPAIRS):    # P = (l, m): Y_l T_{(0,m)} + Y_m T_{(l,0)}
        out[:, 3 + c] = Y[l_] * T[:, m_] - Y[m_] * T[:, l_]
    return out


def _conn_last_space_dir(c_, X, omega, T):
    """Connection correction on the packed last pair, direction e_{c_}.

    T has shape (rows, 6, *grid); uses X[c_] and omega[c_].
    """
    out = np.zeros_like(T)
    for m_ in range(3):                      # P = (0, m)
        acc = 0.0
        for j_ in range(3):
            if j_ == m_:
                continue
            acc = acc + X[c_, j_] * (SP_SIGN[j_, m_] * T[:, 3 + SP_INDEX[j_, m_]])
        for p_ in range(3):
            acc = acc + omega[c_, m_, p_] * T[:, p_]
        out[:, m_] = acc
    for c, (l_, m_) in enumerate(SPAIRS):    # P = (l, m)
        acc = X[c_, l_] * T[:, m_] - X[c_, m_] * T[:, l_]
        for p_ in range(3):
            if p_ != m_:
                acc = acc + omega[c_, l_, p_] * (SP_SIGN[p_, m_] * T[:, 3 + SP_INDEX[p_, m_]])
            if p_ != l_:
                acc = acc + omega[c_, m_, p_] * (SP_SIGN[l_, p_] * T[:, 3 + SP_INDEX[l_, p_]])
        out[:, 3 + c] = acc
    return out


def _solve_curvature_blocks(B, r_s, r_t):
    """Vectorized closed-form solve of the 6-dim blocks, all pairs at once.

    r_s: (3, 6, *grid) pair rows, r_t: (3, 6, *grid) time rows.
    """
    beta = np.einsum('i...,i...->...', B, B)
    if np.any(1.0 - beta <= PD_FLOOR):
        raise SingularPrincipal("curvature principal block degenerate (|B| -> 1)")
    Ct = np.zeros_like(r_t)
    for c, (h, k) in enumerate(SPAIRS):
        Ct[h] += B[k] * r_s[c]
        Ct[k] -= B[h] * r_s[c]
    w = r_t - Ct
    Bw = np.einsum('j...,jP...->P...', B, w)
    u_t = (w - B[:, None] * Bw[None]) / (1.0 - beta)
    u_s = r_s.copy()
    for c, (h, k) in enumerate(SPAIRS):
        u_s[c] -= B[k] * u_t[h] - B[h] * u_t[k]
    return u_s, u_t


def _rho_terms(X, trX, emu, dmu, mu_plus_p, w):
    """D_mu rho_{lam h} - D_lam rho_{mu h}, packed (3, 6, *grid) as [h, P]."""
    out = np.zeros((3, 6) + trX.shape, dtype=X.dtype)
    half = 0.5 * (1.0 - w)
    for m_ in range(3):                      # P = (0, m): D_m rho_0h - D_0 rho_mh
        for h in range(3):
            term = -X[m_, h] * mu_plus_p
            if h == m_:
                term = term - half * dmu
            out[h, m_] = term
    for c, (l_, m_) in enumerate(SPAIRS):    # P = (l, m): D_m rho_lh - D_l rho_mh
        out[l_, 3 + c] += half * emu[m_]
        out[m_, 3 + c] -= half * emu[l_]
    return out


def _rhs(state, derivs):
    vacuum = state.is_vacuum()
    a = state.frame.a
    B = state.frame.bvec()
    X = state.conn.X
    Y = state.conn.Y
    omega = state.conn.omega
    r_ss = state.curv.r_ss
    r_0s = state.curv.r_0s
    trX = np.einsum('ll...->...', X)

    da = -np.einsum('ik...,kj...->ij...', X, a)

    if not vacuum:
        mu = state.fluid.mu
        if np.any(mu <= 0.0):
            raise NonPositiveDensity("rhs_fluid requires mu > 0 everywhere")
        eos = state.fluid.eos
        p = eos.w * mu
        mu_plus_p = mu + p
        dmu = -mu_plus_p * trX
        # e_l mu with the known d0 mu substituted
        emu = np.einsum('lm...,m...->l...', a, derivs.mu) + B * dmu
        db = -np.einsum('ij...,j...->i...', state.frame.inverse(), Y)
    else:
        dmu = None
        db = np.zeros_like(state.frame.b)

    # omega equation
    W = _spatial_pairs_of(r_0s)
    domega = np.einsum('hij...->hji...', W) - np.einsum('hk...,kji...->hji...', X, omega)
    if not vacuum:
        domega = domega - np.einsum('i...,hj...->hji...', Y, X) \
                        + np.einsum('j...,hi...->hji...', Y, X)

    # X (and, in fluid mode, Y) equations; r_0s[h, i] = R_0h0i = R_h0i0
    XX = np.einsum('hj...,ji...->hi...', X, X)
    rX = -r_0s[:, :3] - XX
    if vacuum:
        dX = rX
        dY = None
    else:
        mu_pr = eos.mu_prime
        rX = rX + np.einsum('h...,i...->hi...', Y, Y) \
                + np.einsum('im...,mh...->hi...', a, derivs.Y) \
                - np.einsum('ihp...,p...->hi...', omega, Y) \
                + (trX / mu_pr) * (X - np.einsum('hi...->ih...', X))
        rY = np.einsum('lm...,mhl...->h...', a, derivs.X) \
             - np.einsum('lhp...,pl...->h...', omega, X) \
             - np.einsum('llp...,hp...->h...', omega, X) \
             + np.einsum('l...,lh...->h...', Y, X) - np.einsum('l...,hl...->h...', Y, X) \
             + Y * trX \
             + np.einsum('hl...,l...->h...', X, emu) / mu_plus_p
        beta = np.einsum('i...,i...->...', B, B)
        gap = mu_pr - beta
        if np.any(gap <= PD_FLOOR) or np.any(1.0 - beta <= PD_FLOOR):
            raise SingularPrincipal("fluid principal block degenerate")
        uY = (rY + np.einsum('i...,hi...->h...', B, rX)) / gap
        dX = rX + np.einsum('i...,h...->hi...', B, uY)
        dY = uY

    # curvature equations
    RS = _first_pair_spatial(r_ss)
    er0s = np.einsum('km...,mhP...->khP...', a, derivs.r_0s)
    CSr0s = np.stack([_conn_last_space_dir(c_, X, omega, r_0s) for c_ in range(3)])

    # pair rows: d0 R_hk + B_k d0 R_0h - B_h d0 R_0k = Acc
    Acc = np.empty_like(r_ss)
    for c, (h, k) in enumerate(SPAIRS):
        acc = (- er0s[k, h] + np.einsum('j...,jP...->P...', X[k], RS[:, h])
               + np.einsum('p...,pP...->P...', omega[k, h], r_0s) + CSr0s[k, h]
               + er0s[h, k] - np.einsum('j...,jP...->P...', X[h], RS[:, k])
               - np.einsum('p...,pP...->P...', omega[h, k], r_0s) - CSr0s[h, k])
        if not vacuum:
            acc = acc + Y[h] * r_0s[k] - Y[k] * r_0s[h]
        Acc[c] = acc
    if not vacuum:
        Acc += _conn_last_time(Y, r_ss)

    # time rows: d0 R_0h - sum_l B_l d0 R_lh = Bh
    E1 = np.zeros_like(r_0s)               # sum_{l,m} a_l^m d_m R_{lh P}
    for c, (hp, kp) in enumerate(SPAIRS):
        E1[kp] += np.einsum('m...,mP...->P...', a[hp], derivs.r_ss[:, c])
        E1[hp] -= np.einsum('m...,mP...->P...', a[kp], derivs.r_ss[:, c])
    omtr = np.einsum('llp...->p...', omega)
    CSdiag = sum(_conn_last_space_dir(l_, X, omega, RS[l_]) for l_ in range(3))

    Bh = (E1
          - trX * r_0s
          - np.einsum('p...,phP...->hP...', omtr, RS)
          + np.einsum('lh...,lP...->hP...', X, r_0s)
          - np.einsum('lhp...,lpP...->hP...', omega, RS)
          - CSdiag)
    if not vacuum:
        Bh = Bh + np.einsum('j...,jhP...->hP...', Y, RS) + _conn_last_time(Y, r_0s)
        Bh = Bh + _rho_terms(X, trX, emu, dmu, mu_plus_p, eos.w)

    dr_ss, dr_0s = _solve_curvature_blocks(B, Acc, Bh)

    return TimeDerivative(da=da, db=db, domega=domega, dX=dX,
                          dr_ss=dr_ss, dr_0s=dr_0s, dY=dY, dmu=dmu)


def rhs_vacuum(state, spatial_derivs=None, stencil=None):
    """Time derivative of every evolved field for the vacuum system."""
    if not state.is_vacuum():
        raise VacuumMode("rhs_vacuum called on a fluid state")
    if spatial_derivs is None:
        spatial_derivs = SpatialDerivs.compute(state, stencil or StencilConfig())
    return _rhs(state, spatial_derivs)


def rhs_fluid(state, spatial_derivs=None, stencil=None):
    """Time derivative of every evolved field for the fluid system."""
    if state.is_vacuum():
        raise VacuumMode("rhs_fluid called on a vacuum state")
    if spatial_derivs is None:
        spatial_derivs = SpatialDerivs.compute(state, stencil or StencilConfig())
    return _rhs(state, spatial_derivs)


def rhs(state, spatial_derivs=None, stencil=None):
    """Dispatch on the state's mode."""
    if state.is_vacuum():
        return rhs_vacuum(state, spatial_derivs, stencil)
    return rhs_fluid(state, spatial_derivs, stencil)
