"""Initial states: exact scenarios and conversion from Eulerian rest data.

All constructors produce states in the evolution gauge: e_0 is the fluid
4-velocity (a geodesic unit timelike field in vacuum), the spatial legs
are Fermi propagated, and the stored curvature is built from the Gauss
and Codazzi relations plus the spatial Einstein equations so that those
relations hold to roundoff on the grid by construction.  Whether the
時-slice data also satisfies the Hamiltonian and momentum constraints is
the caller's responsibility; the monitor reports it as the 0-mu rows of
the Einstein residual.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .eos import Eos, eos_eval
from .errors import BadExponents, NonPositiveDensity, NotPositiveDefinite
from .fields import (LPAIRS, SPAIRS, SP_INDEX, SP_SIGN, CurvatureField,
                     FluidField, GridState, grid_coordinates, zero_state)
from .stencil import StencilConfig, coordinate_derivative

KASNER_TOL = 1e-12


@dataclass
class EulerianData:
    """Standard 3+1 rest-frame initial data (h0, K, p0) with zero 3-velocity."""

    h0: np.ndarray   # (3, 3, *grid) covariant spatial metric, positive definite
    K: np.ndarray    # (3, 3, *grid) symmetric second fundamental form
    p0: np.ndarray   # (*grid,) pressure field
    eos: Eos


def flat_data(n, L, b_const=None):
    """Minkowski state; optionally with a constant synthetic tilt covector b."""
    state = zero_state(n, L)
    if b_const is not None:
        for i in range(3):
            state.frame.b[i] = float(b_const[i])
    return state


def kasner_data(n, L, p1, p2, p3, t0):
    """Homogeneous anisotropic vacuum state with scale factors t^{p_i}.

    The stored frame matrix is diag(t0^{-p_i}) (its inverse, the coframe,
    carries the scale factors) and X = diag(p_i) / t0.
    """
    if t0 <= 0.0:
        raise BadExponents("t0 must be positive")
    p = np.array([p1, p2, p3], dtype=float)
    if abs(p.sum() - 1.0) > KASNER_TOL or abs((p ** 2).sum() - 1.0) > KASNER_TOL:
        raise BadExponents(f"Kasner conditions fail: sum p = {p.sum()!r}, sum p^2 = {(p**2).sum()!r}")
    state = zero_state(n, L, t=t0)
    for i in range(3):
        state.frame.a[i, i] = t0 ** (-p[i])
        state.conn.X[i, i] = p[i] / t0
    state.curv = curvature_from_constraints(state)
    return state


def _hubble_rate(mu0, eos, contracting):
    """Root of the 00 Einstein residual of the candidate homogeneous state."""
    def s00(H):
        trial = zero_state(5, 1.0, fluid_mu=mu0, eos=eos)
        for i in range(3):
            trial.conn.X[i, i] = H
        trial.curv = curvature_from_constraints(trial)
        from .monitor import einstein_residual
        S, _ = einstein_residual(trial)
        return float(S[0, 0].flat[0])

    hi = 2.0 * np.sqrt(mu0) + 1.0
    H = brentq(s00, 0.0, hi, xtol=1e-15, rtol=8.9e-16)
    return -H if contracting else H


def flrw_data(n, L, mu0, eos, contracting=False, tilt=0.0, t0=0.0):
    """Homogeneous isotropic perfect-fluid state with flat toroidal slices.

    The expansion rate solves the 00 component of the Einstein equations
    for the given density.  With ``tilt`` nonzero the same exact solution
    is written in retimed coordinates x^0 -> x^0 - phi(x^1), phi' = -b_1,
    which makes every field spatially varying and exercises the full
    tilt machinery while remaining exactly solvable.
    """
    if mu0 <= 0.0:
        raise NonPositiveDensity("flrw_data requires mu0 > 0")
    H0 = _hubble_rate(mu0, eos, contracting)
    if tilt == 0.0:
        state = zero_state(n, L, t=t0, fluid_mu=mu0, eos=eos)
        for i in range(3):
            state.conn.X[i, i] = H0
        state.curv = curvature_from_constraints(state)
        return state
    return _flrw_tilted(n, L, mu0, eos, H0, tilt, t0)


def flrw_closed_form(mu0, eos, H0, t0=0.0):
    """Closed-form flat FLRW history (s, H, mu as functions of proper time).

    s is normalized to 1 at t0.  Valid while t stays on H0's side of the
    bang/crunch time.
    """
    q = 2.0 / (3.0 * (1.0 + eos.w))
    tb = t0 - q / H0

    def s_of(t):
        return ((t - tb) / (t0 - tb)) ** q

    def H_of(t):
        return q / (t - tb)

    def mu_of(t):
        return 3.0 * H_of(t) ** 2

    return s_of, H_of, mu_of, tb


def _flrw_tilted(n, L, mu0, eos, H0, tilt, t0):
    s_of, H_of, mu_of, _ = flrw_closed_form(mu0, eos, H0, t0)
    x1, _, _ = grid_coordinates(n, L)
    k = 2.0 * np.pi / L
    phi = (tilt / k) * np.sin(k * x1)
    tau = t0 - phi
    s = s_of(tau)
    H = H_of(tau)
    mu = mu_of(tau)

    state = zero_state(n, L, t=t0, fluid_mu=mu0, eos=eos)
    state.fluid.mu = mu
    for i in range(3):
        state.frame.a[i, i] = 1.0 / s
        state.conn.X[i, i] = H
    state.frame.b[0] = -tilt * np.cos(k * x1)

    # curvature of the exact solution, written pointwise at proper time tau
    p = eos.w * mu
    r00 = (mu + 3.0 * p) / 6.0
    curv = CurvatureField(np.zeros((3, 6) + state.grid_shape),
                          np.zeros((3, 6) + state.grid_shape))
    for c, (h_, k_) in enumerate(SPAIRS):
        curv.r_ss[c, 3 + c] = H * H
    for h_ in range(3):
        curv.r_0s[h_, h_] = r00
    state.curv = curv
    return state


def flrw_perturbed_data(n, L, mu0, eos, eps, t0=0.0):
    """FLRW with a single sinusoidal density mode along x^1.

    The acceleration is set from the rest Euler condition Y = -e(F), so
    the fluid equation residual P vanishes at t = 0; the 0-mu Einstein
    residual is O(eps), which is the controlled data inconsistency of
    this scenario.
    """
    if mu0 <= 0.0:
        raise NonPositiveDensity("flrw_perturbed_data requires mu0 > 0")
    H0 = float(np.sqrt(mu0 / 3.0))
    x1, _, _ = grid_coordinates(n, L)
    k = 2.0 * np.pi / L
    mu = mu0 * (1.0 + eps * np.sin(k * x1))
    dmu_dx1 = mu0 * eps * k * np.cos(k * x1)

    state = zero_state(n, L, t=t0, fluid_mu=mu0, eos=eos)
    state.fluid.mu = mu
    for i in range(3):
        state.conn.X[i, i] = H0
    p = eos.w * mu
    state.conn.Y[0] = -dmu_dx1 / (eos.mu_prime * (mu + p))
    state.curv = curvature_from_constraints(state)
    return state


def spatial_riemann(frame, omega, dx, stencil=None, domega=None):
    """Curvature of the spatial connection along the frame directions.

    Rt[c1, c2] = Rt_{hk ij} with (h, k) = SPAIRS[c1], (i, j) = SPAIRS[c2]:

        Rt_hkij = e_i w^h_jk - e_j w^h_ik + w^p_jk w^h_ip - w^p_ik w^h_jp
                  - (w^p_ij - w^p_ji) w^h_pk

    The frame derivatives need the time derivative of omega when b != 0;
    pass it via ``domega`` (monitor use).  Construction-time callers have
    b = 0 and omit it.
    """
    stencil = stencil or StencilConfig()
    a = frame.a
    d_om = np.stack([coordinate_derivative(omega, m, dx, stencil.fd_order)
                     for m in (1, 2, 3)])
    # e_i w^h_jk = a[i, m] d_m om[j, k, h] + B_i d0 om[j, k, h]
    e_om = np.einsum('im...,mjkh...->ijkh...', a, d_om)
    if domega is not None:
        B = frame.bvec()
        e_om = e_om + np.einsum('i...,jkh...->ijkh...', B, domega)

    grid = omega.shape[3:]
    out = np.zeros((3, 3) + grid)
    for c1, (h, k) in enumerate(SPAIRS):
        for c2, (i, j) in enumerate(SPAIRS):
            val = e_om[i, j, k, h] - e_om[j, i, k, h]
            val = val + np.einsum('p...,p...->...', omega[j, k], omega[i, :, h]) \
                      - np.einsum('p...,p...->...', omega[i, k], omega[j, :, h]) \
                      - np.einsum('p...,p...->...', omega[i, j] - omega[j, i],
                                  omega[:, k, h])
            out[c1, c2] = val
    return out


def _spatial_cov_X(frame, omega, X, dx, stencil, dX=None):
    """sd_k X_hj = e_k X_hj - w^p_kh X_pj - w^p_kj X_hp, shape (3, 3, 3, *grid)."""
    a = frame.a
    d_X = np.stack([coordinate_derivative(X, m, dx, stencil.fd_order)
                    for m in (1, 2, 3)])
    eX = np.einsum('km...,mhj...->khj...', a, d_X)
    if dX is not None:
        B = frame.bvec()
        eX = eX + np.einsum('k...,hj...->khj...', B, dX)
    return eX - np.einsum('khp...,pj...->khj...', omega, X) \
              - np.einsum('kjp...,hp...->khj...', omega, X)


def codazzi_rhs(frame, conn, dx, stencil=None, dX=None):
    """Cod[j, h, k] = sd_h X_kj - sd_k X_hj - Y_j (X_hk - X_kh) = R_{j0 hk}."""
    stencil = stencil or StencilConfig()
    sd = _spatial_cov_X(frame, conn.omega, conn.X, dx, stencil, dX=dX)
    Cod = np.einsum('hkj...->jhk...', sd) - np.einsum('khj...->jhk...', sd)
    Cod = Cod - np.einsum('j...,hk...->jhk...', conn.Y,
                          conn.X - np.einsum('hk...->kh...', conn.X))
    return Cod


def curvature_from_constraints(state, stencil=None):
    """Fill the curvature from the Gauss and Codazzi relations and the
    spatial Einstein equations Ricc_hj = rho_hj (vacuum: 0).

    Requires b = 0 (construction happens in untilted slices; tilted exact
    scenarios carry their own closed-form curvature).
    """
    if np.any(state.frame.b != 0.0):
        raise ValueError("curvature_from_constraints requires b = 0 "
                         "(tilted exact scenarios carry closed-form curvature)")
    stencil = stencil or StencilConfig()
    dx = state.dx
    X = state.conn.X
    grid = state.grid_shape

    Rt = spatial_riemann(state.frame, state.conn.omega, dx, stencil)
    Cod = codazzi_rhs(state.frame, state.conn, dx, stencil)

    r_ss = np.zeros((3, 6) + grid)
    r_0s = np.zeros((3, 6) + grid)

    # Gauss: R_hkij = Rt_hkij + X_jk X_ih - X_ik X_jh
    for c1, (h, k) in enumerate(SPAIRS):
        for c2, (i, j) in enumerate(SPAIRS):
            r_ss[c1, 3 + c2] = Rt[c1, c2] + X[j, k] * X[i, h] - X[i, k] * X[j, h]

    # Codazzi: R_hk0j = -R_j0hk, and by pair exchange R_0j hk = -R_j0hk
    for c, (h, k) in enumerate(SPAIRS):
        for j in range(3):
            val = -Cod[j, h, k]
            r_ss[c, j] = val
            r_0s[j, 3 + c] = val

    # Einstein closure: R_0h0j = sum_l R_lhlj - rho_hj
    if state.is_vacuum():
        rho_diag = np.zeros(grid)
    else:
        mu = state.fluid.mu
        rho_diag = 0.5 * (mu - state.fluid.eos.w * mu)
    for h in range(3):
        for j in range(3):
            acc = np.zeros(grid)
            for l in range(3):
                if l == h or l == j:
                    continue
                # R_lhlj: first pair (l, h), last pair (l, j)
                c1 = SP_INDEX[l, h]
                s1 = SP_SIGN[l, h]
                c2 = SP_INDEX[l, j]
                s2 = SP_SIGN[l, j]
                acc += s1 * s2 * r_ss[c1, 3 + c2]
            if h == j:
                acc = acc - rho_diag
            r_0s[h, j] = acc
    return CurvatureField(r_ss, r_0s)


def from_rest_eulerian(data, n, L):
    """Convert rest-frame Eulerian data (h0, K, p0, v = 0) to a grid state.

    The frame is the inverse of the lower-triangular Cholesky coframe of
    h0, the rotation coefficients come from the frame structure functions
    (Koszul formula), X is minus the frame projection of K, and the
    acceleration is set from the rest Euler condition Y = -e(F(p0)).
    """
    h0 = np.asarray(data.h0, dtype=float)
    K = np.asarray(data.K, dtype=float)
    p0 = np.asarray(data.p0, dtype=float)
    grid = (n, n, n)
    if h0.shape != (3, 3) + grid or K.shape != (3, 3) + grid or p0.shape != grid:
        raise ValueError("EulerianData arrays must have shapes (3,3,n,n,n) / (n,n,n)")
    if np.max(np.abs(K - np.einsum('ij...->ji...', K))) > 1e-12:
        raise ValueError("K must be symmetric")
    if np.any(p0 <= 0.0):
        raise NonPositiveDensity("rest data requires p0 > 0")

    hb = np.moveaxis(h0, (0, 1), (-2, -1))
    try:
        Lc = np.linalg.cholesky(hb)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("h0 is not positive definite") from exc
    # coframe theta^i = (L^T)[i, j] dx^j; the frame matrix is its inverse transpose
    a = np.moveaxis(np.linalg.inv(Lc), (-2, -1), (0, 1))

    state = zero_state(n, L, fluid_mu=1.0, eos=data.eos)
    state.frame.a = a
    state.fluid.mu = p0 / data.eos.w

    state.conn.X = -np.einsum('il...,jm...,lm...->ij...', a, a, K)

    stencil = StencilConfig()
    dx = L / n
    d_a = np.stack([coordinate_derivative(a, m, dx, stencil.fd_order)
                    for m in (1, 2, 3)])
    e_a = np.einsum('il...,ljm...->ijm...', a, d_a)      # e_i a[j, m]
    ainv = state.frame.inverse()
    C = np.einsum('ijm...,mp...->ijp...', e_a - np.einsum('ijm...->jim...', e_a), ainv)
    # Koszul: w^p_ij = (C^p_ij - C^j_ip - C^i_jp) / 2, stored as omega[i, j, p]
    omega = 0.5 * (C - np.einsum('ipj...->ijp...', C) - np.einsum('jpi...->ijp...', C))
    state.conn.omega = omega

    _, _, F, _ = eos_eval(data.eos, state.fluid.mu)
    d_F = np.stack([coordinate_derivative(F, m, dx, stencil.fd_order)
                    for m in (1, 2, 3)])
    state.conn.Y = -np.einsum('im...,m...->i...', a, d_F)

    state.curv = curvature_from_constraints(state, stencil)
    return state
