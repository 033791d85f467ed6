"""Field containers, index conventions, and pointwise frame algebra.

Conventions (see docs/conventions.md for the full calibration):

* The orthonormal-frame metric is eta = diag(-1, 1, 1, 1).  Raising or
  lowering a frame index flips the sign on 0 and is the identity on 1..3.
* ``FrameField.a[i, l]`` holds the frame expansion coefficients: the
  spatial frame legs are  e_i = a[i, l] (d/dx^l - b_l d/dx^0)  and
  e_0 = d/dx^0.  The dual coframe matrix is A = a^{-1}
  (``frame_matrix``), and B_i = -a[i, l] b_l is the time-tilt vector
  that controls hyperbolicity (|B| < 1).
* ``ConnectionField.omega[i, j, p]`` holds the spatial rotation
  coefficient with direction i, slot j, upper index p; it is
  antisymmetric under (j, p) exchange.  X[i, j] is the direction-i,
  slot-j mixed coefficient (extrinsic-curvature type, not assumed
  symmetric; X = +H on an expanding isotropic background).  Y[i] is the
  acceleration; Y = 0 identically in vacuum.
* Curvature is stored with both antisymmetric pairs compressed:
  ``r_ss[c, P]`` = R_{hk,lm} with (h,k) = SPAIRS[c] and (l,m) =
  LPAIRS[P]; ``r_0s[h, P]`` = R_{0h,lm}.  First-pair exchange with the
  time leg (R_{h0..} = -R_{0h..}) is applied on evaluation; the pair
  exchange symmetry R_{hk,lm} = R_{lm,hk} and the cyclic identity are
  NOT enforced and are monitored.

Grid arrays carry their component indices first and the three periodic
grid axes last, ordered so that x^1 is the fastest (last) axis; the
derivative along coordinate axis m is a numpy operation on axis -m.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .eos import Eos, eos_eval
from .errors import SingularFrame

DET_FLOOR = 1e-12

# Antisymmetric pair bases.  LPAIRS indexes the last curvature pair with
# labels 0..3 (0 = time); SPAIRS indexes spatial pairs with 0-based
# spatial labels.
LPAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
SPAIRS = ((0, 1), (0, 2), (1, 2))

LP_INDEX = np.full((4, 4), -1, dtype=int)
LP_SIGN = np.zeros((4, 4))
for _P, (_l, _m) in enumerate(LPAIRS):
    LP_INDEX[_l, _m] = _P
    LP_INDEX[_m, _l] = _P
    LP_SIGN[_l, _m] = 1.0
    LP_SIGN[_m, _l] = -1.0

SP_INDEX = np.full((3, 3), -1, dtype=int)
SP_SIGN = np.zeros((3, 3))
for _c, (_h, _k) in enumerate(SPAIRS):
    SP_INDEX[_h, _k] = _c
    SP_INDEX[_k, _h] = _c
    SP_SIGN[_h, _k] = 1.0
    SP_SIGN[_k, _h] = -1.0


def _batched(mat):
    """(3, 3, grid) -> (grid, 3, 3) view for numpy.linalg."""
    return np.moveaxis(mat, (0, 1), (-2, -1))


def _unbatched(mat):
    return np.moveaxis(mat, (-2, -1), (0, 1))


@dataclass
class FrameField:
    """Frame coefficients a[i, l] and coordinate tilt covector b[l]."""

    a: np.ndarray   # (3, 3, *grid)
    b: np.ndarray   # (3, *grid)

    def det(self):
        return np.linalg.det(_batched(self.a))

    def inverse(self):
        """Dual coframe matrix A = a^{-1} (A[i, l] with a[i, k] A[k, l] = delta)."""
        return _unbatched(np.linalg.inv(_batched(self.a)))

    def bvec(self):
        """Tilt vector B_i = -a[i, l] b_l."""
        return -np.einsum('il...,l...->i...', self.a, self.b)

    def copy(self):
        return FrameField(self.a.copy(), self.b.copy())


@dataclass
class ConnectionField:
    """Rotation coefficients omega[i, j, p], X[i, j], Y[i]."""

    omega: np.ndarray  # (3, 3, 3, *grid), antisymmetric in (axis1, axis2)
    X: np.ndarray      # (3, 3, *grid)
    Y: np.ndarray      # (3, *grid)

    def omega_antisym_violation(self):
        return float(np.max(np.abs(self.omega + np.swapaxes(self.omega, 1, 2))))

    def copy(self):
        return ConnectionField(self.omega.copy(), self.X.copy(), self.Y.copy())


@dataclass
class CurvatureField:
    """Independent Riemann components, both antisymmetric pairs packed."""

    r_ss: np.ndarray   # (3, 6, *grid)
    r_0s: np.ndarray   # (3, 6, *grid)

    def first(self, alpha, beta):
        """Evaluate R_{alpha beta, P} for frame labels alpha, beta in 0..3.

        Returns a (6, *grid) array (a fresh sign-applied copy when the
        stored orientation is flipped, a view otherwise), or None when
        alpha == beta.
        """
        if alpha == beta:
            return None
        if alpha == 0:
            return self.r_0s[beta - 1]
        if beta == 0:
            return -self.r_0s[alpha - 1]
        c = SP_INDEX[alpha - 1, beta - 1]
        s = SP_SIGN[alpha - 1, beta - 1]
        return self.r_ss[c] if s > 0 else -self.r_ss[c]

    def last_unpack(self, row):
        """Expand a packed (6, *grid) row to the full antisymmetric (4, 4, *grid)."""
        out = np.zeros((4, 4) + row.shape[1:], dtype=row.dtype)
        for P, (l, m) in enumerate(LPAIRS):
            out[l, m] = row[P]
            out[m, l] = -row[P]
        return out

    def copy(self):
        return CurvatureField(self.r_ss.copy(), self.r_0s.copy())


@dataclass
class FluidField:
    """Energy density; pressure and the potential F derive through the EOS."""

    mu: np.ndarray     # (*grid,)
    eos: Eos

    def pressure(self):
        return self.eos.w * self.mu

    def copy(self):
        return FluidField(self.mu.copy(), self.eos)


@dataclass
class GridState:
    """All fields sampled on a uniform periodic 3-torus lattice."""

    n: int
    L: float
    t: float
    frame: FrameField
    conn: ConnectionField
    curv: CurvatureField
    fluid: Optional[FluidField] = None

    @property
    def dx(self):
        return self.L / self.n

    @property
    def grid_shape(self):
        return (self.n, self.n, self.n)

    def is_vacuum(self):
        return self.fluid is None

    def copy(self):
        return GridState(self.n, self.L, self.t, self.frame.copy(),
                         self.conn.copy(), self.curv.copy(),
                         None if self.fluid is None else self.fluid.copy())

    def evolved_arrays(self):
        """The arrays advanced by the integrator, in a fixed order."""
        arrays = [self.frame.a, self.frame.b, self.conn.omega, self.conn.X,
                  self.curv.r_ss, self.curv.r_0s]
        if self.fluid is not None:
            arrays += [self.conn.Y, self.fluid.mu]
        return arrays


def zero_state(n, L, t=0.0, fluid_mu=None, eos=None):
    """Allocate an all-zero state (frame set to the identity)."""
    g = (n, n, n)
    a = np.zeros((3, 3) + g)
    for i in range(3):
        a[i, i] = 1.0
    frame = FrameField(a, np.zeros((3,) + g))
    conn = ConnectionField(np.zeros((3, 3, 3) + g), np.zeros((3, 3) + g),
                           np.zeros((3,) + g))
    curv = CurvatureField(np.zeros((3, 6) + g), np.zeros((3, 6) + g))
    fluid = None
    if fluid_mu is not None:
        fluid = FluidField(np.full(g, float(fluid_mu)), eos)
    return GridState(n, float(L), float(t), frame, conn, curv, fluid)


def grid_coordinates(n, L):
    """Coordinate arrays (x1, x2, x3), each of shape (n, n, n).

    x^1 varies along the last axis, x^2 along the middle, x^3 along the
    first, matching the storage convention.
    """
    x = np.arange(n) * (L / n)
    x3, x2, x1 = np.meshgrid(x, x, x, indexing='ij')
    return x1, x2, x3


def spatial_metric(frame):
    """Contravariant spatial metric h^{jh} = a a^T - B B^T, shape (3, 3, *grid)."""
    h = np.einsum('jl...,hl...->jh...', frame.a, frame.a)
    B = frame.bvec()
    return h - np.einsum('j...,h...->jh...', B, B)


def frame_matrix(frame):
    """Return (A, B): the coframe matrix A = a^{-1} and tilt B_i = -a[i, l] b_l."""
    det = frame.det()
    if np.any(np.abs(det) <= DET_FLOOR):
        raise SingularFrame(f"|det a| <= {DET_FLOOR:g} at some grid point")
    return frame.inverse(), frame.bvec()


@dataclass
class StateReport:
    """Diagnostic summary from validate_state."""

    min_abs_det_a: float
    min_eig_h: float
    max_abs_B: float
    min_mu: Optional[float]
    omega_antisym: float
    vacuum_Y_violation: Optional[float]
    finite: bool
    problems: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.problems


def validate_state(state):
    """Check every type invariant; diagnostic, never raises."""
    problems = []
    det = state.frame.det()
    min_det = float(np.min(np.abs(det)))
    if min_det <= DET_FLOOR:
        problems.append(f"frame singular: min |det a| = {min_det:.3e}")

    h = spatial_metric(state.frame)
    eig = np.linalg.eigvalsh(_batched(h))
    min_eig = float(np.min(eig))
    if min_eig <= 0.0:
        problems.append(f"spatial metric not positive definite: min eig = {min_eig:.3e}")

    B = state.frame.bvec()
    max_B = float(np.max(np.sqrt(np.einsum('i...,i...->...', B, B))))

    min_mu = None
    if state.fluid is not None:
        min_mu = float(np.min(state.fluid.mu))
        if min_mu <= 0.0:
            problems.append(f"non-positive density: min mu = {min_mu:.3e}")

    omega_antisym = state.conn.omega_antisym_violation()
    if omega_antisym > 1e-12:
        problems.append(f"omega antisymmetry violated by {omega_antisym:.3e}")

    vac_Y = None
    if state.is_vacuum():
        vac_Y = float(np.max(np.abs(state.conn.Y)))
        if vac_Y != 0.0:
            problems.append(f"vacuum gauge violated: max |Y| = {vac_Y:.3e}")

    finite = all(np.all(np.isfinite(arr)) for arr in state.evolved_arrays())
    if not finite:
        problems.append("non-finite field values")

    return StateReport(min_det, min_eig, max_B, min_mu, omega_antisym, vac_Y,
                       finite, problems)


def eta_sign(alpha):
    """eta_{alpha alpha}: -1 for the time leg, +1 for spatial legs."""
    return -1.0 if alpha == 0 else 1.0


def replace_time(state, t):
    return replace(state, t=t)
