"""Principal time blocks, their closed-form solves, and hyperbolicity checks.

After the frame expansion e_k = a[k, m] (d_m - b_m d_0) is inserted into
the evolution equations, the coordinate time derivatives couple through
small symmetric blocks:

* the 6-dim Riemann-pair block per fixed last pair, over the unknowns
  (R_(12), R_(13), R_(23), R_01, R_02, R_03):  [[I, C], [C^T, I]] with
  C[(hk), j] = B_k delta_jh - B_h delta_jk; eigenvalues 1 and
  1 +- |B| (each twice);
* the 4-dim Ricci-type block (1, -B; -B, I), used by the hyperbolicity
  checker; eigenvalues 1, 1 +- |B|;
* the fluid block per row h over (X_h1, X_h2, X_h3, Y_h):
  [[I, -B], [-B^T, mu']], positive definite iff mu' > |B|^2.

All three invert in closed form (rank-2 corrections of the identity).
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularFrame, SingularPrincipal
from .fields import DET_FLOOR, SPAIRS, frame_matrix

PD_FLOOR = 1e-10
FOSH_THRESHOLD = 1e-8
DENSE_FALLBACK_B = 0.9

BLOCK_IDS = ("ricci4", "riemann6", "fluid4")


@dataclass
class PrincipalBlock:
    block_id: str
    m0: np.ndarray
    mk: list              # three symmetric matrices, coefficients of d/dx^m
    B: np.ndarray         # tilt vector at the point
    mu_prime: float = 1.0


def _pair_coupling(B):
    """C[(hk), j] = B_k delta_jh - B_h delta_jk over the SPAIRS basis."""
    C = np.zeros((3, 3))
    for c, (h, k) in enumerate(SPAIRS):
        C[c, h] += B[k]
        C[c, k] -= B[h]
    return C


def principal_time_block(frame, eos_mu_prime, block_id, point):
    """Assemble the m0 and mk matrices of one block at a grid point."""
    if block_id not in BLOCK_IDS:
        raise ValueError(f"unknown block_id {block_id!r}")
    idx = (Ellipsis,) + tuple(point)
    a = frame.a[idx]
    if abs(np.linalg.det(a)) <= DET_FLOOR:
        raise SingularFrame("frame matrix singular at requested point")
    B = -a @ frame.b[idx]

    if block_id == "riemann6":
        C = _pair_coupling(B)
        m0 = np.block([[np.eye(3), C], [C.T, np.eye(3)]])
        mk = []
        for m in range(3):
            M = np.zeros((6, 6))
            for c, (h, k) in enumerate(SPAIRS):
                M[c, 3 + h] += -a[k, m]
                M[c, 3 + k] += a[h, m]
            M[3:, :3] = M[:3, 3:].T
            mk.append(M)
    elif block_id == "ricci4":
        m0 = np.eye(4)
        m0[0, 1:] = -B
        m0[1:, 0] = -B
        mk = []
        for m in range(3):
            M = np.zeros((4, 4))
            M[0, 1:] = a[:, m]
            M[1:, 0] = a[:, m]
            mk.append(M)
    else:  # fluid4: (X_h1, X_h2, X_h3, Y_h)
        m0 = np.eye(4) * 1.0
        m0[3, 3] = eos_mu_prime
        m0[:3, 3] = -B
        m0[3, :3] = -B
        mk = []
        for m in range(3):
            M = np.zeros((4, 4))
            M[:3, 3] = a[:, m]
            M[3, :3] = a[:, m]
            mk.append(M)
    return PrincipalBlock(block_id, m0, mk, B, float(eos_mu_prime))


def solve_time_block(block, rhs):
    """Solve m0 x = rhs using the closed-form rank-2 inverse.

    Falls back to a dense factorization for |B| > 0.9 where the
    closed form loses accuracy.
    """
    B = block.B
    beta = float(B @ B)
    rhs = np.asarray(rhs, dtype=float)

    if block.block_id == "fluid4":
        gap = block.mu_prime - beta
    else:
        gap = 1.0 - beta
    if gap <= PD_FLOOR:
        raise SingularPrincipal(f"m0 not positive definite (gap = {gap:.3e})")

    if np.sqrt(beta) > DENSE_FALLBACK_B:
        return np.linalg.solve(block.m0, rhs)

    if block.block_id == "riemann6":
        r_s, r_t = rhs[:3], rhs[3:]
        C = _pair_coupling(B)
        w = r_t - C.T @ r_s
        u_t = (w - B * (B @ w)) / (1.0 - beta)
        u_s = r_s - C @ u_t
        return np.concatenate([u_s, u_t])
    if block.block_id == "ricci4":
        r0, rv = rhs[0], rhs[1:]
        u0 = (r0 + B @ rv) / (1.0 - beta)
        return np.concatenate([[u0], rv + B * u0])
    # fluid4
    rX, rY = rhs[:3], rhs[3]
    uY = (rY + B @ rX) / (block.mu_prime - beta)
    return np.concatenate([rX + B * uY, [uY]])


@dataclass
class FoshReport:
    min_eigenvalue: float
    location: tuple
    max_abs_B: float
    passed: bool
    warning: bool
    symmetric: bool

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        tag = " (warning: near-degenerate)" if self.warning and self.passed else ""
        return (f"fosh_check: min m0 eigenvalue {self.min_eigenvalue:.6e} at grid "
                f"{self.location}, max |B| = {self.max_abs_B:.6e} -> {status}{tag}")


def fosh_check(state):
    """Positivity of every principal block over the whole grid.

    Structural symmetry of m0 and each mk is asserted exactly at the
    worst point; eigenvalue minima use the closed forms 1 - |B| and, for
    the fluid block, ((1 + mu') - sqrt((mu' - 1)^2 + 4 |B|^2)) / 2.
    """
    B = state.frame.bvec()
    absB = np.sqrt(np.einsum('i...,i...->...', B, B))
    max_B = float(np.max(absB))
    loc = np.unravel_index(int(np.argmax(absB)), absB.shape)

    min_eig = 1.0 - max_B
    mu_prime = 1.0
    if state.fluid is not None:
        mu_prime = state.fluid.eos.mu_prime
        disc = np.sqrt((mu_prime - 1.0) ** 2 + 4.0 * max_B ** 2)
        min_eig = min(min_eig, 0.5 * ((1.0 + mu_prime) - disc))

    block_ids = ["riemann6", "ricci4"] + ([] if state.fluid is None else ["fluid4"])
    symmetric = True
    for bid in block_ids:
        blk = principal_time_block(state.frame, mu_prime, bid, loc)
        symmetric &= bool(np.array_equal(blk.m0, blk.m0.T))
        for M in blk.mk:
            symmetric &= bool(np.array_equal(M, M.T))

    passed = (min_eig > FOSH_THRESHOLD) and symmetric
    warning = min_eig < 0.1
    return FoshReport(float(min_eig), tuple(int(i) for i in loc), max_B,
                      passed, warning, symmetric)


def char_speeds(state):
    """Maximal coordinate light and sound speeds over the grid.

    Frame-space speeds (1 for light, 1/sqrt(mu') for sound) convert to
    coordinate speeds through the frame factor ||a|| / (1 - |B|).
    """
    B = state.frame.bvec()
    absB = np.sqrt(np.einsum('i...,i...->...', B, B))
    if np.any(absB >= 1.0):
        raise SingularPrincipal(f"|B| >= 1 somewhere (max {float(np.max(absB)):.3e})")
    aaT = np.einsum('il...,jl...->ij...', state.frame.a, state.frame.a)
    anorm = np.sqrt(np.linalg.eigvalsh(np.moveaxis(aaT, (0, 1), (-2, -1)))[..., -1])
    v_light = float(np.max(anorm / (1.0 - absB)))
    if state.fluid is None:
        return v_light, 0.0
    return v_light, v_light * state.fluid.eos.sound_speed()
