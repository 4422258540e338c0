"""Many-body dispersion from dipole-coupled quantum harmonic oscillators.

Each atom carries an isotropic oscillator of frequency omega_i and static
polarizability alpha_i.  Oscillators couple through the short-range
regularized dipole tensor

    T_ij = grad_i (x) grad_j [ erf(R / (beta * sigma_ij)) / R ],

assembled into a symmetric 3N x 3N matrix whose blocks are

    C_ii = omega_i^2 I   (+ self-image lattice sums for periodic cells)
    C_ij = omega_i omega_j sqrt(alpha_i alpha_j) T_ij.

The interaction energy is the zero-point shift between coupled and
uncoupled spectra, E = 1/2 sum_p sqrt(lambda_p) - 3/2 sum_i omega_i, and
forces follow from the trace formula

    F_i = -1/4 Tr[ Lambda^(-1/2) S^T (grad_i C) S ].

All internal math is in Hartree atomic units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import GeometryError, InputError, InstabilityError, NumericalError
from .periodic import ImageSet
from .species import PerAtomVdwState
from .structure import AtomicStructure
from .units import BOHR_ANGSTROM, HARTREE_EV

EIG_FLOOR = 1e-12  # Ha^2; eigenvalues below -EIG_FLOOR are an instability
_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)
_FAR = 1e30  # Bohr; masks excluded pairs without producing inf * 0 = nan


@dataclass(frozen=True)
class MbdModelConfig:
    """Range-separation constant beta and periodic replica controls.

    beta scales the Gaussian widths inside the erf-regularized Coulomb
    potential.  The default 1.0 (plain Gaussian widths) keeps dense
    sp-carbon geometries just inside the stable regime while preserving
    the collective amplification of chain-chain attraction; smaller
    values (e.g. 0.83, fitted for self-consistently screened inputs)
    produce negative oscillator modes there, and large values (~2.5)
    screen away the many-body enhancement entirely.
    """

    beta: float = 1.0
    replica_shells: int = 3
    shell_energy_tol: float = 1e-5  # eV

    def __post_init__(self):
        if self.beta <= 0:
            raise InputError("beta must be positive")
        if self.replica_shells < 0:
            raise InputError("replica_shells must be >= 0")


@dataclass(frozen=True)
class DipoleCouplingMatrix:
    """Dense coupled-oscillator matrix [Ha^2] with its spectrum."""

    matrix: np.ndarray        # (3N, 3N)
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # orthogonal, columns


def _tensor_scalars(r, s):
    """Radial derivatives g', g'', g''' of g(R) = erf(R/s)/R.

    ``r`` may be an array [Bohr]; ``s`` broadcasts against it.
    """
    zeta = r / s
    e = erf(zeta)
    g = _TWO_OVER_SQRT_PI * np.exp(-zeta * zeta)
    gp = g / (s * r) - e / r**2
    gpp = 2.0 * e / r**3 - 2.0 * g / (s * r**2) - 2.0 * g / s**3
    gppp = (-6.0 * e / r**4 + 6.0 * g / (s * r**3)
            + 4.0 * g / (s**3 * r) + 4.0 * r * g / s**5)
    return gp, gpp, gppp


def _tensor_ab(diff_bohr, s):
    """Damped dipole tensors for difference vectors, shape (..., 3, 3).

    Far field approaches (I - 3 rhat rhat) / R^3.
    """
    r = np.linalg.norm(diff_bohr, axis=-1)
    gp, gpp, _ = _tensor_scalars(r, s)
    rhat = diff_bohr / r[..., None]
    a = gpp - gp / r
    b = gp / r
    eye = np.eye(3)
    return -(a[..., None, None] * rhat[..., :, None] * rhat[..., None, :]
             + b[..., None, None] * eye)


def dipole_tensor(structure: AtomicStructure, states: list[PerAtomVdwState],
                  cfg: MbdModelConfig, i: int, j: int, image=None) -> np.ndarray:
    """Regularized dipole tensor between atoms i and j [Bohr^-3].

    ``image`` is a Cartesian lattice translation [A] added to atom j.
    """
    t = np.zeros(3) if image is None else np.asarray(image, dtype=float)
    if i == j and np.allclose(t, 0.0):
        raise GeometryError("dipole tensor of an atom with itself requires a nonzero image")
    diff = structure.positions[i] - (structure.positions[j] + t)
    r_ang = float(np.linalg.norm(diff))
    if r_ang < structure.overlap_guard:
        raise GeometryError(
            f"atoms {i} and {j} at {r_ang:.4f} A are below the overlap guard")
    sigma_ij = np.hypot(states[i].sigma, states[j].sigma)
    return _tensor_ab(diff / BOHR_ANGSTROM, cfg.beta * sigma_ij)


def sym_eigen(a: np.ndarray):
    """Eigendecomposition of a dense symmetric matrix.

    Returns (eigenvalues ascending, orthonormal eigenvectors as columns).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    if a.size and float(np.abs(a - a.T).max()) > 1e-10 * scale:
        raise InputError("matrix is not symmetric within 1e-10")
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}")
    return vals, vecs


def _image_translations(images: ImageSet | None) -> np.ndarray:
    if images is None:
        return np.zeros((1, 3))
    return images.translations


def assemble_mbd_matrix(structure: AtomicStructure, states: list[PerAtomVdwState],
                        cfg: MbdModelConfig, images: ImageSet | None = None
                        ) -> DipoleCouplingMatrix:
    """Build and diagonalize the 3N x 3N coupled-oscillator matrix.

    Periodic images are lattice-summed into every block, including the
    self-image terms on the diagonal.
    """
    n = len(structure)
    if n < 1:
        raise InputError("assemble_mbd_matrix requires at least one atom")
    if len(states) != n:
        raise InputError("one vdW state per atom required")
    omega = np.array([s.omega for s in states])
    alpha = np.array([s.alpha0_eff for s in states])
    sigma = np.array([s.sigma for s in states])
    coupling = np.outer(omega, omega) * np.sqrt(np.outer(alpha, alpha))
    s_pair = cfg.beta * np.sqrt(sigma[:, None] ** 2 + sigma[None, :] ** 2)

    pos = structure.positions / BOHR_ANGSTROM
    guard = structure.overlap_guard / BOHR_ANGSTROM
    c4 = np.zeros((n, 3, n, 3))
    idx = np.arange(n)
    for t in _image_translations(images) / BOHR_ANGSTROM:
        diff = pos[:, None, :] - (pos[None, :, :] + t)
        r = np.linalg.norm(diff, axis=-1)
        if np.allclose(t, 0.0):
            r[idx, idx] = _FAR  # no self coupling in the home cell
        bad = r < guard
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise GeometryError(
                f"atoms {i} and {j} (image) are below the overlap guard")
        rhat = diff / r[..., None]
        gp, gpp, _ = _tensor_scalars(r, s_pair)
        a = gpp - gp / r
        b = gp / r
        blocks = -(a[..., None, None] * rhat[..., :, None] * rhat[..., None, :]
                   + b[..., None, None] * np.eye(3))
        c4 += (coupling[:, :, None, None] * blocks).transpose(0, 2, 1, 3)
    c4[idx, :, idx, :] += omega[:, None, None] ** 2 * np.eye(3)
    c = c4.reshape(3 * n, 3 * n)
    c = 0.5 * (c + c.T)
    vals, vecs = sym_eigen(c)
    return DipoleCouplingMatrix(c, vals, vecs)


def mbd_energy(structure: AtomicStructure, states: list[PerAtomVdwState],
               cfg: MbdModelConfig, images: ImageSet | None = None) -> float:
    """Many-body dispersion energy [eV]."""
    if len(structure) == 0:
        return 0.0
    if len(structure) == 1 and images is None:
        return 0.0
    coupling = assemble_mbd_matrix(structure, states, cfg, images)
    lam = coupling.eigenvalues
    _check_spectrum(lam)
    omega = np.array([s.omega for s in states])
    e_ha = 0.5 * np.sum(np.sqrt(np.clip(lam, 0.0, None))) - 1.5 * np.sum(omega)
    return float(e_ha) * HARTREE_EV


def _check_spectrum(lam, need_positive=False):
    k = int(np.argmin(lam))
    bad = lam[k] <= EIG_FLOOR if need_positive else lam[k] < -EIG_FLOOR
    if bad:
        raise InstabilityError(
            f"coupled-oscillator mode {k} has eigenvalue {lam[k]:.3e} Ha^2; "
            "geometry is outside the model's validity", mode_index=k)


def mbd_energy_and_forces(structure: AtomicStructure, states: list[PerAtomVdwState],
                          cfg: MbdModelConfig, images: ImageSet | None = None
                          ) -> tuple[float, np.ndarray]:
    """Energy [eV] and forces [eV/A] from a single eigendecomposition."""
    n = len(structure)
    if n == 0 or (n == 1 and images is None):
        return 0.0, np.zeros((n, 3))
    coupling = assemble_mbd_matrix(structure, states, cfg, images)
    lam, vecs = coupling.eigenvalues, coupling.eigenvectors
    _check_spectrum(lam, need_positive=True)
    omega = np.array([s.omega for s in states])
    e_ha = 0.5 * np.sum(np.sqrt(lam)) - 1.5 * np.sum(omega)
    forces = _trace_forces(structure, states, cfg, images, lam, vecs)
    return float(e_ha) * HARTREE_EV, forces


def mbd_forces(structure: AtomicStructure, states: list[PerAtomVdwState],
               cfg: MbdModelConfig, images: ImageSet | None = None) -> np.ndarray:
    """Analytic MBD forces via the trace formula [eV/A], shape (N, 3)."""
    n = len(structure)
    if n == 0 or (n == 1 and images is None):
        return np.zeros((n, 3))
    coupling = assemble_mbd_matrix(structure, states, cfg, images)
    lam, vecs = coupling.eigenvalues, coupling.eigenvectors
    _check_spectrum(lam, need_positive=True)
    return _trace_forces(structure, states, cfg, images, lam, vecs)


def _trace_forces(structure, states, cfg, images, lam, vecs):
    n = len(structure)
    # W = C^(-1/2); the trace reduces to an elementwise contraction with it
    w = (vecs * lam**-0.5) @ vecs.T
    wp = w.reshape(n, 3, n, 3).transpose(0, 2, 1, 3)  # (i, j, a, b)

    omega = np.array([s.omega for s in states])
    alpha = np.array([s.alpha0_eff for s in states])
    sigma = np.array([s.sigma for s in states])
    coupl = np.outer(omega, omega) * np.sqrt(np.outer(alpha, alpha))
    s_pair = cfg.beta * np.sqrt(sigma[:, None] ** 2 + sigma[None, :] ** 2)

    pos = structure.positions / BOHR_ANGSTROM
    idx = np.arange(n)
    trw = np.einsum("ijaa->ij", wp)
    grad = np.zeros((n, 3))
    for t in _image_translations(images) / BOHR_ANGSTROM:
        diff = pos[:, None, :] - (pos[None, :, :] + t)
        r = np.linalg.norm(diff, axis=-1)
        # diagonal entries (home-cell self pairs and position-independent
        # self-image blocks) must not contribute; push them to "far away"
        r[idx, idx] = _FAR
        rhat = diff / r[..., None]
        gp, gpp, gppp = _tensor_scalars(r, s_pair)
        a = gpp - gp / r
        ap = gppp - gpp / r + gp / r**2
        bp = gpp / r - gp / r**2
        q = np.einsum("ijab,ija,ijb->ij", wp, rhat, rhat)
        wr = np.einsum("ijab,ijb->ija", wp, rhat)   # W rhat
        wl = np.einsum("ijab,ija->ijb", wp, rhat)   # W^T rhat
        # contraction of dT/dr with the (generally non-symmetric) W block;
        # dT itself is symmetric in (a, b)
        coef = ap * q + bp * trw - 2.0 * a * q / r
        gvec = -(coef[..., None] * rhat + (a / r)[..., None] * (wr + wl))
        grad += np.sum(coupl[..., None] * gvec, axis=1)
    # F_k = -1/2 sum_{j, images} K dT . W  (in Ha/Bohr)
    forces = -0.5 * grad
    return forces * (HARTREE_EV / BOHR_ANGSTROM)
