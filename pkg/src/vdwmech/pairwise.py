"""Pairwise Tkatchenko-Scheffler dispersion energy and analytic forces.

The energy is an additive sum over atom pairs (and periodic images),

    E = - sum_{pairs} f_damp(R) * C6_ij / R^6,

with a Fermi-type damping switched on the scaled sum of effective vdW
radii.  All internal math is in Hartree atomic units; energies come back
in eV and forces in eV/A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import GeometryError, InputError
from .periodic import ImageSet
from .species import PerAtomVdwState
from .structure import AtomicStructure
from .units import BOHR_ANGSTROM, HARTREE_EV

# no cutoff below this size unless one is configured
_AUTO_CUTOFF_NATOMS = 2000
_AUTO_CUTOFF_A = 40.0


@dataclass(frozen=True)
class PwModelConfig:
    """Damping steepness d, radius scaling gamma, optional cutoff [A]."""

    d: float = 20.0
    gamma: float = 0.94
    cutoff: float | None = None

    def __post_init__(self):
        if self.d <= 0 or self.gamma <= 0:
            raise InputError("damping parameters must be positive")
        if self.cutoff is not None and self.cutoff <= 0:
            raise InputError("cutoff must be positive")

    def effective_cutoff(self, n_atoms: int) -> float | None:
        if self.cutoff is not None:
            return self.cutoff
        return _AUTO_CUTOFF_A if n_atoms > _AUTO_CUTOFF_NATOMS else None


def fermi_damping(r, s_vdw, d):
    """Fermi-type damping 1 / (1 + exp(-d (r/s_vdw - 1))); in (0, 1)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InputError("distance must be non-negative")
    if not s_vdw > 0 or not d > 0:
        raise InputError("s_vdw and d must be positive")
    out = expit(d * (r / s_vdw - 1.0))
    return float(out) if out.ndim == 0 else out


def combine_c6(state_i: PerAtomVdwState, state_j: PerAtomVdwState) -> float:
    """Combination rule for the pair coefficient C6_ij [Ha*Bohr^6]."""
    ci, cj = state_i.c6_eff, state_j.c6_eff
    ai, aj = state_i.alpha0_eff, state_j.alpha0_eff
    return 2.0 * ci * cj / ((aj / ai) * ci + (ai / aj) * cj)


def _pair_image_terms(structure: AtomicStructure, images: ImageSet | None):
    """Enumerate each unordered (pair, image) interaction exactly once.

    Yields (i_idx, j_idx, diff) with diff = R_i - (R_j + t) in Angstrom.
    Self pairs (i == j) appear only for nonzero translations.
    """
    pos = structure.positions
    n = len(pos)
    iu, ju = np.triu_indices(n, k=1)
    yield iu, ju, pos[iu] - pos[ju]
    if images is None:
        return
    trans = images.translations
    nz = trans[images.shell_index > 0]
    # one representative per +-t pair: first nonzero component positive
    key = np.round(nz / max(1e-9, np.abs(nz).max() or 1.0), 9) if len(nz) else nz
    half = []
    for t, k in zip(nz, key):
        for c in k:
            if c > 0:
                half.append(t)
                break
            if c < 0:
                break
    ii, jj = np.mgrid[0:n, 0:n]
    ii, jj = ii.ravel(), jj.ravel()
    for t in half:
        yield ii, jj, pos[ii] - (pos[jj] + t)


def _pair_arrays(structure, states, cfg, images):
    """Flattened per-term arrays (R [Bohr], C6 [a.u.], S_vdw [Bohr], i, j, u)."""
    n = len(structure)
    c6 = np.array([s.c6_eff for s in states])
    alpha = np.array([s.alpha0_eff for s in states])
    rv = np.array([s.rvdw_eff for s in states])
    cutoff = cfg.effective_cutoff(n)

    idx_i, idx_j, diffs = [], [], []
    for ii, jj, d in _pair_image_terms(structure, images):
        idx_i.append(ii)
        idx_j.append(jj)
        diffs.append(d)
    ii = np.concatenate(idx_i)
    jj = np.concatenate(idx_j)
    d = np.concatenate(diffs)
    r_ang = np.linalg.norm(d, axis=1)
    if len(r_ang) and r_ang.min() < structure.overlap_guard:
        k = int(r_ang.argmin())
        raise GeometryError(
            f"pair ({ii[k]}, {jj[k]}) at {r_ang[k]:.4f} A violates the overlap guard")
    if cutoff is not None:
        keep = r_ang <= cutoff
        ii, jj, d, r_ang = ii[keep], jj[keep], d[keep], r_ang[keep]

    r = r_ang / BOHR_ANGSTROM
    c6ij = 2.0 * c6[ii] * c6[jj] / (
        (alpha[jj] / alpha[ii]) * c6[ii] + (alpha[ii] / alpha[jj]) * c6[jj])
    s_vdw = cfg.gamma * (rv[ii] + rv[jj])
    return r, c6ij, s_vdw, ii, jj, d / BOHR_ANGSTROM


def pw_energy(structure: AtomicStructure, states: list[PerAtomVdwState],
              cfg: PwModelConfig, images: ImageSet | None = None) -> float:
    """Pairwise dispersion energy [eV]; images extend the sum periodically."""
    if len(structure) != len(states):
        raise InputError("one vdW state per atom required")
    if len(structure) < 2 and images is None:
        return 0.0
    r, c6ij, s_vdw, _, _, _ = _pair_arrays(structure, states, cfg, images)
    if len(r) == 0:
        return 0.0
    f = expit(cfg.d * (r / s_vdw - 1.0))
    e_ha = -np.sum(f * c6ij / r**6)
    return float(e_ha) * HARTREE_EV


def pw_forces(structure: AtomicStructure, states: list[PerAtomVdwState],
              cfg: PwModelConfig, images: ImageSet | None = None) -> np.ndarray:
    """Analytic forces -dE/dR [eV/A], shape (N, 3)."""
    if len(structure) != len(states):
        raise InputError("one vdW state per atom required")
    n = len(structure)
    forces = np.zeros((n, 3))
    if n < 2 and images is None:
        return forces
    r, c6ij, s_vdw, ii, jj, d_bohr = _pair_arrays(structure, states, cfg, images)
    if len(r) == 0:
        return forces
    f = expit(cfg.d * (r / s_vdw - 1.0))
    dfdr = f * (1.0 - f) * cfg.d / s_vdw
    # e(R) = -f C6 / R^6  ->  e'(R)
    dedr = -c6ij / r**6 * (dfdr - 6.0 * f / r)
    w = dedr / r  # per-term weight on the difference vector
    for c in range(3):
        contrib = w * d_bohr[:, c]
        forces[:, c] -= np.bincount(ii, weights=contrib, minlength=n)
        forces[:, c] += np.bincount(jj, weights=contrib, minlength=n)
    return forces * (HARTREE_EV / BOHR_ANGSTROM)
