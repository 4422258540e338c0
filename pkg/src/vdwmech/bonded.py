"""Harmonic covalent force field: stretch, bend, and torsion terms.

    E = sum 1/2 k_r (r - r0)^2 + sum 1/2 k_theta (theta - theta0)^2
        + sum 1/2 k_phi (phi - phi0)^2

Reference values r0 / theta0 / phi0 are captured per term from the input
structure at detection time, so the detected geometry is the energy
minimum.  Default force constants were fitted against tight-binding
energies of perturbed carbon nanostructures.

Periodic bonds carry explicit integer lattice offsets rather than using
minimum-image lookups: small cells (e.g. a single polyethylene repeat)
bond an atom to the same neighbor through both of two opposite images,
which minimum image cannot represent, and fixed offsets keep the energy
smooth under cell strain.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations, product

import numpy as np

from .errors import DegenerateGeometryError, InputError, ParseError, TopologyError
from .structure import AtomicStructure

K_R_DEFAULT = 35.0505      # eV/A^2
K_THETA_DEFAULT = 6.6069   # eV/rad^2
K_PHI_DEFAULT = 0.5361     # eV/rad^2

DEFAULT_BOND_CUTOFFS = {("C", "C"): 1.8, ("C", "H"): 1.3}

# chemical sanity guard: max coordination before detection fails
_MAX_BONDS = {"C": 4, "H": 1}

_SIN_FLOOR = 1e-8
_DIHEDRAL_COLLINEAR_TOL = 1e-6


@dataclass(frozen=True)
class HarmonicTopology:
    """Bond/angle/dihedral lists with per-term reference geometry.

    Offsets are integer lattice translations applied to the non-reference
    atoms of a term (bond: atom j; angle: atoms i, k about center j;
    dihedral: atoms i, k, l about j).  All zero for non-periodic systems.
    """

    bonds: np.ndarray           # (B, 2) int
    bond_r0: np.ndarray         # (B,) A
    angles: np.ndarray          # (A, 3) int, central atom second
    angle_theta0: np.ndarray    # (A,) rad
    dihedrals: np.ndarray       # (D, 4) int
    dihedral_phi0: np.ndarray   # (D,) rad
    bond_offsets: np.ndarray | None = None       # (B, 3) int
    angle_offsets: np.ndarray | None = None      # (A, 2, 3) int
    dihedral_offsets: np.ndarray | None = None   # (D, 3, 3) int
    k_r: float = K_R_DEFAULT
    k_theta: float = K_THETA_DEFAULT
    k_phi: float = K_PHI_DEFAULT
    include_dihedrals: bool = True

    def __post_init__(self):
        def setarr(name, value, dtype, shape):
            object.__setattr__(self, name,
                               np.asarray(value, dtype).reshape(shape))
        setarr("bonds", self.bonds, int, (-1, 2))
        setarr("bond_r0", self.bond_r0, float, (-1,))
        setarr("angles", self.angles, int, (-1, 3))
        setarr("angle_theta0", self.angle_theta0, float, (-1,))
        setarr("dihedrals", self.dihedrals, int, (-1, 4))
        setarr("dihedral_phi0", self.dihedral_phi0, float, (-1,))
        for name, count, width in (("bond_offsets", len(self.bonds), 1),
                                   ("angle_offsets", len(self.angles), 2),
                                   ("dihedral_offsets", len(self.dihedrals), 3)):
            val = getattr(self, name)
            if val is None:
                val = np.zeros((count, width, 3), int)
            setarr(name, val, int, (count, width, 3))

        # atoms carrying the offsets, per term kind (the other atom is the
        # zero-offset reference)
        layouts = {"bond": (1,), "angle": (0, 2), "dihedral": (0, 2, 3)}
        for arr, offs, ref, what in (
                (self.bonds, self.bond_offsets, self.bond_r0, "bond"),
                (self.angles, self.angle_offsets, self.angle_theta0, "angle"),
                (self.dihedrals, self.dihedral_offsets, self.dihedral_phi0, "dihedral")):
            if len(arr) != len(ref):
                raise InputError(f"{what} index and reference lists differ in length")
            carriers = layouts[what]
            for row, off in zip(arr, offs):
                # atom instances (index, lattice offset) must be distinct
                inst = []
                at = 0
                for col in range(len(row)):
                    if col in carriers:
                        inst.append((int(row[col]), tuple(int(x) for x in off[at])))
                        at += 1
                    else:
                        inst.append((int(row[col]), (0, 0, 0)))
                if len(set(inst)) != len(inst):
                    raise InputError(f"{what} {row.tolist()} repeats an atom instance")
        if np.any(self.bond_r0 <= 0):
            raise InputError("bond references must be positive")
        if len(self.angle_theta0) and not np.all(
                (self.angle_theta0 > 0) & (self.angle_theta0 < np.pi + 1e-12)):
            raise InputError("angle references must lie in (0, pi]")

    def without_dihedrals(self) -> "HarmonicTopology":
        return replace(self, include_dihedrals=False)

    @property
    def n_terms(self):
        return len(self.bonds), len(self.angles), len(self.dihedrals)


def _cellmat(structure):
    return structure.cell.matrix if structure.cell is not None else None


def _shift(offsets, cellmat):
    """Cartesian translations for integer offset rows; zero without a cell."""
    if cellmat is None:
        return 0.0
    return offsets @ cellmat


# -------------------------------------------------------------- geometry

def bond_length(structure, i, j, offset=(0, 0, 0)) -> float:
    d = structure.positions[i] - structure.positions[j] \
        - _shift(np.asarray(offset, float), _cellmat(structure))
    return float(np.linalg.norm(d))


def bond_angle(structure, i, j, k, offset_i=(0, 0, 0), offset_k=(0, 0, 0)) -> float:
    """Angle at j, stable near 0 and pi via atan2."""
    cm = _cellmat(structure)
    u = structure.positions[i] + _shift(np.asarray(offset_i, float), cm) \
        - structure.positions[j]
    w = structure.positions[k] + _shift(np.asarray(offset_k, float), cm) \
        - structure.positions[j]
    return float(np.arctan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w)))


def dihedral_angle(structure, i, j, k, l, offsets=None) -> float:
    """Signed torsion about the j-k bond, in (-pi, pi]."""
    cm = _cellmat(structure)
    off = np.zeros((3, 3)) if offsets is None else np.asarray(offsets, float)
    pi_ = structure.positions[i] + _shift(off[0], cm)
    pj = structure.positions[j]
    pk = structure.positions[k] + _shift(off[1], cm)
    pl = structure.positions[l] + _shift(off[2], cm)
    b_ij = pi_ - pj
    b_kj = pk - pj
    b_lk = pl - pk
    n1 = np.cross(b_ij, b_kj)
    n2 = np.cross(b_kj, -b_lk)
    nb2 = np.linalg.norm(b_kj)
    if np.linalg.norm(n1) < _DIHEDRAL_COLLINEAR_TOL * nb2 * np.linalg.norm(b_ij) or \
       np.linalg.norm(n2) < _DIHEDRAL_COLLINEAR_TOL * nb2 * np.linalg.norm(b_lk):
        raise DegenerateGeometryError(
            f"dihedral {i}-{j}-{k}-{l} has a collinear inner bond")
    return float(np.arctan2(np.dot(np.cross(n1, n2), b_kj / nb2), np.dot(n1, n2)))


# -------------------------------------------------------------- detection

def _neighbor_table(structure, cutoffs):
    """Per-atom neighbor entries [(j, offset int-tuple), ...] and the bond list."""
    n = len(structure)
    cut = {}
    maxcut = 0.0
    for (a, b), c in cutoffs.items():
        if c <= 0:
            raise InputError("bond cutoffs must be positive")
        cut[(a, b)] = c
        cut[(b, a)] = c
        maxcut = max(maxcut, c)

    offsets = [(0, 0, 0)]
    cm = _cellmat(structure)
    if cm is not None:
        reach = []
        for ax in range(3):
            if structure.cell.periodic[ax]:
                height = np.linalg.norm(cm[ax])
                reach.append(int(np.ceil(maxcut / height)))
            else:
                reach.append(0)
        offsets = list(product(*(range(-r, r + 1) for r in reach)))

    # species-pair cutoff matrix; pairs without a cutoff never bond
    symbols = sorted(set(structure.species))
    code = {s: k for k, s in enumerate(symbols)}
    codes = np.array([code[s] for s in structure.species])
    table = np.full((len(symbols), len(symbols)), -1.0)
    for (a, b), c in cut.items():
        if a in code and b in code:
            table[code[a], code[b]] = c
    cutmat = table[codes[:, None], codes[None, :]]

    neighbors = [[] for _ in range(n)]
    bonds = []
    pos = structure.positions
    for off in offsets:
        zero = off == (0, 0, 0)
        if not zero and not off > (0, 0, 0):
            continue
        t = _shift(np.asarray(off, float), cm) if cm is not None else np.zeros(3)
        dist = np.linalg.norm(pos[:, None, :] - (pos[None, :, :] + t), axis=-1)
        hit = (cutmat >= 0) & (dist <= cutmat)
        if zero:
            hit &= np.tri(n, n, -1, dtype=bool).T  # i < j only
        for i, j in np.argwhere(hit):
            i, j = int(i), int(j)
            bonds.append((i, j, off))
            neighbors[i].append((j, off))
            neighbors[j].append((i, tuple(-x for x in off)))
    return neighbors, bonds


def detect_topology(structure: AtomicStructure,
                    bond_cutoffs: dict[tuple[str, str], float] | None = None,
                    k_r: float = K_R_DEFAULT, k_theta: float = K_THETA_DEFAULT,
                    k_phi: float = K_PHI_DEFAULT,
                    include_dihedrals: bool = True) -> HarmonicTopology:
    """Detect bonds/angles/dihedrals from distance cutoffs and capture the
    reference geometry from the input structure.

    Periodic bonds are found through explicit images, so cells smaller
    than twice the cutoff (one chain repeat, say) still get both bonds.
    Dihedrals whose reference torsion is undefined (collinear inner angle,
    as in straight chains) are skipped.
    """
    if bond_cutoffs is None:
        bond_cutoffs = DEFAULT_BOND_CUTOFFS
    neighbors, bonds = _neighbor_table(structure, bond_cutoffs)
    n = len(structure)

    for i, nb in enumerate(neighbors):
        limit = _MAX_BONDS.get(structure.species[i])
        if limit is not None and len(nb) > limit:
            raise TopologyError(
                f"atom {i} ({structure.species[i]}) has {len(nb)} bonds "
                f"(limit {limit}); check the geometry or cutoffs")

    angles, angle_offs = [], []
    for j in range(n):
        for (a, ta), (b, tb) in combinations(sorted(neighbors[j]), 2):
            angles.append((a, j, b))
            angle_offs.append((ta, tb))

    dihedrals, dihedral_offs, phi0 = [], [], []
    if include_dihedrals:
        for (j, k, tk) in bonds:
            for (i, ti) in neighbors[j]:
                if (i, ti) == (k, tk):
                    continue
                for (l, tl) in neighbors[k]:
                    tl_j = tuple(a + b for a, b in zip(tk, tl))
                    if (l, tl_j) == (j, (0, 0, 0)) or (l, tl_j) == (i, ti):
                        continue
                    off = (ti, tk, tl_j)
                    try:
                        phi0.append(dihedral_angle(structure, i, j, k, l, off))
                    except DegenerateGeometryError:
                        continue
                    dihedrals.append((i, j, k, l))
                    dihedral_offs.append(off)

    return HarmonicTopology(
        bonds=np.array([(i, j) for i, j, _ in bonds], int).reshape(-1, 2),
        bond_offsets=np.array([o for _, _, o in bonds], int).reshape(-1, 1, 3),
        bond_r0=np.array([bond_length(structure, i, j, o) for i, j, o in bonds]),
        angles=np.array(angles, int).reshape(-1, 3),
        angle_offsets=np.array(angle_offs, int).reshape(-1, 2, 3),
        angle_theta0=np.array([bond_angle(structure, a, j, b, ta, tb)
                               for (a, j, b), (ta, tb) in zip(angles, angle_offs)]),
        dihedrals=np.array(dihedrals, int).reshape(-1, 4),
        dihedral_offsets=np.array(dihedral_offs, int).reshape(-1, 3, 3),
        dihedral_phi0=np.array(phi0, float),
        k_r=k_r, k_theta=k_theta, k_phi=k_phi,
        include_dihedrals=include_dihedrals)


# -------------------------------------------------------------- evaluation

def _wrap_pi(x):
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, float), 2.0 * np.pi)


def _bond_vectors(structure, topo):
    pos = structure.positions
    d = pos[topo.bonds[:, 0]] - pos[topo.bonds[:, 1]]
    cm = _cellmat(structure)
    if cm is not None:
        d = d - topo.bond_offsets[:, 0, :] @ cm
    return d


def _angle_vectors(structure, topo):
    pos = structure.positions
    ai, aj, ak = (topo.angles[:, c] for c in range(3))
    u = pos[ai] - pos[aj]
    w = pos[ak] - pos[aj]
    cm = _cellmat(structure)
    if cm is not None:
        u = u + topo.angle_offsets[:, 0, :] @ cm
        w = w + topo.angle_offsets[:, 1, :] @ cm
    return u, w


def _dihedral_geometry(structure, topo):
    """Vectorized torsion angles plus the vectors the gradients reuse."""
    pos = structure.positions
    i, j, k, l = (topo.dihedrals[:, c] for c in range(4))
    cm = _cellmat(structure)
    pi_ = pos[i].copy()
    pk = pos[k].copy()
    pl = pos[l].copy()
    if cm is not None:
        pi_ += topo.dihedral_offsets[:, 0, :] @ cm
        pk += topo.dihedral_offsets[:, 1, :] @ cm
        pl += topo.dihedral_offsets[:, 2, :] @ cm
    pj = pos[j]
    b_ij = pi_ - pj
    b_kj = pk - pj
    b_lk = pl - pk
    n1 = np.cross(b_ij, b_kj)
    n2 = np.cross(b_kj, -b_lk)
    nrkj2 = np.einsum("ij,ij->i", b_kj, b_kj)
    inner1 = np.einsum("ij,ij->i", n1, n1)
    inner2 = np.einsum("ij,ij->i", n2, n2)
    tol2 = _DIHEDRAL_COLLINEAR_TOL**2
    bad = (inner1 < tol2 * nrkj2 * np.einsum("ij,ij->i", b_ij, b_ij)) | \
          (inner2 < tol2 * nrkj2 * np.einsum("ij,ij->i", b_lk, b_lk))
    if bad.any():
        w = int(np.argmax(bad))
        raise DegenerateGeometryError(
            f"dihedral {topo.dihedrals[w].tolist()} has a collinear inner bond")
    nrkj = np.sqrt(nrkj2)
    y = np.einsum("ij,ij->i", np.cross(n1, n2), b_kj) / nrkj
    x = np.einsum("ij,ij->i", n1, n2)
    phi = np.arctan2(y, x)
    return phi, b_ij, b_kj, b_lk, n1, n2, inner1, inner2, nrkj2, nrkj


def harmonic_energy(structure: AtomicStructure, topo: HarmonicTopology) -> float:
    """Total harmonic energy [eV]; zero at the reference geometry."""
    _check_indices(structure, topo)
    e = 0.0
    if len(topo.bonds):
        r = np.linalg.norm(_bond_vectors(structure, topo), axis=1)
        e += 0.5 * topo.k_r * np.sum((r - topo.bond_r0) ** 2)
    if len(topo.angles):
        u, w = _angle_vectors(structure, topo)
        theta = np.arctan2(np.linalg.norm(np.cross(u, w), axis=1),
                           np.einsum("ij,ij->i", u, w))
        e += 0.5 * topo.k_theta * np.sum((theta - topo.angle_theta0) ** 2)
    if topo.include_dihedrals and len(topo.dihedrals):
        phi = _dihedral_geometry(structure, topo)[0]
        dphi = _wrap_pi(phi - topo.dihedral_phi0)
        e += 0.5 * topo.k_phi * np.sum(dphi ** 2)
    return float(e)


def harmonic_forces(structure: AtomicStructure, topo: HarmonicTopology) -> np.ndarray:
    """Analytic forces [eV/A], shape (N, 3)."""
    _check_indices(structure, topo)
    n = len(structure)
    forces = np.zeros((n, 3))

    def scatter(idx, contrib):
        for c in range(3):
            forces[:, c] += np.bincount(idx, weights=contrib[:, c], minlength=n)

    if len(topo.bonds):
        v = _bond_vectors(structure, topo)
        r = np.linalg.norm(v, axis=1)
        f = (-topo.k_r * (r - topo.bond_r0) / r)[:, None] * v
        scatter(topo.bonds[:, 0], f)
        scatter(topo.bonds[:, 1], -f)

    if len(topo.angles):
        ai, aj, ak = (topo.angles[:, c] for c in range(3))
        u, w = _angle_vectors(structure, topo)
        ru = np.linalg.norm(u, axis=1)
        rw = np.linalg.norm(w, axis=1)
        dot = np.einsum("ij,ij->i", u, w)
        cs = np.clip(dot / (ru * rw), -1.0, 1.0)
        theta = np.arctan2(np.linalg.norm(np.cross(u, w), axis=1), dot)
        sn = np.maximum(np.sqrt(np.maximum(0.0, 1.0 - cs * cs)), _SIN_FLOOR)
        a = -topo.k_theta * (theta - topo.angle_theta0) / sn
        uh = u / ru[:, None]
        wh = w / rw[:, None]
        fi = (a / ru)[:, None] * (uh * cs[:, None] - wh)
        fk = (a / rw)[:, None] * (wh * cs[:, None] - uh)
        scatter(ai, fi)
        scatter(ak, fk)
        scatter(aj, -(fi + fk))

    if topo.include_dihedrals and len(topo.dihedrals):
        (phi, b_ij, b_kj, b_lk, n1, n2,
         inner1, inner2, nrkj2, nrkj) = _dihedral_geometry(structure, topo)
        dedphi = topo.k_phi * _wrap_pi(phi - topo.dihedral_phi0)
        f_i = (-dedphi * nrkj / inner1)[:, None] * n1
        f_l = (dedphi * nrkj / inner2)[:, None] * n2
        p = np.einsum("ij,ij->i", b_ij, b_kj) / nrkj2
        q = np.einsum("ij,ij->i", -b_lk, b_kj) / nrkj2
        sv = p[:, None] * f_i - q[:, None] * f_l
        scatter(topo.dihedrals[:, 0], f_i)
        scatter(topo.dihedrals[:, 1], -(f_i - sv))
        scatter(topo.dihedrals[:, 2], -(f_l + sv))
        scatter(topo.dihedrals[:, 3], f_l)
    return forces


def _check_indices(structure, topo):
    n = len(structure)
    for arr in (topo.bonds, topo.angles, topo.dihedrals):
        if len(arr) and (arr.min() < 0 or arr.max() >= n):
            raise InputError("topology indices out of range for structure")


# ----------------------------------------------------------------- file I/O

def _fmt_off(off):
    return " ".join(str(int(x)) for x in np.asarray(off).ravel())


def dump_topology(topo: HarmonicTopology, path: str) -> None:
    """Write the topology as a plain-text record file."""
    with open(path, "w") as fh:
        fh.write("# vdwmech harmonic topology\n")
        fh.write(f"constants {float(topo.k_r)!r} {float(topo.k_theta)!r} "
                 f"{float(topo.k_phi)!r} {int(topo.include_dihedrals)}\n")
        for (i, j), off, r0 in zip(topo.bonds, topo.bond_offsets, topo.bond_r0):
            fh.write(f"bond {i} {j} {_fmt_off(off)} {float(r0)!r}\n")
        for (i, j, k), off, t0 in zip(topo.angles, topo.angle_offsets,
                                      topo.angle_theta0):
            fh.write(f"angle {i} {j} {k} {_fmt_off(off)} {float(t0)!r}\n")
        for (i, j, k, l), off, p0 in zip(topo.dihedrals, topo.dihedral_offsets,
                                         topo.dihedral_phi0):
            fh.write(f"dihedral {i} {j} {k} {l} {_fmt_off(off)} {float(p0)!r}\n")


def load_topology(path: str) -> HarmonicTopology:
    """Read a topology record file written by dump_topology."""
    constants = None
    rows = {"bond": ([], [], []), "angle": ([], [], []), "dihedral": ([], [], [])}
    widths = {"bond": (2, 1), "angle": (3, 2), "dihedral": (4, 3)}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            kind = fields[0]
            try:
                if kind == "constants" and len(fields) == 5:
                    constants = (float(fields[1]), float(fields[2]),
                                 float(fields[3]), bool(int(fields[4])))
                elif kind in rows:
                    na, no = widths[kind]
                    if len(fields) != 1 + na + 3 * no + 1:
                        raise ValueError("wrong field count")
                    idx = tuple(int(x) for x in fields[1:1 + na])
                    off = np.array([int(x) for x in fields[1 + na:1 + na + 3 * no]],
                                   int).reshape(no, 3)
                    ref = float(fields[-1])
                    rows[kind][0].append(idx)
                    rows[kind][1].append(off)
                    rows[kind][2].append(ref)
                else:
                    raise ParseError(f"unrecognized record {kind!r}", path, ln)
            except ValueError:
                raise ParseError(f"malformed record {line!r}", path, ln)
    if constants is None:
        raise ParseError("missing constants record", path)
    k_r, k_theta, k_phi, incl = constants
    return HarmonicTopology(
        bonds=np.array(rows["bond"][0], int).reshape(-1, 2),
        bond_offsets=np.array(rows["bond"][1], int).reshape(-1, 1, 3),
        bond_r0=np.array(rows["bond"][2]),
        angles=np.array(rows["angle"][0], int).reshape(-1, 3),
        angle_offsets=np.array(rows["angle"][1], int).reshape(-1, 2, 3),
        angle_theta0=np.array(rows["angle"][2]),
        dihedrals=np.array(rows["dihedral"][0], int).reshape(-1, 4),
        dihedral_offsets=np.array(rows["dihedral"][1], int).reshape(-1, 3, 3),
        dihedral_phi0=np.array(rows["dihedral"][2]),
        k_r=k_r, k_theta=k_theta, k_phi=k_phi, include_dihedrals=incl)
