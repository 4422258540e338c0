"""Quasi-static loading: incremental displacement or cell strain, each step
followed by relaxation, with reactions and stiffness recorded.

State carries over between steps, so path dependence (snap-in/out
hysteresis, post-buckling branches) is preserved.  A non-converged step
first retries with halved increments; if the budget is exhausted the run
halts with the failing record flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .minimize import MinimizerConfig, minimize
from .periodic import apply_cell_strain, cell_stress, relaxable_components
from .structure import AtomicStructure
from .units import EV_A3_GPA

CNT_WALL_THICKNESS = 3.4  # A, assumed monolayer wall thickness


@dataclass(frozen=True)
class LoadingProtocol:
    """Driver description for one quasi-static run.

    kind "displacement": rigidly translate the (fully fixed) driven atoms
    by ``increment`` along ``axis`` each step.  kind "cell-strain": change
    cell component ``component`` by ``increment``; "relaxed-others" mode
    adds the remaining periodic cell components to the relaxation.
    """

    kind: str                                  # displacement | cell-strain
    increment: float                           # A per step
    step_count: int
    minimizer: MinimizerConfig = MinimizerConfig()
    driven: tuple[int, ...] = ()               # displacement mode
    axis: int = 2
    component: tuple[int, int] = (0, 0)        # cell-strain mode
    cell_mode: str = "fixed-others"
    relax_diagonal_only: bool = True
    max_increment_halvings: int = 4
    reference_length: float | None = None      # strain normalization [A]
    face_area: float | None = None             # A^2, reaction stress
    compute_stress: bool = False               # periodic runs
    strain_step: float = 1e-5
    perturbation: float = 0.0                  # A, seeded one-time noise
    perturbation_seed: int = 0
    record_structures: bool = True

    def __post_init__(self):
        if self.kind not in ("displacement", "cell-strain"):
            raise InputError(f"unknown protocol kind {self.kind!r}")
        if self.increment == 0.0:
            raise InputError("increment must be nonzero")
        if self.step_count < 1:
            raise InputError("step_count must be >= 1")
        if self.kind == "displacement" and not len(self.driven):
            raise InputError("displacement protocol needs a driven selection")
        if self.cell_mode not in ("fixed-others", "relaxed-others"):
            raise InputError(f"unknown cell mode {self.cell_mode!r}")


@dataclass
class StepRecord:
    """Per-step observables of a quasi-static run."""

    step: int
    applied: float                 # cumulative driven displacement or cell change [A]
    strain: float | None
    e_total: float                 # eV
    e_bonded: float
    e_vdw: float
    reaction: float | None         # eV/A along the drive axis, displacement mode
    sigma: np.ndarray | None       # (3,3) GPa, periodic runs
    sigma_drive: float | None      # GPa
    stiffness: float | None        # GPa, from step 2 on
    converged: bool


@dataclass
class QuasistaticResult:
    records: list[StepRecord]
    structures: list[AtomicStructure] = field(default_factory=list)
    final: AtomicStructure | None = None
    halted: bool = False


def _perturb(structure, protocol):
    if protocol.perturbation <= 0:
        return structure
    rng = np.random.default_rng(protocol.perturbation_seed)
    noise = protocol.perturbation * rng.standard_normal(structure.positions.shape)
    noise = np.where(structure.free_mask(), noise, 0.0)
    return structure.with_positions(structure.positions + noise)


def _apply_displacement(structure, protocol, amount):
    driven = np.asarray(protocol.driven, int)
    if not structure.fixed[driven].all():
        raise InputError("driven atoms must be fully fixed")
    pos = structure.positions.copy()
    pos[driven, protocol.axis] += amount
    return structure.with_positions(pos)


def run_quasistatic(structure: AtomicStructure, model,
                    protocol: LoadingProtocol) -> QuasistaticResult:
    """Run the loading protocol; one StepRecord per protocol step."""
    if protocol.kind == "cell-strain" and structure.cell is None:
        raise InputError("cell-strain protocol needs a periodic structure")

    relax_cell = ()
    if protocol.kind == "cell-strain" and protocol.cell_mode == "relaxed-others":
        relax_cell = tuple(relaxable_components(
            structure.cell, protocol.component, protocol.relax_diagonal_only))

    cur = _perturb(structure, protocol)
    if protocol.kind == "cell-strain":
        u0 = structure.cell.matrix[protocol.component]
    result = QuasistaticResult(records=[])
    applied = 0.0
    prev_sig = prev_eps = None

    for step in range(1, protocol.step_count + 1):
        remaining = protocol.increment
        sub = protocol.increment
        halvings = 0
        converged = True
        while abs(remaining) > 1e-15:
            if abs(sub) > abs(remaining):
                sub = remaining
            if protocol.kind == "displacement":
                trial = _apply_displacement(cur, protocol, sub)
            else:
                trial = apply_cell_strain(cur, protocol.component, delta=sub,
                                          mode=protocol.cell_mode)
            res = minimize(trial, model, protocol.minimizer, relax_cell=relax_cell)
            if res.converged:
                cur = res.structure
                applied += sub
                remaining -= sub
                continue
            halvings += 1
            if halvings > protocol.max_increment_halvings:
                cur = res.structure
                applied += sub
                converged = False
                break
            sub *= 0.5

        (e_tot, e_bond, e_vdw), forces = model.energy_and_forces(cur)

        reaction = None
        sigma = None
        sigma_drive = None
        strain = None
        if protocol.kind == "displacement":
            driven = np.asarray(protocol.driven, int)
            reaction = float(forces[driven, protocol.axis].sum())
            if protocol.reference_length:
                strain = abs(applied) / protocol.reference_length
            if protocol.face_area:
                sigma_drive = abs(reaction) / protocol.face_area * EV_A3_GPA
        else:
            strain = applied / u0
            if protocol.compute_stress:
                sigma = cell_stress(cur, model.energy, protocol.strain_step).sigma
                a, b = protocol.component
                sigma_drive = float(sigma[a, b])

        stiffness = None
        if sigma_drive is not None and strain is not None:
            if prev_sig is not None and strain != prev_eps:
                stiffness = (sigma_drive - prev_sig) / (strain - prev_eps)
            prev_sig, prev_eps = sigma_drive, strain

        result.records.append(StepRecord(
            step=step, applied=applied, strain=strain, e_total=e_tot,
            e_bonded=e_bond, e_vdw=e_vdw, reaction=reaction, sigma=sigma,
            sigma_drive=sigma_drive, stiffness=stiffness, converged=converged))
        if protocol.record_structures:
            result.structures.append(cur)
        if not converged:
            result.halted = True
            break

    result.final = cur
    return result


def cnt_face_area(radius: float, wall_thickness: float = CNT_WALL_THICKNESS) -> float:
    """Nanotube cross-section: circumference times assumed wall thickness [A^2]."""
    if radius <= 0:
        raise InputError("radius must be positive")
    return 2.0 * np.pi * radius * wall_thickness


def face_reaction_stress(records: list[StepRecord], face_area: float) -> np.ndarray:
    """Per-step |reaction| / face_area in GPa."""
    if face_area <= 0:
        raise InputError("face area must be positive")
    if not records:
        raise InputError("no records")
    return np.array([abs(r.reaction) / face_area * EV_A3_GPA for r in records])
