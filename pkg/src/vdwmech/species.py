"""Free-atom dispersion parameters and their environment scaling.

Free-atom reference values (C6, static polarizability, vdW radius, all in
Hartree atomic units) live in a plain-text table and are scaled per atom by
the Hirshfeld-style volume ratio:

    C6_eff    = C6_free    * ratio^2
    alpha_eff = alpha_free * ratio
    R_eff     = R_free     * ratio^(1/3)

The characteristic oscillator frequency uses the free-atom values,
omega = 4 C6 / (3 alpha^2), and is therefore independent of the ratio.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from importlib import resources

from .errors import InputError, ParseError
from .structure import AtomicStructure

PARAMS_ENV_VAR = "VDWMECH_VDW_PARAMS"


@dataclass(frozen=True)
class VdwSpeciesParams:
    """Free-atom reference values for one element [a.u.]."""

    element: str
    c6_free: float        # Ha * Bohr^6
    alpha0_free: float    # Bohr^3
    rvdw_free: float      # Bohr

    def __post_init__(self):
        if self.c6_free <= 0 or self.alpha0_free <= 0 or self.rvdw_free <= 0:
            raise InputError(f"non-positive free-atom parameter for {self.element!r}")


@dataclass(frozen=True)
class PerAtomVdwState:
    """Environment-scaled dispersion parameters of a single atom [a.u.]."""

    c6_eff: float       # Ha * Bohr^6
    alpha0_eff: float   # Bohr^3
    rvdw_eff: float     # Bohr
    omega: float        # Ha
    sigma: float        # Bohr


def scale_vdw_params(params: VdwSpeciesParams, ratio: float) -> PerAtomVdwState:
    """Scale free-atom values by a volume ratio and derive omega and sigma."""
    if not ratio > 0:
        raise InputError(f"volume ratio must be positive, got {ratio}")
    alpha0_eff = params.alpha0_free * ratio
    return PerAtomVdwState(
        c6_eff=params.c6_free * ratio**2,
        alpha0_eff=alpha0_eff,
        rvdw_eff=params.rvdw_free * ratio ** (1.0 / 3.0),
        omega=4.0 * params.c6_free / (3.0 * params.alpha0_free**2),
        sigma=(math.sqrt(2.0 / (9.0 * math.pi)) * alpha0_eff) ** (1.0 / 3.0),
    )


def parse_species_table(text: str, path: str | None = None) -> dict[str, VdwSpeciesParams]:
    """Parse the parameter table: one ``symbol c6 alpha0 rvdw`` row per
    element, '#' starts a comment."""
    table: dict[str, VdwSpeciesParams] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(f"expected 4 columns, got {len(fields)}", path, ln)
        sym = fields[0]
        try:
            c6, alpha, rvdw = (float(x) for x in fields[1:])
        except ValueError:
            raise ParseError(f"non-numeric parameter in {raw!r}", path, ln)
        try:
            table[sym] = VdwSpeciesParams(sym, c6, alpha, rvdw)
        except InputError as e:
            raise ParseError(str(e), path, ln)
    return table


def load_species_params(path: str | None = None) -> dict[str, VdwSpeciesParams]:
    """Load the species table.

    Resolution order: explicit ``path`` argument, the VDWMECH_VDW_PARAMS
    environment variable, then the packaged defaults.
    """
    if path is None:
        path = os.environ.get(PARAMS_ENV_VAR)
    if path is None:
        text = resources.files("vdwmech.data").joinpath("ts_params.txt").read_text()
        return parse_species_table(text, "ts_params.txt")
    with open(path) as fh:
        return parse_species_table(fh.read(), path)


def states_for(structure: AtomicStructure,
               table: dict[str, VdwSpeciesParams] | None = None) -> list[PerAtomVdwState]:
    """Per-atom scaled dispersion states for a structure."""
    if table is None:
        table = load_species_params()
    states = []
    for sym, ratio in zip(structure.species, structure.volume_ratios):
        if sym not in table:
            raise InputError(f"no dispersion parameters for element {sym!r}")
        states.append(scale_vdw_params(table[sym], float(ratio)))
    return states
