"""CSV emission for step records and MD statistics.

Formatting is fixed-precision and locale-independent, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

from .errors import InputError
from .md import MdResult
from .quasistatic import StepRecord

_FMT = "{:.10e}"

_VOIGT = [("sigma_xx_GPa", 0, 0), ("sigma_yy_GPa", 1, 1), ("sigma_zz_GPa", 2, 2),
          ("sigma_yz_GPa", 1, 2), ("sigma_xz_GPa", 0, 2), ("sigma_xy_GPa", 0, 1)]


def _num(x):
    return "" if x is None else _FMT.format(x)


def emit_records(records: list[StepRecord], path: str) -> None:
    """One CSV row per step; header names every field with units."""
    if not records:
        raise InputError("no records to emit")
    with_tensor = any(r.sigma is not None for r in records)
    header = ["step", "applied_A", "strain", "e_total_eV", "e_bonded_eV",
              "e_vdw_eV", "reaction_eV_per_A", "sigma_drive_GPa",
              "stiffness_GPa", "converged"]
    if with_tensor:
        header += [name for name, _, _ in _VOIGT]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in records:
            row = [str(r.step), _FMT.format(r.applied), _num(r.strain),
                   _FMT.format(r.e_total), _FMT.format(r.e_bonded),
                   _FMT.format(r.e_vdw), _num(r.reaction),
                   _num(r.sigma_drive), _num(r.stiffness),
                   str(int(r.converged))]
            if with_tensor:
                if r.sigma is None:
                    row += [""] * len(_VOIGT)
                else:
                    row += [_FMT.format(r.sigma[a, b]) for _, a, b in _VOIGT]
            fh.write(",".join(row) + "\n")


def emit_md_stats(result: MdResult, path: str) -> None:
    """Per-atom time-averaged displacements and their standard deviations."""
    s = result.structure
    header = ["atom", "species", "mean_dx_A", "mean_dy_A", "mean_dz_A",
              "std_dx_A", "std_dy_A", "std_dz_A"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i, sym in enumerate(s.species):
            md = result.mean_displacement[i]
            sd = result.std_displacement[i]
            fh.write(",".join([str(i), sym] +
                              [_FMT.format(x) for x in (*md, *sd)]) + "\n")


def emit_chain_sweep(rows: list[dict], path: str) -> None:
    """CSV for the rigid chain force sweep: one row per (h, nc1) point."""
    if not rows:
        raise InputError("no sweep rows to emit")
    header = ["h_A", "nc1", "sum_fy_pw_eV_per_A", "sum_fy_mbd_eV_per_A", "ratio_mbd_pw"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join([
                _FMT.format(r["h"]), str(r["nc1"]), _FMT.format(r["f_pw"]),
                _FMT.format(r["f_mbd"]), _FMT.format(r["ratio"])]) + "\n")
