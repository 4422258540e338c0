import numpy as np
import pytest

from vdwmech.bonded import detect_topology
from vdwmech.composite import CompositeModel
from vdwmech.errors import InputError
from vdwmech.generators import ChainSpec, PeCrystalSpec, make_chain_pair, make_pe_crystal
from vdwmech.mbd import MbdModelConfig
from vdwmech.periodic import generate_images


def test_total_is_sum_of_components():
    s = make_chain_pair(ChainSpec(5, 5, 1.2, 6.0, hydrogen_caps=True))
    s = s.with_positions(s.positions + 0.02 * np.sin(np.arange(len(s) * 3))
                         .reshape(-1, 3))
    for vdw in ("pw", "mbd"):
        model = CompositeModel(topology=detect_topology(
            make_chain_pair(ChainSpec(5, 5, 1.2, 6.0, hydrogen_caps=True))), vdw=vdw)
        total, bonded, vdw_e = model.energy_components(s)
        assert total == pytest.approx(bonded + vdw_e, rel=1e-14)
        assert bonded > 0 and vdw_e < 0
        (t2, b2, v2), f = model.energy_and_forces(s)
        assert t2 == total and b2 == bonded and v2 == vdw_e
        assert f.shape == (len(s), 3)


def test_requires_some_component():
    with pytest.raises(InputError):
        CompositeModel(topology=None, vdw="none")
    with pytest.raises(InputError):
        CompositeModel(topology=None, vdw="maybe")


def test_vdw_only_model():
    s = make_chain_pair(ChainSpec(3, 3, 1.2, 8.0))
    model = CompositeModel(vdw="mbd")
    total, bonded, vdw_e = model.energy_components(s)
    assert bonded == 0.0
    assert total == vdw_e < 0


def test_shell_resolution_periodic():
    s = make_pe_crystal(PeCrystalSpec(1, 1, 1))
    model = CompositeModel(vdw="mbd", mbd_cfg=MbdModelConfig(
        replica_shells=4, shell_energy_tol=1e-4))
    shells = model.resolve_shells(s)
    assert 1 <= shells <= 4
    # convergence property: one more shell changes energy less than tol
    from vdwmech.mbd import mbd_energy
    from vdwmech.species import states_for
    st = states_for(s)
    e1 = mbd_energy(s, st, model.mbd_cfg, generate_images(s.cell, shells))
    e2 = mbd_energy(s, st, model.mbd_cfg, generate_images(s.cell, shells + 1))
    assert abs(e2 - e1) < 1e-4 or shells == 4


def test_nonperiodic_shells_zero():
    s = make_chain_pair(ChainSpec(3, 3, 1.2, 8.0))
    model = CompositeModel(vdw="pw")
    assert model.resolve_shells(s) == 0
    assert model.images_for(s) is None


def test_states_cache_tracks_ratio_changes():
    s = make_chain_pair(ChainSpec(2, 2, 1.2, 8.0))
    model = CompositeModel(vdw="pw")
    e1 = model.energy(s)
    from dataclasses import replace
    s2 = replace(s, volume_ratios=np.full(len(s), 0.8))
    e2 = model.energy(s2)
    assert e2 != e1
    assert abs(e2) < abs(e1)  # smaller ratios, weaker dispersion
