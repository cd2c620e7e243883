import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fskmc.lattice import (Configuration, InvalidUpdateError, Lattice, SiteUpdate, SpinSpace,
                           apply_update)


def test_site_index_examples():
    assert Lattice((4, 4)).site_index((0, 0)) == 0
    assert Lattice((4, 4)).site_index((5, 1)) == 5
    assert Lattice((8,)).site_index((3,)) == 3


def test_neighbors_examples():
    assert Lattice((8,)).neighbors(0, 1) == [1, 7]
    assert Lattice((8,)).neighbors(0, 0) == []
    assert len(Lattice((4, 4)).neighbors(0, 1)) == 4


def test_nearest_table_matches_neighbors():
    lat = Lattice((5, 6))
    for x in range(lat.size):
        assert sorted(set(lat.nearest[x].tolist())) == lat.neighbors(x, 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 7), min_size=1, max_size=3), st.integers(0, 2), st.data())
def test_ball_is_neighbors_plus_self(dims, r, data):
    lat = Lattice(tuple(dims))
    x = data.draw(st.integers(0, lat.size - 1))
    assert lat.ball([x], r).tolist() == sorted(set(lat.neighbors(x, r)) | {x})
    for y in lat.neighbors(x, r):
        assert lat.distance(x, y) <= r


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=3), st.data())
def test_index_coords_roundtrip(dims, data):
    lat = Lattice(tuple(dims))
    x = data.draw(st.integers(0, lat.size - 1))
    assert lat.site_index(lat.site_coords(x)) == x
    assert tuple(lat.coords[x]) == lat.site_coords(x)


def test_apply_update_examples():
    lat = Lattice((6,))
    c = Configuration(lat, SpinSpace(2))
    apply_update(c, SiteUpdate(((2, 1),)))
    assert c.spins.tolist() == [0, 0, 1, 0, 0, 0]
    before = c.spins.copy()
    apply_update(c, SiteUpdate(((0, int(c.spins[1])), (1, int(c.spins[0])))))
    assert np.array_equal(c.spins, before)
    z = Configuration(lat, SpinSpace(3), [1, 2, 0, 0, 0, 0])
    apply_update(z, SiteUpdate(((0, 0), (1, 0))))
    assert z.spins.tolist() == [0] * 6


def test_apply_update_rejects_bad_values():
    c = Configuration(Lattice((4,)), SpinSpace(2))
    with pytest.raises(InvalidUpdateError):
        apply_update(c, SiteUpdate(((0, 2),)))
    with pytest.raises(InvalidUpdateError):
        apply_update(c, SiteUpdate(((9, 1),)))
    with pytest.raises(InvalidUpdateError):
        SiteUpdate(((1, 1), (1, 0)))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=5, max_size=5), st.integers(0, 4), st.integers(0, 4), st.integers(0, 2))
def test_inverse_update_restores(spins, a, b, v):
    c = Configuration(Lattice((5,)), SpinSpace(3), spins)
    targets = ((a, v),) if a == b else ((a, v), (b, (v + 1) % 3))
    u = SiteUpdate(targets)
    inv = u.inverse(c.spins)
    before = c.spins.copy()
    apply_update(c, u)
    apply_update(c, inv)
    assert np.array_equal(c.spins, before)


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration(Lattice((3,)), SpinSpace(2), [0, 1, 2])
    with pytest.raises(ValueError):
        SpinSpace(1)
    with pytest.raises(ValueError):
        Lattice((0,))
