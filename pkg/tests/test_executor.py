from dataclasses import dataclass

import numpy as np
import pytest

from conftest import multinomial_ok
from fskmc.executor import (FractionalStepExecutor, execute_substep, replica_policy, run_replicas,
                            run_serial_replicas, run_simulation)
from fskmc.generator import expm, generator_matrix
from fskmc.lattice import Configuration, Lattice, SpinSpace
from fskmc.models import ArrheniusModel, ArrheniusParams, KawasakiModel, ZGBModel, ZGBParams
from fskmc.partition import Group, PartitionError, build_partition, nested_partition
from fskmc.rng import SeedPolicy
from fskmc.schedule import make_schedule


@dataclass(frozen=True)
class PyArrhenius(ArrheniusModel):
    kind: int = 0


def _empirical(out, S=2):
    w = S ** np.arange(out.shape[1] - 1, -1, -1)
    return np.bincount(out.astype(np.int64) @ w, minlength=S ** out.shape[1])


def test_substep_touches_only_active_color():
    lat = Lattice((8,))
    part = build_partition(lat, (2,))
    m = ArrheniusModel(ArrheniusParams(2.0, 1.0, 0.5, 1.0, 0.0))
    c = Configuration(lat, SpinSpace(2))
    res = execute_substep(c, part, "E", 5.0, m, SeedPolicy(1))
    assert len(res) == 2 and sum(r.jumps for r in res) > 0
    assert not c.spins[part.sublattice("O")].any()
    before = c.spins.copy()
    execute_substep(c, part, "O", 0.0, m, SeedPolicy(1))
    assert np.array_equal(c.spins, before)


def test_incompatible_partition_rejected():
    lat = Lattice((8, 8))
    part = build_partition(lat, (4, 4))
    with pytest.raises(PartitionError):
        FractionalStepExecutor(part, ZGBModel())


def test_one_window_distribution_matches_color_generator():
    lat = Lattice((6,))
    part = build_partition(lat, (3,))
    m = ArrheniusModel(ArrheniusParams(0.8, 1.5, 1.0, 1.0, 0.2))
    init = Configuration(lat, SpinSpace(2), [1, 0, 1, 1, 0, 0])
    dt = 0.6
    QE = generator_matrix(m, lat, part.sublattice("E"))
    probs = QE.point_mass(init.spins) @ expm(QE, dt)
    sched = make_schedule("custom", dt, dt, substeps=[("E", dt)])
    out = run_replicas(init, part, sched, m, 17, 100_000)
    assert multinomial_ok(_empirical(out), probs)


def test_lie_run_matches_product_oracle():
    lat = Lattice((6,))
    part = build_partition(lat, (3,))
    m = ArrheniusModel(ArrheniusParams(0.8, 1.5, 1.0, 1.0, 0.2))
    init = Configuration(lat, SpinSpace(2), [1, 1, 1, 0, 0, 0])
    QO = generator_matrix(m, lat, part.sublattice("O"))
    QE = generator_matrix(m, lat, part.sublattice("E"))
    dt, n = 0.5, 3
    step = expm(QO, dt) @ expm(QE, dt)
    probs = QO.point_mass(init.spins) @ np.linalg.matrix_power(step, n)
    out = run_replicas(init, part, make_schedule("lie", dt, n * dt), m, 23, 100_000)
    assert multinomial_ok(_empirical(out), probs)


def test_commuting_case_lie_equals_serial():
    lat = Lattice((6,))
    part = build_partition(lat, (3,))
    m = ArrheniusModel(ArrheniusParams(0.7, 1.3, 0.0, 1.0, 0.0))
    Q = generator_matrix(m, lat)
    QO = generator_matrix(m, lat, part.sublattice("O"))
    QE = generator_matrix(m, lat, part.sublattice("E"))
    assert np.abs(expm(Q, 1.0) - expm(QO, 1.0) @ expm(QE, 1.0)).max() < 1e-12
    init = Configuration(lat, SpinSpace(2))
    out = run_replicas(init, part, make_schedule("lie", 1.0, 2.0), m, 5, 50_000)
    probs = Q.point_mass(init.spins) @ expm(Q, 2.0)
    assert multinomial_ok(_empirical(out), probs)


def test_zero_durations_leave_state_unchanged():
    lat = Lattice((8,))
    part = build_partition(lat, (4,))
    c = Configuration(lat, SpinSpace(2), [1, 0, 1, 1, 0, 0, 1, 0])
    before = c.spins.copy()
    sched = make_schedule("custom", 1.0, 1.0, substeps=[("O", 0.0), ("E", 0.0)])
    run_simulation(c, part, sched, ArrheniusModel(), SeedPolicy(3))
    assert np.array_equal(c.spins, before)


@pytest.mark.parametrize("model,dims,extent", [
    (ArrheniusModel(ArrheniusParams(1.0, 1.0, 1.0, 1.0, 0.0)), (32, 32), (4, 4)),
    (KawasakiModel(ArrheniusParams(1.0, 1.0, 1.0, 1.0, 0.0)), (64,), (4,)),
    (ZGBModel(ZGBParams(0.4, 1.0)), (32, 32), (4, 32)),
])
def test_results_independent_of_worker_count(model, dims, extent):
    lat = Lattice(dims)
    part = build_partition(lat, extent, model.radius, model.write_radius)
    finals = []
    for workers in (1, 2, 3):
        c = Configuration(lat, model.spin_space)
        with FractionalStepExecutor(part, model, workers) as ex:
            if workers == 3:
                ex.assignment = np.arange(part.num_cells) % 3
            run_simulation(c, part, make_schedule("strang", 0.5, 3.0), model, SeedPolicy(8), executor=ex)
        finals.append(c.spins.copy())
    assert np.array_equal(finals[0], finals[1]) and np.array_equal(finals[0], finals[2])


def test_replicas_reproduce_run_simulation():
    lat = Lattice((16,))
    part = build_partition(lat, (4,))
    m = ArrheniusModel(ArrheniusParams(1.0, 2.0, 1.0, 1.0, 0.0))
    sched = make_schedule("lie", 0.5, 2.0)
    init = Configuration(lat, SpinSpace(2))
    out = run_replicas(init, part, sched, m, 9, 4)
    for r in range(4):
        c = init.copy()
        run_simulation(c, part, sched, m, replica_policy(9, r))
        assert np.array_equal(c.spins, out[r])


def test_python_fallback_matches_native():
    lat = Lattice((16,))
    part = build_partition(lat, (4,))
    p = ArrheniusParams(1.0, 2.0, 1.0, 1.0, 0.0)
    sched = make_schedule("lie", 0.5, 2.0)
    a, b = Configuration(lat, SpinSpace(2)), Configuration(lat, SpinSpace(2))
    run_simulation(a, part, sched, ArrheniusModel(p), SeedPolicy(4))
    run_simulation(b, part, sched, PyArrhenius(p), SeedPolicy(4))
    assert np.array_equal(a.spins, b.spins)


def test_observers_sampled_at_window_ends():
    lat = Lattice((16,))
    part = build_partition(lat, (4,))
    c = Configuration(lat, SpinSpace(2))
    traj = run_simulation(c, part, make_schedule("lie", 0.5, 3.0), ArrheniusModel(), SeedPolicy(1),
                          {"cov": lambda s: s.spins.mean()}, stride=2)
    assert traj.times == [0.0, 1.0, 2.0, 3.0]
    assert traj.series("cov")[-1] == pytest.approx(c.spins.mean())


def test_nested_lie_matches_matrix_product():
    lat = Lattice((8,))
    outer = build_partition(lat, (4,))
    nested = nested_partition(outer, (2,))
    m = ArrheniusModel(ArrheniusParams(0.8, 1.5, 1.0, 1.0, 0.2))
    init = Configuration(lat, SpinSpace(2), [1, 1, 0, 0, 1, 0, 1, 0])
    dt = 0.5

    def inner_gen(g, h):
        sites = np.concatenate([t.sites for mm in outer.cells_of(g) for t in nested.tiles[mm] if t.color == h])
        return expm(generator_matrix(m, lat, sites), dt)

    step = np.eye(256)
    for g in (Group.O, Group.E):
        step = step @ inner_gen(g, Group.O) @ inner_gen(g, Group.E)
    probs = generator_matrix(m, lat).point_mass(init.spins) @ step
    sched = make_schedule("lie", dt, dt)
    finals = []
    with FractionalStepExecutor(nested, m) as ex:
        for r in range(20_000):
            c = init.copy()
            run_simulation(c, nested, sched, m, SeedPolicy(r), executor=ex)
            finals.append(c.spins.copy())
    assert multinomial_ok(_empirical(np.array(finals)), probs)


def test_serial_replicas_match_full_generator():
    lat = Lattice((6,))
    m = ArrheniusModel(ArrheniusParams(0.8, 1.5, 1.0, 1.0, 0.2))
    init = Configuration(lat, SpinSpace(2), [1, 0, 0, 1, 1, 0])
    Q = generator_matrix(m, lat)
    probs = Q.point_mass(init.spins) @ expm(Q, 1.5)
    out = run_serial_replicas(init, m, 1.5, 31, 100_000)
    assert multinomial_ok(_empirical(out), probs)
