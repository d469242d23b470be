import numpy as np
import pytest
from scipy.optimize import linprog

from amlab.action import discretize
from amlab.mather import (
    InfeasibleRotation,
    TheoremTolerances,
    beta_scan,
    build_lp,
    duality_gap,
    is_singular,
    mather_support,
    rotation_vector,
    solve_lp,
    support_velocity_multiplicity,
    verify_theorem,
)


def _highs_beta(lp):
    A, b, _ = lp.constraint_matrix()
    res = linprog(lp.objective, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


@pytest.mark.parametrize(
    "name,N,tau,h",
    [("pendulum", 20, 0.1, [0.3]), ("pendulum", 20, 0.1, [1.1]), ("flat2", 10, 0.1, [0.5, 0.2]), ("mane_homoclinic", 12, 0.1, [0.1, 0.0])],
)
def test_column_generation_matches_full_edge_lp(cat, name, N, tau, h):
    D = discretize(cat.get(name), N, tau)
    lp = build_lp(D.costs, h)
    mu = solve_lp(lp)
    assert abs(mu.beta - _highs_beta(lp)) <= 1e-9 * (1 + abs(mu.beta))
    # the recovered edge measure is feasible for the full formulation
    A, b, _ = lp.constraint_matrix()
    assert np.allclose(A @ mu.mass, b, atol=1e-9)
    assert np.all(mu.mass >= 0)
    assert mu.beta == pytest.approx(lp.objective @ mu.mass, abs=1e-12)


def test_rejects_unreachable_rotation(flat2_20):
    with pytest.raises(InfeasibleRotation):
        build_lp(flat2_20.costs, [5.0, 0.0])
    with pytest.raises(ValueError):
        build_lp(flat2_20.costs, [0.5])
    with pytest.raises(ValueError):
        build_lp(flat2_20.costs_for([1.0, 0.0]), [0.5, 0.0])


def test_flat2_values(flat2_20):
    mu = solve_lp(build_lp(flat2_20.costs, [1.0, 0.0]))
    assert abs(mu.beta - 0.5) <= 0.03
    assert np.allclose(rotation_vector(mu), [1.0, 0.0], atol=1e-12)
    mu0 = solve_lp(build_lp(flat2_20.costs, [0.0, 0.0]))
    assert abs(mu0.beta) <= 1e-15
    assert np.all(flat2_20.edges.is_loop[mu0.support()])


def test_pendulum_rest_is_dirac_at_bottom(pendulum_200):
    mu = solve_lp(build_lp(pendulum_200.costs, [0.0]))
    sup = mu.support()
    assert len(sup) == 1
    i = int(sup[0])
    assert pendulum_200.edges.src[i] == 0 and pendulum_200.edges.is_loop[i]
    assert mu.mass[i] == pytest.approx(1.0)


def test_duality_with_lp_multipliers(cat):
    D = discretize(cat.pendulum, 40, 0.1)
    rng = np.random.default_rng(0)
    for h in ([0.2], [0.8], [1.3]):
        mu = solve_lp(build_lp(D.costs, h))
        assert abs(duality_gap(D, h, mu.cohomology, mu.beta)) <= 1e-9
        for c in rng.uniform(-2, 2, 5):
            assert duality_gap(D, h, [c], mu.beta) >= -1e-9


def test_beta_convex_along_segments(cat):
    D = discretize(cat.mane_shear, 16, 0.1)
    rng = np.random.default_rng(1)
    for _ in range(4):
        h1, h2 = rng.uniform(-0.8, 0.8, (2, 2))
        b1, b2, bm = (solve_lp(build_lp(D.costs, h)).beta for h in (h1, h2, (h1 + h2) / 2))
        assert bm <= 0.5 * (b1 + b2) + 1e-10


def test_shear_support_follows_the_field(shear_32):
    # invariant circles x2 = s carry zero cost at speed 1 + cos(2 pi s) / 2;
    # on the grid the support rides circles whose speed is a lattice velocity
    D = shear_32
    mu = solve_lp(build_lp(D.costs, [1.0, 0.0]))
    dec = mather_support(mu)
    assert not dec.warning and dec.cycles
    e = D.edges
    sup = mu.support()
    field = D.lagrangian.field(D.grid.coords(e.src[sup]))
    assert np.abs(e.velocity[sup] - field).max() <= D.spacing / D.tau
    assert all(c.primitive_class.tolist() == [1, 0] for c in dec.cycles)
    assert np.all(support_velocity_multiplicity(mu) == 1)


def test_shear_unit_rotation_on_the_unit_speed_circles(cat):
    # with tau = spacing the lattice contains speed 1, realised on x2 = 1/4, 3/4
    D = discretize(cat.mane_shear, 32, 1 / 32)
    dec = mather_support(solve_lp(build_lp(D.costs, [1.0, 0.0])))
    y = D.grid.coords(dec.nodes)[:, 1]
    assert np.min(np.abs(y[:, None] - np.array([0.25, 0.75])), axis=1).max() <= D.spacing
    assert all(c.primitive_class.tolist() == [1, 0] for c in dec.cycles)


def test_shear_beta_vanishes_on_circle_speeds(shear_32):
    for rho in (0.6, 1.0, 1.4):
        assert solve_lp(build_lp(shear_32.costs, [rho, 0.0])).beta <= 0.02
    assert solve_lp(build_lp(shear_32.costs, [0.0, 0.0])).beta >= 0.05


def test_decomposition_accounts_for_all_mass(cat):
    D = discretize(cat.mane_homoclinic, 16, 0.1)
    mu = solve_lp(build_lp(D.costs, [0.15, 0.05]))
    dec = mather_support(mu)
    total = sum(c.mass * len(c.edges) for c in dec.cycles)
    assert total == pytest.approx(1.0, abs=1e-9) and dec.residue <= 1e-9


def test_singular_at_rest(flat2_20, pendulum_200):
    assert is_singular(flat2_20, [0.0, 0.0]).verdict == "singular"
    assert is_singular(pendulum_200, [0.0]).verdict == "singular"


def test_pendulum_small_rotation_is_skipped(cat):
    D = discretize(cat.pendulum, 40, 0.1)
    rep = verify_theorem(D, [0.1])
    assert rep.verdict == "singular-skipped"
    assert rep.radial.t_min == 0.0


def test_beta_scan_builds_convex_function(flat2_20):
    pts = np.array([[a, b] for a in (-0.5, 0.0, 0.5) for b in (-0.5, 0.0, 0.5)])
    scan = beta_scan(flat2_20, pts)
    f = scan.function
    assert np.all(f(pts) <= scan.betas + 1e-12)
    assert TheoremTolerances().resolved(flat2_20).hausdorff == pytest.approx(0.1)
