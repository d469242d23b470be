import numpy as np

from amlab.convex_core import subdifferential
from amlab.lemmas import LemmaReport, check_instance, exposed_faces, random_pl, run_battery


def test_small_battery_passes():
    rep = run_battery(n_per_dim=8, seed=5)
    assert rep.instances == 16 and rep.faces_checked > 0
    assert rep.passed, rep.to_dict()


def test_random_instances_are_reproducible():
    a = random_pl(np.random.default_rng(11), 2)
    b = random_pl(np.random.default_rng(11), 2)
    assert np.array_equal(a.slopes, b.slopes) and np.array_equal(a.vertices, b.vertices)


def test_exposed_faces_are_subdifferential_preimages():
    f = random_pl(np.random.default_rng(2), 2)
    for y, F in exposed_faces(f):
        # every point of an exposed face has y in its subdifferential
        assert subdifferential(f, F.barycenter).contains(type(F)(np.atleast_2d(y)), 1e-9)


def test_report_counts_failures():
    rep = LemmaReport()
    check_instance(random_pl(np.random.default_rng(0), 1), np.random.default_rng(1), rep)
    assert rep.passed
    rep.radial_failures = 1
    assert not rep.passed and rep.to_dict()["passed"] is False
