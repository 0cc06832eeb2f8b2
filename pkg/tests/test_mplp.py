import numpy as np
import pytest

from flowctrl.mplp import (OutOfDomainError, ParametricLp, Polyhedron,
                           ScaleExceededError, eval_pwa, law_from_dict,
                           law_to_dict, load_law, save_law, solve_mplp)
from flowctrl.simplex import solve_lp

from netgen import random_plp


@pytest.fixture(scope="module")
def two_region_law():
    # min z  s.t.  z >= theta, z >= 0, theta in [-1, 1]
    plp = ParametricLp(c=[1.0], w=[[-1.0], [-1.0]], g=[0.0, 0.0],
                       s=[[-1.0], [0.0]],
                       omega=Polyhedron.box([-1.0], [1.0]))
    return plp, solve_mplp(plp)


class TestTwoRegionExample:
    def test_partition(self, two_region_law):
        _, law = two_region_law
        assert law.n_regions == 2

    def test_negative_parameter(self, two_region_law):
        _, law = two_region_law
        assert eval_pwa(law, [-0.5]) == pytest.approx([0.0])

    def test_positive_parameter(self, two_region_law):
        _, law = two_region_law
        assert eval_pwa(law, [0.5]) == pytest.approx([0.5])

    def test_facet_continuity_at_zero(self, two_region_law):
        _, law = two_region_law
        values = [reg.gain @ [0.0] + reg.offset for reg in law.regions
                  if reg.contains([0.0])]
        assert len(values) == 2
        assert values[0] == pytest.approx(values[1], abs=1e-9)

    def test_tie_break_lowest_region_index(self, two_region_law):
        _, law = two_region_law
        assert law.locate([0.0]) == 0

    def test_out_of_domain(self, two_region_law):
        _, law = two_region_law
        with pytest.raises(OutOfDomainError):
            eval_pwa(law, [5.0])


def test_infeasible_everywhere_gives_empty_law():
    plp = ParametricLp(c=[1.0], w=[[1.0], [-1.0]], g=[-2.0, -1.0],
                       s=[[0.0], [0.0]], omega=Polyhedron.box([-1.0], [1.0]))
    law = solve_mplp(plp)
    assert law.n_regions == 0


def test_scale_guards():
    omega = Polyhedron.box([-1.0] * 4, [1.0] * 4)
    plp = ParametricLp(c=[1.0], w=[[1.0]], g=[1.0],
                       s=[[0.0, 0.0, 0.0, 0.0]], omega=omega)
    with pytest.raises(ScaleExceededError):
        solve_mplp(plp)
    big = np.vstack([np.eye(2)] * 20)
    plp2 = ParametricLp(c=[1.0, 1.0], w=big, g=np.ones(40),
                        s=np.zeros((40, 1)), omega=Polyhedron.box([0.0], [1.0]))
    with pytest.raises(ScaleExceededError):
        solve_mplp(plp2)


class TestOracleEquivalence:
    def test_random_instances_match_pointwise_lp(self):
        rng = np.random.default_rng(3)
        matches = 0
        for _ in range(12):
            plp = random_plp(rng)
            law = solve_mplp(plp)
            for _ in range(40):
                theta = rng.uniform(-1, 1, plp.n_params)
                sol = solve_lp(plp.instantiate(theta))
                if sol.optimal:
                    value = law.value(theta)
                    assert value == pytest.approx(sol.objective, abs=1e-6,
                                                  rel=1e-6)
                    matches += 1
                else:
                    with pytest.raises(OutOfDomainError):
                        law.locate(theta)
        assert matches > 200

    def test_value_function_convex_along_segments(self):
        from law_checks import check_value_convexity

        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(8):
            plp = random_plp(rng)
            law = solve_mplp(plp)
            checked += check_value_convexity(law, rng, 30, tol=1e-8)
        assert checked > 50

    def test_optimizer_continuous_across_facets(self):
        from law_checks import check_facet_continuity

        rng = np.random.default_rng(9)
        compared = 0
        for _ in range(14):
            plp = random_plp(rng)
            law = solve_mplp(plp)
            compared += check_facet_continuity(law, tol=1e-6)
        assert compared >= 20

    def test_region_interiors_disjoint(self):
        rng = np.random.default_rng(13)
        for _ in range(8):
            plp = random_plp(rng)
            law = solve_mplp(plp)
            for idx, reg in enumerate(law.regions):
                center, radius = Polyhedron(reg.h, reg.rhs).chebyshev()
                if center is None or radius < 1e-6:
                    continue
                owners = [j for j, other in enumerate(law.regions)
                          if other.contains(center, tol=-1e-9)]
                # strict-interior membership should be unique
                assert owners == [idx] or owners[:1] == [idx]


class TestExport:
    def test_roundtrip(self, tmp_path, two_region_law):
        _, law = two_region_law
        path = tmp_path / "law.json"
        save_law(law, path)
        again = load_law(path)
        assert again.n_regions == law.n_regions
        for theta in ([-0.7], [0.0], [0.9]):
            assert eval_pwa(again, theta) == pytest.approx(eval_pwa(law, theta))

    def test_dict_contains_region_matrices(self, two_region_law):
        _, law = two_region_law
        data = law_to_dict(law)
        assert {"H", "h", "L", "l"} <= set(data["regions"][0])
        law_from_dict(data)
