"""
Tests for the synthetic network generators.
"""

import numpy as np
import pytest

from netresilience.core.errors import GeneratorError
from netresilience.core.generators import (
    GeneratorSpec,
    Model,
    calibrate_p_triad,
    equivalent_spec,
    gen_holme_kim,
    gen_random,
    gen_scale_free,
    gen_small_world,
    generate,
    with_seed,
)
from netresilience.core.metrics import clustering_coefficient

pytestmark = [pytest.mark.generators]

BLOG_N, BLOG_M = 1222, 16714


def _is_tree(graph) -> bool:
    return (
        graph.m_active == graph.n_active - 1
        and len(graph.connected_components()) == 1
    )


class TestGeneratorSpec:
    """Feasibility checks."""

    def test_valid(self):
        GeneratorSpec(Model.RANDOM, 10, 20).validate()

    def test_collects_every_problem(self):
        spec = GeneratorSpec(Model.SMALL_WORLD, 1, 5, beta=1.5, p_triad=-0.1)
        problems = spec.problems()
        assert len(problems) == 4
        with pytest.raises(GeneratorError):
            spec.validate()

    def test_too_many_edges(self):
        with pytest.raises(GeneratorError):
            gen_random(4, 7, seed=0)

    def test_equivalent_spec_uses_dataset_size(self):
        spec = equivalent_spec("epinions", Model.SCALE_FREE, seed=3)
        assert (spec.n, spec.target_m, spec.seed) == (2000, 48720, 3)
        assert spec.beta == 0.1

    def test_with_seed(self):
        spec = GeneratorSpec(Model.RANDOM, 10, 20, seed=1)
        assert with_seed(spec, 9).seed == 9
        assert with_seed(spec, 9).n == 10


class TestRandom:
    """G(n, m)."""

    def test_complete_graph_forced(self):
        for seed in range(5):
            graph = gen_random(4, 6, seed)
            assert graph.m_active == 6

    def test_exact_edge_count(self):
        for m in (0, 1, 10, 30, 44, 45):
            assert gen_random(10, m, seed=m).m_active == m

    def test_deterministic(self):
        assert gen_random(50, 200, 4).edges() == gen_random(50, 200, 4).edges()
        assert gen_random(50, 200, 4).edges() != gen_random(50, 200, 5).edges()

    def test_poisson_like_degrees(self):
        mean = 2 * BLOG_M / BLOG_N
        variances = []
        for seed in range(5):
            graph = gen_random(BLOG_N, BLOG_M, seed)
            degrees = np.array(list(graph.degrees().values()))
            assert degrees.mean() == pytest.approx(mean)
            variances.append(degrees.var())
        assert np.mean(variances) == pytest.approx(mean, rel=0.10)


class TestSmallWorld:
    """Watts-Strogatz ring lattice with rewiring."""

    def test_lattice_clustering_without_rewiring(self):
        for n, target_m in ((20, 60), (30, 120), (50, 100)):
            graph = gen_small_world(n, target_m, beta=0.0, seed=0)
            k = 2 * round(target_m / n)
            assert graph.m_active == n * k // 2
            expected = 3 * (k - 2) / (4 * (k - 1))
            assert clustering_coefficient(graph) == pytest.approx(expected, abs=1e-12)

    def test_rewiring_keeps_edge_count(self):
        graph = gen_small_world(100, 400, beta=0.3, seed=2)
        assert graph.m_active == 400
        assert graph.n_active == 100

    def test_rewiring_lowers_clustering(self):
        lattice = gen_small_world(200, 1000, beta=0.0, seed=1)
        rewired = gen_small_world(200, 1000, beta=0.5, seed=1)
        assert clustering_coefficient(rewired) < clustering_coefficient(lattice)

    def test_degree_too_small(self):
        with pytest.raises(GeneratorError):
            gen_small_world(10, 2, beta=0.1, seed=0)

    def test_lattice_infeasible(self):
        with pytest.raises(GeneratorError):
            gen_small_world(4, 6, beta=0.1, seed=0)

    def test_deterministic(self):
        first = gen_small_world(60, 180, 0.2, 8)
        assert first.edges() == gen_small_world(60, 180, 0.2, 8).edges()


class TestScaleFree:
    """Barabasi-Albert preferential attachment."""

    def test_single_attachment_builds_tree(self):
        for seed in range(5):
            assert _is_tree(gen_scale_free(50, 50, seed))

    def test_edge_count(self):
        n, m_per = 200, 4
        graph = gen_scale_free(n, n * m_per, seed=0)
        assert graph.m_active == m_per * (m_per + 1) // 2 + (n - m_per - 1) * m_per

    def test_connected(self):
        graph = gen_scale_free(300, 900, seed=6)
        assert len(graph.connected_components()) == 1

    def test_attachment_too_small(self):
        with pytest.raises(GeneratorError):
            gen_scale_free(10, 4, seed=0)

    def test_deterministic(self):
        first = gen_scale_free(100, 300, 1)
        assert first.edges() == gen_scale_free(100, 300, 1).edges()


class TestHolmeKim:
    """Preferential attachment with triad formation."""

    def test_same_edge_count_as_scale_free(self):
        hk = gen_holme_kim(200, 800, p_triad=0.7, seed=0)
        sf = gen_scale_free(200, 800, seed=0)
        assert hk.m_active == sf.m_active

    def test_no_triads_resembles_scale_free(self):
        seeds = range(3)
        hk = [clustering_coefficient(gen_holme_kim(500, 2500, 0.0, s)) for s in seeds]
        sf = [clustering_coefficient(gen_scale_free(500, 2500, s)) for s in seeds]
        assert abs(np.mean(hk) - np.mean(sf)) < 0.03

    def test_triads_raise_clustering(self):
        low = clustering_coefficient(gen_holme_kim(500, 2000, 0.0, 3))
        high = clustering_coefficient(gen_holme_kim(500, 2000, 1.0, 3))
        assert high > low + 0.1

    def test_deterministic(self):
        first = gen_holme_kim(150, 450, 0.5, 2)
        assert first.edges() == gen_holme_kim(150, 450, 0.5, 2).edges()

    def test_calibration_extremes(self):
        grid = [0.0, 1.0]
        assert calibrate_p_triad(200, 800, 1.0, seeds=(0,), grid=grid) == 1.0
        assert calibrate_p_triad(200, 800, 0.0, seeds=(0,), grid=grid) == 0.0

    def test_calibration_needs_seeds(self):
        with pytest.raises(GeneratorError):
            calibrate_p_triad(50, 100, 0.2, seeds=())


class TestDispatch:
    @pytest.mark.parametrize("model", list(Model))
    def test_generate_every_model(self, model):
        graph = generate(GeneratorSpec(model, 60, 180, seed=4))
        assert graph.n_active == 60
        assert abs(graph.m_active - 180) <= 0.05 * 180


@pytest.mark.slow
class TestBlogScale:
    """Generated equivalents of the blog network."""

    @pytest.mark.parametrize("model", list(Model))
    def test_edge_count_within_five_percent(self, model):
        graph = generate(equivalent_spec("blog", model, seed=0))
        assert graph.n_active == BLOG_N
        assert abs(graph.m_active - BLOG_M) <= 0.05 * BLOG_M

    @pytest.mark.parametrize("model", [Model.SCALE_FREE, Model.HOLME_KIM])
    def test_heavy_tail(self, model):
        for seed in range(5):
            graph = generate(equivalent_spec("blog", model, seed=seed))
            degrees = np.array(list(graph.degrees().values()))
            assert degrees.max() > 5 * degrees.mean()

    def test_small_world_clustering(self):
        graph = generate(equivalent_spec("blog", Model.SMALL_WORLD, seed=0))
        assert clustering_coefficient(graph) == pytest.approx(0.56, abs=0.05)

    def test_calibrated_holme_kim_moves_toward_target(self):
        p_triad = calibrate_p_triad(BLOG_N, BLOG_M, 0.24, seeds=(0,))
        calibrated = clustering_coefficient(gen_holme_kim(BLOG_N, BLOG_M, p_triad, 1))
        plain = clustering_coefficient(gen_holme_kim(BLOG_N, BLOG_M, 0.0, 1))
        assert abs(calibrated - 0.24) <= abs(plain - 0.24)
