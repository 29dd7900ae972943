import numpy as np
import pytest
from scipy.spatial import cKDTree

import splinefield as sf
from splinefield.field import _evaluate_batch

from conftest import make_random_spline


def brute_force_distances(spline, pts, samples_per_segment=100_000):
    """Independent oracle: nearest neighbour over dense uniform curve samples."""
    s = np.linspace(0.0, spline.n_segments, spline.n_segments * samples_per_segment)
    tree = cKDTree(_evaluate_batch(spline, s))
    d, _ = tree.query(np.atleast_2d(pts))
    return d


def _tangent(spline, seg, t):
    return sf.bernstein_derivative_row(t) @ spline.control_points[seg]


# --------------------------------------------------------- segment_distance


def test_segment_distance_on_curve(s_generator_spline):
    ctrl = s_generator_spline.control_points[0]
    x = sf.bernstein_row(0.3) @ ctrl
    d, t = sf.segment_distance(ctrl, x)
    assert d < 1e-9
    assert abs(t - 0.3) < 1e-6


def test_segment_distance_straight_segment():
    ctrl = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    d, t = sf.segment_distance(ctrl, np.array([1.0, 1.0]))
    assert d == 1.0
    assert t == 0.5


def test_segment_distance_not_worse_than_endpoints():
    rng = np.random.default_rng(17)
    ctrl = rng.uniform(-1, 1, size=(3, 2))
    for _ in range(100):
        x = rng.uniform(-2, 2, size=2)
        d, _ = sf.segment_distance(ctrl, x)
        assert d <= np.linalg.norm(ctrl[0] - x) + 1e-12
        assert d <= np.linalg.norm(ctrl[2] - x) + 1e-12


def test_segment_distance_brute_force_oracle():
    rng = np.random.default_rng(99)
    ctrl = rng.uniform(-1, 1, size=(3, 2))
    single = sf.QuadraticSpline.from_control_points(ctrl[None])
    pts = rng.uniform(-2, 2, size=(1000, 2))
    oracle = brute_force_distances(single, pts, samples_per_segment=1_000_000)
    ours = np.array([sf.segment_distance(ctrl, x)[0] for x in pts])
    np.testing.assert_allclose(ours, oracle, atol=1e-4)
    # Analytic result can only beat a sampled minimum.
    assert np.all(ours <= oracle + 1e-12)


# --------------------------------------------------------------------- query


def test_query_on_curve_recovers_phase(s_generator_spline):
    rng = np.random.default_rng(1)
    n = s_generator_spline.n_segments
    for s in rng.uniform(0.0, n, size=25):
        q = sf.query(s_generator_spline, s_generator_spline.evaluate(s))
        assert q.distance < 1e-8
        assert abs(q.phase - s / n) < 1e-6


def test_query_gradient_unit_norm_off_curve(s_generator_spline):
    rng = np.random.default_rng(2)
    eps_on = 1e-9 * s_generator_spline.scale
    for _ in range(200):
        x = rng.uniform(-1.0, 5.0, size=2)
        q = sf.query(s_generator_spline, x)
        if q.distance >= eps_on:
            assert abs(np.linalg.norm(q.gradient) - 1.0) < 1e-9


def test_query_zero_gradient_on_curve(s_generator_spline):
    x = s_generator_spline.evaluate(0.7)
    q = sf.query(s_generator_spline, x)
    np.testing.assert_array_equal(q.gradient, np.zeros(2))


def test_query_grid_matches_brute_force(s_generator_spline):
    xs = np.linspace(-1.0, 5.0, 50)
    ys = np.linspace(-2.5, 2.5, 50)
    grid = np.array([[x, y] for y in ys for x in xs])
    dist = sf.query_arrays(s_generator_spline, grid)[0]
    oracle = brute_force_distances(s_generator_spline, grid)
    np.testing.assert_allclose(dist, oracle, atol=1e-4)


def test_query_projection_identity(s_generator_spline):
    rng = np.random.default_rng(3)
    for _ in range(300):
        x = rng.uniform(-1.0, 5.0, size=2)
        q = sf.query(s_generator_spline, x)
        np.testing.assert_allclose(
            q.projection, x - q.distance * q.gradient, atol=1e-9
        )


def test_query_orthogonality_at_interior_roots():
    rng = np.random.default_rng(4)
    for trial in range(50):
        spline = make_random_spline(rng, 5, 3)
        x = rng.uniform(-1.0, 1.0, size=3)
        q = sf.query(spline, x)
        if 1e-9 < q.t_local < 1.0 - 1e-9:
            resid = q.projection - x
            tangent = _tangent(spline, q.segment_index, q.t_local)
            assert abs(resid @ tangent) < 1e-7 * spline.scale**2


def test_query_gradient_matches_finite_differences(s_generator_spline):
    rng = np.random.default_rng(5)
    h = 1e-5
    spline = s_generator_spline
    tested = 0
    for _ in range(400):
        x = rng.uniform(-0.5, 4.5, size=2)
        per_seg = sorted(
            sf.segment_distance(spline.control_points[i], x)[0]
            for i in range(spline.n_segments)
        )
        # Medial-axis exclusion, plus a margin so the probes stay off-curve.
        if per_seg[1] - per_seg[0] <= 10 * h or per_seg[0] <= 10 * h:
            continue
        q = sf.query(spline, x)
        fd = np.empty(2)
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = h
            fd[axis] = (
                sf.query(spline, x + e).distance - sf.query(spline, x - e).distance
            ) / (2 * h)
        np.testing.assert_allclose(q.gradient, fd, atol=1e-4)
        tested += 1
    assert tested > 200


def test_distance_is_1_lipschitz(s_generator_spline):
    rng = np.random.default_rng(6)
    pts = rng.uniform(-2.0, 6.0, size=(200, 2, 2))
    for a, b in pts:
        da = sf.query(s_generator_spline, a).distance
        db = sf.query(s_generator_spline, b).distance
        assert abs(da - db) <= np.linalg.norm(a - b) + 1e-12


# --------------------------------------------------------------- batch query


def test_batch_singleton_equals_query(s_generator_spline):
    x = np.array([0.7, -0.3])
    single = sf.query(s_generator_spline, x)
    batch = sf.batch_query(s_generator_spline, x[None])[0]
    assert batch.distance == single.distance
    assert batch.segment_index == single.segment_index
    np.testing.assert_array_equal(batch.gradient, single.gradient)


def test_batch_permutation_equivariance(s_generator_spline):
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.0, 5.0, size=(64, 2))
    perm = rng.permutation(64)
    direct = sf.query_arrays(s_generator_spline, pts)[0]
    shuffled = sf.query_arrays(s_generator_spline, pts[perm])[0]
    np.testing.assert_array_equal(direct[perm], shuffled)


def test_batch_matches_sequential_queries():
    rng = np.random.default_rng(8)
    spline = make_random_spline(rng, 20, 10)
    pts = rng.uniform(-1.0, 1.0, size=(2500, 10))
    dist, grad, proj, seg, t_local, phase = sf.query_arrays(spline, pts)
    idx = rng.choice(2500, size=64, replace=False)
    for k in idx:
        q = sf.query(spline, pts[k])
        assert q.distance == dist[k]
        assert q.segment_index == seg[k]
        assert q.t_local == t_local[k]
        np.testing.assert_array_equal(q.gradient, grad[k])


def test_batch_rejects_bad_shapes(s_generator_spline):
    with pytest.raises(sf.DomainError):
        sf.query_arrays(s_generator_spline, np.zeros((4, 3)))
    with pytest.raises(sf.DomainError):
        sf.query_arrays(s_generator_spline, np.array([[np.nan, 0.0]]))


def test_batch_threads_env_does_not_change_results(s_generator_spline, monkeypatch):
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1.0, 5.0, size=(512, 2))
    serial = sf.query_arrays(s_generator_spline, pts)
    monkeypatch.setenv("SPLINEFIELD_THREADS", "4")
    threaded = sf.query_arrays(s_generator_spline, pts)
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a, b)


# --------------------------------------------------------------------- union


def test_union_singleton_identical(s_generator_spline):
    field = sf.UnionField([s_generator_spline])
    x = np.array([1.0, 1.0])
    q, idx = sf.union_query(field, x)
    assert idx == 0
    assert q.distance == sf.query(s_generator_spline, x).distance


def test_union_picks_nearer_member():
    line_a = sf.QuadraticSpline.from_control_points(
        np.array([[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]])
    )
    line_b = sf.QuadraticSpline.from_control_points(
        np.array([[[0.0, 4.0], [1.0, 4.0], [2.0, 4.0]]])
    )
    field = sf.UnionField([line_a, line_b])
    _, idx = sf.union_query(field, np.array([1.0, 1.0]))
    assert idx == 0
    _, idx = sf.union_query(field, np.array([1.0, 3.0]))
    assert idx == 1


def test_union_distance_is_exact_member_min():
    rng = np.random.default_rng(10)
    members = [make_random_spline(rng, 3, 2) for _ in range(3)]
    field = sf.UnionField(members)
    for _ in range(500):
        x = rng.uniform(-1.5, 1.5, size=2)
        q, idx = sf.union_query(field, x)
        per_member = [sf.query(m, x).distance for m in members]
        assert q.distance == min(per_member)
        assert per_member[idx] == q.distance


def test_union_requires_matching_dims():
    rng = np.random.default_rng(11)
    with pytest.raises(sf.DomainError):
        sf.UnionField([make_random_spline(rng, 2, 2), make_random_spline(rng, 2, 3)])
    with pytest.raises(sf.DomainError):
        sf.UnionField([])


# ---------------------------------------------------------- numerical baseline


def test_baseline_converges_with_refinement():
    ctrl = np.array([[[0.0, 0.0], [0.5, 0.8], [1.0, 0.0]]])
    spline = sf.QuadraticSpline.from_control_points(ctrl)
    x = np.array([0.3, 0.4])
    exact = sf.query(spline, x).distance
    d, _ = sf.numerical_baseline_query(spline, x, 1_000_000)
    assert abs(d - exact) < 1e-3


def test_baseline_k50_has_5deg_gradient_error(s_generator_spline):
    spline = s_generator_spline
    xs = np.linspace(-0.5, 4.5, 40)
    ys = np.linspace(-2.0, 2.0, 40)
    worst = 0.0
    for x in xs:
        for y in ys:
            p = np.array([x, y])
            q = sf.query(spline, p)
            if q.distance < 1e-3:
                continue
            d, g = sf.numerical_baseline_query(spline, p, 50)
            cosang = np.clip(g @ q.gradient, -1.0, 1.0)
            worst = max(worst, np.degrees(np.arccos(cosang)))
    assert worst > 5.0


def test_baseline_exact_hit_is_zero(s_generator_spline):
    samples = _evaluate_batch(s_generator_spline, np.linspace(0.0, 2.0, 50))
    d, g = sf.numerical_baseline_query(s_generator_spline, samples[13], 50)
    assert d == 0.0
    np.testing.assert_array_equal(g, np.zeros(2))


def test_baseline_requires_two_samples(s_generator_spline):
    with pytest.raises(sf.DomainError):
        sf.numerical_baseline_query(s_generator_spline, np.zeros(2), 1)


# ------------------------------------------------------- brute-force bounds


def test_analytic_never_exceeds_sampled_distance():
    rng = np.random.default_rng(12)
    spline = make_random_spline(rng, 4, 2)
    pts = rng.uniform(-1.0, 1.0, size=(300, 2))
    sampled = brute_force_distances(spline, pts, samples_per_segment=100_000)
    analytic = sf.query_arrays(spline, pts)[0]
    assert np.all(analytic <= sampled + 1e-12)
    np.testing.assert_allclose(analytic, sampled, atol=1e-4)
