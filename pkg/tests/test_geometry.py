import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from clkinetic.geometry import (
    Ball,
    ConvexPolygon,
    Disk,
    NoExitError,
    PeriodicBox,
    TemperatureField,
    domain_from_dict,
    domain_to_dict,
)

HEXAGON = [(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)) for k in range(6)]
DOMAINS = [Disk(), Ball(), ConvexPolygon(HEXAGON), PeriodicBox()]


def test_disk_exit_times_along_axis():
    d = Disk()
    assert d.exit_time([0.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0, abs=1e-15)
    assert d.exit_time([0.5, 0.0], [1.0, 0.0]) == pytest.approx(0.5, abs=1e-15)


def test_box_exit_through_floor_wraps_x1():
    box = PeriodicBox()
    assert box.exit_time([0.2, 0.8], [-0.2, -0.2]) == pytest.approx(4.0, abs=1e-14)
    q = box.exit_point([0.2, 0.8], [-0.2, -0.2])
    np.testing.assert_allclose(q.position, [0.4, 0.0], atol=1e-14)
    np.testing.assert_array_equal(q.normal, [0.0, -1.0])
    assert q.temperature == pytest.approx(0.5 + 0.3 * math.sin(2 * math.pi * 0.4), abs=1e-14)


def test_box_exit_through_lid():
    q = PeriodicBox().exit_point([0.8, 0.2], [-0.2, 0.4])
    np.testing.assert_allclose(q.position, [0.4, 1.0], atol=1e-14)
    assert q.face == 1 and q.temperature == 1.0


def test_disk_exit_point_and_normal():
    q = Disk().exit_point([0.0, 0.0], [1.0, 0.0])
    np.testing.assert_allclose(q.position, [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(q.normal, [1.0, 0.0], atol=1e-15)


def test_bracket_values():
    d = Disk()
    assert d.bracket([0.0, 0.0], [1.0, 0.0]) == pytest.approx(3.0)
    assert d.bracket([0.0, 0.0], [4.0, 0.0]) == pytest.approx(3.25)
    # outgoing velocity on the boundary: zero exit time
    assert d.bracket([1.0, 0.0], [4.0, 0.0]) == pytest.approx(3.0)


def test_zero_velocity_from_interior_has_no_exit():
    with pytest.raises(NoExitError):
        Disk().exit_time([0.1, 0.2], [0.0, 0.0])
    with pytest.raises(NoExitError):
        PeriodicBox().exit_time([0.1, 0.2], [1.0, 0.0])


def test_ball_and_polygon_exit_times():
    assert Ball().exit_time([0, 0, 0], [0, 0, 2.0]) == pytest.approx(0.5)
    sq = ConvexPolygon([(0, 0), (2, 0), (2, 1), (0, 1)])
    assert sq.exit_time([0.5, 0.5], [1.0, 0.0]) == pytest.approx(1.5)
    q = sq.exit_point([0.5, 0.5], [0.0, -1.0])
    np.testing.assert_allclose(q.normal, [0.0, -1.0], atol=1e-15)


def test_polygon_rejects_clockwise_and_nonconvex_vertices():
    with pytest.raises(ValueError):
        ConvexPolygon([(0, 0), (0, 1), (1, 0)])
    with pytest.raises(ValueError):
        ConvexPolygon([(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)])


def test_volumes_and_cell_volumes():
    assert Disk().volume == pytest.approx(math.pi)
    assert Ball().volume == pytest.approx(4 * math.pi / 3)
    assert Disk().cell_volume([0, 0], [1, 1]) == pytest.approx(math.pi / 4, abs=1e-10)
    assert ConvexPolygon(HEXAGON).volume == pytest.approx(1.5 * math.sqrt(3))
    assert PeriodicBox().cell_volume([0.5, 0.5], [2, 2]) == pytest.approx(0.25)


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: type(d).__name__)
def test_exit_point_lies_on_boundary_and_path_stays_inside(dom):
    rng = np.random.default_rng(4)
    x = dom.sample_uniform(300, rng)
    v = rng.standard_normal((300, dom.dim))
    if isinstance(dom, PeriodicBox):
        v[:, 1] += np.sign(v[:, 1]) * 0.05
    t, Q, N, theta, faces = dom.exit_points(x, v)
    assert np.all(t > 0)
    np.testing.assert_allclose(np.linalg.norm(N, axis=1), 1.0, atol=1e-12)
    lo, hi = dom.theta_bounds
    assert np.all((theta >= lo - 1e-15) & (theta <= hi + 1e-15))
    if isinstance(dom, PeriodicBox):
        assert np.all((Q[:, 0] >= 0) & (Q[:, 0] <= 1))
        assert np.all(np.isin(Q[:, 1], [0.0, 1.0]))
    else:
        # moving slightly back from q stays inside, moving slightly past leaves
        assert np.all(dom.distance_outside(Q) < 1e-10)
        for s in (0.25, 0.5, 0.999):
            assert np.all(dom.distance_outside(x + s * t[:, None] * v) <= 1e-12)
        assert np.all(dom.distance_outside(x + 1.001 * t[:, None] * v) > 0)


@settings(max_examples=150, deadline=None)
@given(
    r=st.floats(0.0, 0.9),
    a=st.floats(0, 2 * math.pi),
    b=st.floats(0, 2 * math.pi),
    speed=st.floats(0.1, 10.0),
)
def test_exit_time_decreases_at_unit_rate_along_the_ray(r, a, b, speed):
    d = Disk()
    x = np.array([r * math.cos(a), r * math.sin(a)])
    v = speed * np.array([math.cos(b), math.sin(b)])
    h = 1e-6
    s0 = d.exit_time(x, v)
    assume(s0 > 10 * h)
    fd = (d.exit_time(x + h * v, v) - s0) / h
    assert fd == pytest.approx(-1.0, abs=1e-4)


def test_exit_time_derivative_in_polygon_and_box():
    for dom, x, v in [(ConvexPolygon(HEXAGON), [0.1, -0.2], [0.3, 0.7]), (PeriodicBox(), [0.3, 0.6], [1.7, -0.4])]:
        x, v = np.array(x), np.array(v)
        h = 1e-6
        fd = (dom.exit_time(x + h * v, v) - dom.exit_time(x, v)) / h
        assert fd == pytest.approx(-1.0, abs=1e-4)


def test_temperature_fields():
    s = TemperatureField.sinusoid(0.5, 0.3)
    assert s.bounds == pytest.approx((0.2, 0.8))
    assert s.shifted(0.25)(0.0) == pytest.approx(s(0.25))
    p = TemperatureField.piecewise_linear([0.0, 0.5, 1.0], [1.0, 2.0, 1.0], period=1.0)
    np.testing.assert_allclose(p(np.array([0.25, 0.75, 1.25])), [1.5, 1.5, 1.5])
    with pytest.raises(ValueError):
        TemperatureField.constant(0.0)
    with pytest.raises(ValueError):
        TemperatureField.sinusoid(0.3, 0.3)


def test_disk_temperature_varies_with_polar_angle():
    dom = Disk(temperature=TemperatureField.piecewise_linear([0, math.pi, 2 * math.pi], [1.0, 2.0, 1.0], period=2 * math.pi))
    assert dom.exit_point([0, 0], [-1.0, 0.0]).temperature == pytest.approx(2.0)
    assert dom.exit_point([0, 0], [0.0, 1.0]).temperature == pytest.approx(1.5)


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: type(d).__name__)
def test_domain_dict_round_trip(dom):
    d = domain_to_dict(dom)
    again = domain_to_dict(domain_from_dict(json.loads(json.dumps(d))))
    assert again == d


@pytest.mark.parametrize("delta", [0.21, 0.3, 0.7, 0.1234567])
def test_shifted_periodic_piecewise_field(delta):
    p = TemperatureField.piecewise_linear([0.0, 0.3, 0.8, 1.0], [0.3, 0.9, 0.5, 0.3], period=1.0)
    s = np.linspace(0, 1, 101)
    np.testing.assert_allclose(p.shifted(delta)(s), p(s + delta), atol=1e-14)
