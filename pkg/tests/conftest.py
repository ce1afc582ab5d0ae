import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from polydesign.domain import Domain  # noqa: E402
from polydesign.geometry import Kind, Polygon, polygon_area  # noqa: E402
from polydesign.sampler import SamplerConfig, sample_structure  # noqa: E402

# HYP_EXAMPLES raises the example count for a deeper local run
settings.register_profile("default", deadline=None, max_examples=int(os.environ.get("HYP_EXAMPLES", 60)),
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


# --- shared builders ------------------------------------------------------


def square(x0=0.0, y0=0.0, size=1.0, kind=Kind.CLOSED) -> Polygon:
    return Polygon([(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)], kind)


def random_domain(rng, *, kind=None, with_obstacles=True) -> Domain:
    """Rectangle or L-shaped area, 0-3 convex obstacles, random limits."""
    w, h = rng.uniform(40, 200, size=2)
    if rng.random() < 0.3:
        area = Polygon([(0, 0), (w, 0), (w, 0.5 * h), (0.5 * w, 0.5 * h), (0.5 * w, h), (0, h)])
    else:
        area = Polygon([(0, 0), (w, 0), (w, h), (0, h)])
    kind = kind or (Kind.CLOSED if rng.random() < 0.7 else Kind.OPEN)
    min_points = 3 if kind is Kind.CLOSED else 2
    max_points = int(rng.integers(min_points + 1, 11))
    max_polygons = int(rng.integers(1, 5))
    prohibited = []
    if with_obstacles:
        probe = Domain(area)
        for _ in range(int(rng.integers(1, 4))):
            # a small irregular obstacle well inside the area
            for _attempt in range(200):
                c = rng.uniform([0, 0], [w, h])
                r = rng.uniform(0.03, 0.08) * min(w, h)
                ang = np.sort(rng.uniform(0, 2 * np.pi, size=int(rng.integers(3, 7))))
                pts = c + r * np.c_[np.cos(ang), np.sin(ang)]
                ob = Polygon(pts)
                if len(pts) >= 3 and polygon_area(ob) > 1e-3 * r * r and probe.is_free(pts).all() and \
                        probe.is_free(c).all() and all(
                            np.hypot(*(c - q.points.mean(axis=0))) > 3 * r + 0.1 * min(w, h)
                            for q in prohibited):
                    prohibited.append(ob)
                    break
    return Domain(area, prohibited, min_points=min_points, max_points=max_points, min_polygons=1,
                  max_polygons=max_polygons, polygon_kind=kind)


def random_structure(d: Domain, rng):
    return sample_structure(d, SamplerConfig.for_domain(d), rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_domain():
    return Domain.rectangle(100, 100, max_points=10, max_polygons=3)


# --- acceptance summary ---------------------------------------------------

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    ac_id = props.get("acceptance_id")
    if ac_id is None:
        return
    status = "PASS" if report.passed else "FAIL"
    # a criterion split over parametrized cases fails if any case fails
    if _acceptance.get(ac_id, ("PASS",))[0] == "FAIL":
        status = "FAIL"
    _acceptance[ac_id] = (status, props.get("acceptance_label", report.nodeid))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            ac_id, label = m.args
            item.user_properties.append(("acceptance_id", ac_id))
            item.user_properties.append(("acceptance_label", label))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for ac_id in sorted(_acceptance, key=lambda k: int(k[2:])):
        status, label = _acceptance[ac_id]
        terminalreporter.write_line(f"{ac_id:<5} {status}  {label}")
    passed = sum(s == "PASS" for s, _ in _acceptance.values())
    terminalreporter.write_line(f"{passed}/{len(_acceptance)} acceptance criteria passed")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id, label): numbered acceptance criterion")
