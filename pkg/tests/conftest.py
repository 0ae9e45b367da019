"""Shared, session-scoped constructions (tracing and measures are the slow part)."""

from dataclasses import dataclass

import pytest

from stokeslab.core import zeros_of_d
from stokeslab.equilibrium import build_sigma, compute_ell, equilibrium_measure
from stokeslab.trajectories import build_critical_graph

MAIN_A = complex(-3, 2)
GRAPH_AS = [complex(-3, 2), complex(1, 1), complex(0, 4), complex(-2, 1)]


@dataclass
class Setup:
    a: complex
    p: object
    graph: object
    sigma: object
    ell: complex
    ell_report: dict
    mu: object


_cache = {}


def setup_for(a):
    a = complex(a)
    if a not in _cache:
        p = zeros_of_d(a)
        g = build_critical_graph(p)
        sigma = build_sigma(p, g)
        ell, rep = compute_ell(p, g, sigma)
        mu = equilibrium_measure(p, g.gamma)
        _cache[a] = Setup(a, p, g, sigma, ell, rep, mu)
    return _cache[a]


@pytest.fixture(scope="session")
def main_setup():
    return setup_for(MAIN_A)


@pytest.fixture(scope="session")
def first_quadrant_setup():
    return setup_for(complex(1, 1))


@pytest.fixture(scope="session", params=GRAPH_AS, ids=lambda a: f"A={a}")
def any_setup(request):
    return setup_for(request.param)
