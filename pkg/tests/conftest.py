"""Shared test fixtures: bundled-scenario loading and hypothesis profile."""

import math
import os

import pytest
from hypothesis import HealthCheck, settings

import rightofway
from rightofway.priority import parse_graph
from rightofway.sim import load_scenario, scenario_sections

settings.register_profile(
    "suite", deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.load_profile("suite")

SCENARIO_DIR = os.path.join(os.path.dirname(rightofway.__file__), "scenarios")


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, name + ".cfg")


def graph_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, name + ".graph")


def load(name: str):
    return load_scenario(scenario_path(name))


def load_graph(name: str):
    with open(graph_path(name), "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def rays_of(scenario):
    """Path id -> (origin, heading) for the distance-based oracles."""
    return {sp.geometry.id: (sp.geometry.origin, sp.geometry.heading)
            for sp in scenario.paths}


@pytest.fixture(scope="session")
def eight_path():
    return load("eight_path")


@pytest.fixture(scope="session")
def triples():
    """name -> (scenario, graph, sections) for the three bundled triples."""
    out = {}
    for name in ("triple_acyclic", "triple_deadlock", "triple_cyclic_free"):
        sc = load(name)
        out[name] = (sc, load_graph(name), scenario_sections(sc))
    return out
