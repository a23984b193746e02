"""Shared oracles and strategies."""

from __future__ import annotations

import random
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cfquot.generators import random_metric

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def nx_closure(n, edges):
    """All-pairs shortest paths over ``(u, v, w)`` edges via networkx Dijkstra (exact with Fractions)."""
    G = nx.Graph()
    G.add_nodes_from(range(n))
    for u, v, w in edges:
        if u == v:
            continue
        if G.has_edge(u, v):
            w = min(w, G[u][v]["weight"])
        G.add_edge(u, v, weight=w)
    lengths = dict(nx.all_pairs_dijkstra_path_length(G, weight="weight"))
    return tuple(tuple(Fraction(lengths[i][j]) for j in range(n)) for i in range(n))


def complete_edges(dist):
    n = len(dist)
    return [(i, j, dist[i][j]) for i in range(n) for j in range(i + 1, n)]


@st.composite
def metrics(draw, min_n=2, max_n=7):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    return random_metric(random.Random(seed), n)


@st.composite
def seeds(draw):
    return random.Random(draw(st.integers(0, 2**32 - 1)))


@pytest.fixture
def F():
    return Fraction


# -- acceptance reporting -------------------------------------------------------------

ACCEPTANCE: list[str] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
