import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pricesim.grid import AdjacencyGraph, PatchSetError, build_graph, generate_grid
from pricesim.splitting import (
    GRAPH_KINDS,
    Partition,
    SplitError,
    SplitStrategy,
    average_split,
    greedy_color,
    read_partition,
    split,
    validate_partition,
    write_partition,
)

P = 224


def adjacency(g):
    nb = {v: set() for v in range(g.n_vertices)}
    for u, v in g.edges:
        nb[u].add(v)
        nb[v].add(u)
    return nb


def naive_greedy(nb, order):
    colors = {}
    for v in order:
        used = {colors[u] for u in nb[v] if u in colors}
        colors[v] = min(c for c in range(len(nb) + 1) if c not in used)
    return [colors[v] for v in range(len(nb))]


def naive_order(nb, kind):
    n = len(nb)
    if kind == "largest_first":
        return sorted(range(n), key=lambda v: (-len(nb[v]), v))
    if kind == "smallest_last":
        left = set(range(n))
        removed = []
        while left:
            v = min(left, key=lambda u: (len(nb[u] & left), u))
            removed.append(v)
            left.remove(v)
        return removed[::-1]
    if kind == "connected_sequential":
        seen, order = set(), []
        for root in range(n):
            if root in seen:
                continue
            seen.add(root)
            queue = [root]
            while queue:
                v = queue.pop(0)
                order.append(v)
                for u in sorted(nb[v]):
                    if u not in seen:
                        seen.add(u)
                        queue.append(u)
        return order
    raise ValueError(kind)


def naive_dsatur(nb):
    n = len(nb)
    colors = {}
    while len(colors) < n:
        def key(v):
            sat = len({colors[u] for u in nb[v] if u in colors})
            return (-sat, -len(nb[v]), v)
        v = min((u for u in range(n) if u not in colors), key=key)
        used = {colors[u] for u in nb[v] if u in colors}
        colors[v] = min(c for c in range(n + 1) if c not in used)
    return [colors[v] for v in range(n)]


def random_masked(r, c, density, seed):
    try:
        return generate_grid(r, c, P, density, seed)
    except PatchSetError:
        return generate_grid(1, 1, P)


K4 = AdjacencyGraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


@pytest.mark.parametrize("kind", GRAPH_KINDS)
def test_k4_needs_four_classes(kind, backend):
    part = greedy_color(K4, SplitStrategy(kind), seed=1)
    assert part.N == 4
    assert sorted(part.classes) == [(0,), (1,), (2,), (3,)]


def test_path_largest_first(backend):
    g = AdjacencyGraph.from_edges(3, [(0, 1), (1, 2)])
    part = greedy_color(g, SplitStrategy("largest_first"))
    assert part.N == 2
    assert set(part.classes) == {(0, 2), (1,)}


def test_edgeless_single_class(backend):
    g = AdjacencyGraph.from_edges(5, [])
    part = greedy_color(g, SplitStrategy("largest_first"))
    assert part.N == 1 and part.classes == ((0, 1, 2, 3, 4),)


def test_empty_graph_rejected():
    with pytest.raises(SplitError):
        greedy_color(AdjacencyGraph.from_edges(0, []), SplitStrategy("largest_first"))


def test_avg_kind_rejected_by_greedy_color():
    with pytest.raises(SplitError):
        greedy_color(K4, SplitStrategy("avg_shuffled", 2))


def test_strategy_validation():
    with pytest.raises(SplitError):
        SplitStrategy("bogus")
    with pytest.raises(SplitError):
        SplitStrategy("avg_unshuffled")
    with pytest.raises(SplitError):
        SplitStrategy("avg_unshuffled", 0)
    s = SplitStrategy.parse("avg_shuffled:5")
    assert s.requested_n == 5 and s.label == "avg_shuffled:5" and s.family == "avg"
    assert SplitStrategy.parse("smallest_last").family == "graph"


def test_average_split_even():
    part = average_split(generate_grid(3, 4, P), 4, shuffled=False)
    assert part.sizes.tolist() == [3, 3, 3, 3]
    assert part.classes[0] == (0, 1, 2)


def test_average_split_remainder():
    part = average_split(generate_grid(2, 5, P), 4, shuffled=False)
    assert part.sizes.tolist() == [3, 3, 2, 2]


def test_average_split_shuffled_is_seeded():
    ps = generate_grid(2, 5, P)
    a = average_split(ps, 4, shuffled=True, seed=11)
    b = average_split(ps, 4, shuffled=True, seed=11)
    assert a.sizes.tolist() == [3, 3, 2, 2]
    assert a.classes == b.classes
    assert a.classes != average_split(ps, 4, shuffled=False).classes


def test_average_split_bounds():
    ps = generate_grid(2, 2, P)
    with pytest.raises(SplitError):
        average_split(ps, 5, shuffled=False)
    with pytest.raises(SplitError):
        average_split(ps, 0, shuffled=False)


def test_k4_two_classes_violations():
    part = Partition.from_classes(SplitStrategy("avg_unshuffled", 2), [{0, 1}, {2, 3}], 4)
    assert sorted(validate_partition(K4, part)) == [(0, 1), (2, 3)]


def test_edgeless_any_partition_is_proper():
    g = AdjacencyGraph.from_edges(6, [])
    part = average_split(generate_grid(1, 6, P), 2, shuffled=True, seed=3)
    assert validate_partition(g, part) == []


def test_from_classes_rejects_overlap_and_gaps():
    s = SplitStrategy("avg_unshuffled", 2)
    with pytest.raises(SplitError):
        Partition.from_classes(s, [{0, 1}, {1, 2}], 3)
    with pytest.raises(SplitError):
        Partition.from_classes(s, [{0}, {2}], 3)


@pytest.mark.parametrize("kind", ["largest_first", "smallest_last", "connected_sequential"])
@pytest.mark.parametrize("seed", range(15))
def test_orders_match_naive_reference(kind, seed, backend):
    ps = random_masked(7, 8, 0.7, seed)
    g = build_graph(ps)
    nb = adjacency(g)
    part = greedy_color(g, SplitStrategy(kind))
    assert part.labels.tolist() == naive_greedy(nb, naive_order(nb, kind))


@pytest.mark.parametrize("seed", range(15))
def test_dsatur_matches_naive_reference(seed, backend):
    g = build_graph(random_masked(7, 8, 0.7, seed))
    part = greedy_color(g, SplitStrategy("saturation_largest_first"))
    assert part.labels.tolist() == naive_dsatur(adjacency(g))


@pytest.mark.parametrize("seed", range(15))
def test_independent_set_classes_are_maximal(seed):
    g = build_graph(random_masked(7, 8, 0.7, seed))
    nb = adjacency(g)
    part = greedy_color(g, SplitStrategy("independent_set"))
    remaining = set(range(g.n_vertices))
    for cls in part.classes:
        members = set(cls)
        assert all(not (nb[v] & members) for v in members)
        # nothing left over could have joined this class
        for v in remaining - members:
            assert nb[v] & members
        remaining -= members


def test_random_sequential_depends_on_seed(backend):
    g = build_graph(generate_grid(12, 12, P))
    s = SplitStrategy("random_sequential")
    a, b = greedy_color(g, s, 1), greedy_color(g, s, 1)
    assert np.array_equal(a.labels, b.labels)
    assert any(not np.array_equal(a.labels, greedy_color(g, s, k).labels) for k in range(2, 6))


def test_proper_on_random_masked_grids(backend):
    rng = np.random.default_rng(2024)
    for trial in range(100):
        r, c = (int(v) for v in rng.integers(1, 16, size=2))
        ps = random_masked(r, c, float(rng.uniform(0.3, 1.0)), trial)
        g = build_graph(ps)
        for kind in GRAPH_KINDS:
            part = greedy_color(g, SplitStrategy(kind), seed=trial)
            assert validate_partition(g, part) == [], (trial, kind)
            flat = sorted(i for cls in part.classes for i in cls)
            assert flat == list(range(len(ps)))
            assert part.N == len(part.classes) and min(part.sizes) > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.sampled_from(GRAPH_KINDS), st.integers(0, 10**6))
def test_full_grid_needs_at_least_four(r, c, kind, seed):
    g = build_graph(generate_grid(r, c, P))
    part = greedy_color(g, SplitStrategy(kind), seed)
    assert part.N >= 4
    assert validate_partition(g, part) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60), st.booleans(), st.integers(0, 10**6))
def test_average_split_sizes(total, n, shuffled, seed):
    ps = generate_grid(1, total, P)
    if n > total:
        with pytest.raises(SplitError):
            average_split(ps, n, shuffled, seed)
        return
    part = average_split(ps, n, shuffled, seed)
    sizes = part.sizes.tolist()
    assert len(sizes) == n and sum(sizes) == total
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)
    flat = sorted(i for cls in part.classes for i in cls)
    assert flat == list(range(total))


def test_split_dispatch():
    ps = generate_grid(3, 3, P)
    g = build_graph(ps)
    assert split(ps, g, SplitStrategy("avg_unshuffled", 3)).sizes.tolist() == [3, 3, 3]
    assert split(ps, g, SplitStrategy("largest_first")).N == 4


def test_partition_file_roundtrip(tmp_path):
    ps = generate_grid(4, 4, P)
    part = greedy_color(build_graph(ps), SplitStrategy("smallest_last"))
    f = tmp_path / "partition.csv"
    write_partition(part, f)
    back = read_partition(f, len(ps))
    assert back.strategy == part.strategy
    assert np.array_equal(back.labels, part.labels)


def test_partition_file_errors(tmp_path):
    f = tmp_path / "partition.csv"
    f.write_text("0,0\n")
    with pytest.raises(SplitError, match="header"):
        read_partition(f)
    f.write_text("# strategy=largest_first\n0,0\n0,1\n")
    with pytest.raises(SplitError):
        read_partition(f)
    f.write_text("# strategy=largest_first\n0;0\n")
    with pytest.raises(SplitError, match=":2:"):
        read_partition(f)
