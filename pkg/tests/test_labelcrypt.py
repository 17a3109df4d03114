import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pricesim.grid import build_graph, generate_grid
from pricesim.labelcrypt import (
    LabelCryptError,
    decrypt_labels,
    eigen_basis,
    encrypt_labels,
    encrypt_subset,
    normalize,
    output_utility,
    read_basis,
    read_label_set,
    write_basis,
    write_keys,
    write_label_set,
)
from pricesim.splitting import GRAPH_KINDS, SplitStrategy, greedy_color

P = 224


def original_rows(coords, enc, ids):
    pos = {int(i): r for r, i in enumerate(ids)}
    return np.asarray(coords)[[pos[int(i)] for i in enc.patch_ids]]


grid_coords = st.lists(
    st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=2, max_size=40, unique=True
).map(lambda cells: np.array(cells, dtype=np.int64) * P)


def test_constant_column_guard():
    c, s = normalize([[5, 0], [5, 224], [5, 448]])
    assert np.all(c[:, 0] == 0.0)
    assert s.std[0] == 1.0


def test_two_rows_centered():
    c, _ = normalize([[0, 0], [2, 2]])
    assert c.mean(axis=0).tolist() == [0.0, 0.0]
    assert c[0, 0] == -c[1, 0] == c[0, 1]


def test_strip_normalization():
    c, s = normalize([[0, 0], [224, 0], [448, 0]])
    assert s.mean[0] == 224 and s.std[0] == 224
    assert c[:, 0].tolist() == [-1.0, 0.0, 1.0]


def test_single_row_rejected():
    with pytest.raises(LabelCryptError, match="degenerate sub-dataset"):
        normalize([[0, 0]])


def test_decorrelated_spectrum():
    c, _ = normalize([[1, 0], [-1, 0], [0, 1], [0, -1]])
    b = eigen_basis(c)
    np.testing.assert_allclose(b.eigenvalues, [1.0, 1.0], atol=1e-6)


def test_correlated_spectrum():
    c, _ = normalize([[0, 0], [1, 1], [2, 2], [3, 3]])
    b = eigen_basis(c)
    np.testing.assert_allclose(b.eigenvalues, [2.0, 0.0], atol=1e-9)


def test_eigen_basis_errors():
    with pytest.raises(LabelCryptError):
        eigen_basis(np.array([[np.nan, 0], [1, 1]]))
    with pytest.raises(LabelCryptError):
        eigen_basis(np.zeros((3, 2)), k=3)


@settings(max_examples=60, deadline=None)
@given(grid_coords)
def test_basis_is_orthonormal_and_sorted(coords):
    c, s = normalize(coords)
    assert np.all(np.abs(c.mean(axis=0)) < 1e-9)
    b = eigen_basis(c)
    v = b.eigenvectors
    np.testing.assert_allclose(v.T @ v, np.eye(2), atol=1e-9)
    assert b.eigenvalues[0] >= b.eigenvalues[1]


def test_k2_has_no_padding_and_is_orthogonal():
    coords = np.array([[0, 0], [224, 0], [0, 224], [448, 448], [224, 672]])
    c, s = normalize(coords)
    b = eigen_basis(c, 2)
    enc = encrypt_labels(np.arange(5), coords, b, s, P, seed=4)
    centered = c[enc.patch_ids]
    np.testing.assert_allclose(enc.components, centered @ b.eigenvectors, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(enc.components, axis=1),
                               np.linalg.norm(centered, axis=1), atol=1e-12)


def test_k1_pads_one_component():
    coords = np.array([[0, 0], [224, 0], [0, 224], [448, 448]])
    c, s = normalize(coords)
    b = eigen_basis(c, 1)
    enc = encrypt_labels(np.arange(4), coords, b, s, P, seed=4)
    assert enc.components.shape == (4, 2)
    proj = (c @ b.retained)[enc.patch_ids, 0]
    np.testing.assert_allclose(enc.components[:, 0], proj, atol=1e-12)
    assert np.all(enc.components[:, 1] >= proj.min())
    assert np.all(enc.components[:, 1] <= proj.max())


def test_encrypt_is_deterministic(tmp_path):
    coords = generate_grid(4, 4, P).coords
    a, _, _ = encrypt_subset(np.arange(16), coords, P, k=1, seed=9)
    b, _, _ = encrypt_subset(np.arange(16), coords, P, k=1, seed=9)
    write_label_set(a, tmp_path / "a.csv")
    write_label_set(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len(set(a.tokens)) == 16
    assert all(len(t) == 16 and int(t, 16) >= 0 for t in a.tokens)


def test_k2_roundtrip_exact():
    coords = generate_grid(5, 3, P, 0.6, 2).coords
    ids = np.arange(len(coords))
    enc, b, s = encrypt_subset(ids, coords, P, k=2, seed=1)
    assert np.array_equal(decrypt_labels(enc, b, s), original_rows(coords, enc, ids))


def test_k1_collinear_roundtrip_exact():
    coords = generate_grid(1, 9, P).coords
    ids = np.arange(9)
    enc, b, s = encrypt_subset(ids, coords, P, k=1, seed=1)
    assert np.array_equal(decrypt_labels(enc, b, s), original_rows(coords, enc, ids))


def test_k1_block_is_lossy():
    coords = generate_grid(2, 2, P).coords
    ids = np.arange(4)
    enc, b, s = encrypt_subset(ids, coords, P, k=1, seed=1)
    assert not np.array_equal(decrypt_labels(enc, b, s), original_rows(coords, enc, ids))


def test_singleton_subset_roundtrip():
    enc, b, s = encrypt_subset([7], [[448, 224]], P, k=2, seed=0)
    assert enc.components.tolist() == [[0.0, 0.0]]
    assert decrypt_labels(enc, b, s).tolist() == [[448, 224]]


def test_basis_mismatch_rejected():
    coords = generate_grid(3, 3, P).coords
    enc, b, s = encrypt_subset(np.arange(9), coords, P, seed=0)
    _, b2, s2 = encrypt_subset(np.arange(4), coords[:4], P, seed=0)
    with pytest.raises(LabelCryptError, match="basis"):
        decrypt_labels(enc, b2, s2)


@settings(max_examples=60, deadline=None)
@given(grid_coords, st.integers(0, 2**32))
def test_roundtrip_property(coords, seed):
    ids = np.arange(len(coords)) * 3 + 1
    enc, b, s = encrypt_subset(ids, coords, P, k=2, seed=seed)
    assert len(enc) == len(coords)
    assert sorted(enc.patch_ids.tolist()) == sorted(ids.tolist())
    assert np.array_equal(decrypt_labels(enc, b, s), original_rows(coords, enc, ids))


@settings(max_examples=60, deadline=None)
@given(grid_coords, st.sampled_from([1, 2]), st.integers(0, 2**32))
def test_residual_is_discarded_energy(coords, k, seed):
    c, s = normalize(coords)
    b = eigen_basis(c, k)
    enc = encrypt_labels(np.arange(len(c)), coords, b, s, P, seed)
    recon = enc.components[:, :k] @ b.retained.T
    resid = np.sum((c[enc.patch_ids] - recon) ** 2)
    expected = (len(c) - 1) * float(np.sum(b.eigenvalues[k:]))
    assert resid == pytest.approx(expected, abs=1e-8 * max(1.0, len(c)))


@settings(max_examples=40, deadline=None)
@given(grid_coords, st.integers(0, 2**32))
def test_padding_is_ignored_on_decrypt(coords, seed):
    enc, b, s = encrypt_subset(np.arange(len(coords)), coords, P, k=1, seed=seed)
    scrambled = enc.components.copy()
    scrambled[:, 1] = np.random.default_rng(seed).normal(size=len(coords)) * 1e6
    other = type(enc)(enc.tokens, scrambled, enc.k, enc.patch_size, enc.basis_id, enc.patch_ids)
    assert np.array_equal(decrypt_labels(enc, b, s), decrypt_labels(other, b, s))


def test_strategy_subsets_roundtrip():
    ps = generate_grid(12, 12, P, 0.8, 5)
    g = build_graph(ps)
    for kind in GRAPH_KINDS:
        part = greedy_color(g, SplitStrategy(kind), seed=2)
        for cls in part.classes:
            ids = np.array(cls)
            enc, b, s = encrypt_subset(ids, ps.coords[ids], P, seed=3)
            assert np.array_equal(decrypt_labels(enc, b, s), ps.coords[enc.patch_ids])


def test_file_roundtrip(tmp_path):
    coords = generate_grid(4, 5, P, 0.7, 1).coords
    ids = np.arange(len(coords))
    enc, b, s = encrypt_subset(ids, coords, P, k=2, seed=8)
    write_label_set(enc, tmp_path / "c.csv")
    write_basis(b, s, P, tmp_path / "c.basis")
    write_keys(enc, tmp_path / "c.keys")
    b2, s2, p2 = read_basis(tmp_path / "c.basis")
    assert p2 == P and b2.k == 2
    back = read_label_set(tmp_path / "c.csv", b2, s2, p2, tmp_path / "c.keys")
    assert back.tokens == enc.tokens
    assert np.array_equal(back.patch_ids, enc.patch_ids)
    assert np.array_equal(decrypt_labels(back, b2, s2), original_rows(coords, enc, ids))
    line = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert len(line.split(",")) == 3


def test_label_file_malformed(tmp_path):
    coords = generate_grid(2, 2, P).coords
    enc, b, s = encrypt_subset(np.arange(4), coords, P)
    f = tmp_path / "c.csv"
    f.write_text("abc,1.0\n")
    with pytest.raises(LabelCryptError, match=":1:"):
        read_label_set(f, b, s, P)


def test_utility_examples():
    y = np.array([[0, 0], [224, 0], [448, 0], [672, 0]])
    ux, uy = output_utility(y, y)
    assert ux == 2.0 and uy == 0.0
    const = np.zeros_like(y)
    assert output_utility(y, const) == (0.0, 0.0)
    assert output_utility([[0, 0], [224, 0]], [[0, 0], [0, 0]])[0] == 0.0


@settings(max_examples=60, deadline=None)
@given(grid_coords, grid_coords)
def test_utility_bounded_by_entropy(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    for j, u in enumerate(output_utility(a, b)):
        _, counts = np.unique(a[:, j], return_counts=True)
        q = counts / n
        h = -sum(x * math.log2(x) for x in q)
        assert -1e-12 <= u <= h + 1e-12
