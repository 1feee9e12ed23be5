import random

import pytest
from hypothesis import given, settings, strategies as st

from hsagg.field import ModulusMismatch, PrimeField
from hsagg.matrix import (
    DimensionMismatch,
    FieldTooSmall,
    GfMatrix,
    IndexOutOfRange,
    RowSpace,
    Singular,
    extended_vandermonde,
    make_points,
    vandermonde,
)

F7 = PrimeField(7)

# Worked-instance matrices for (N=4, Nr=3, q=7), checked entry for entry.
V_ROWS = ((1, 1, 1), (1, 2, 4), (1, 3, 2), (1, 4, 2))
S3_ROWS = ((1, 2, 5), (2, 5, 1), (1, 0, 0), (5, 1, 2))
S4_ROWS = ((3, 6, 6), (6, 6, 3), (3, 4, 1), (1, 0, 0))


def naive_rank(rows, q):
    """Plain row-reduction oracle, independent of RowSpace."""
    mat = [list(r) for r in rows]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for col in range(cols):
        pivot = next(
            (r for r in range(rank, len(mat)) if mat[r][col] % q != 0), None
        )
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        inv = pow(mat[rank][col], q - 2, q)
        mat[rank] = [(v * inv) % q for v in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][col]:
                c = mat[r][col]
                mat[r] = [(v - c * p) % q for v, p in zip(mat[r], mat[rank])]
        rank += 1
    return rank


def test_make_points_canonical():
    assert make_points(F7, 4, 3).alphas == (1, 2, 3, 4, 5, 6)
    assert make_points(PrimeField(11), 4, 3).alphas == (1, 2, 3, 4, 5, 6)
    with pytest.raises(FieldTooSmall):
        make_points(PrimeField(5), 4, 3)


def test_vandermonde_golden():
    pts = make_points(F7, 4, 3)
    assert vandermonde(F7, pts.alphas[:4], 3).data == V_ROWS
    assert vandermonde(F7, (3, 5, 6), 3).data == ((1, 3, 2), (1, 5, 4), (1, 6, 1))
    assert vandermonde(F7, (1,), 1).data == ((1,),)


def test_extended_vandermonde():
    pts = make_points(F7, 4, 3)
    assert extended_vandermonde(pts, 4, 3).data == ((0, 0), (1, 5), (1, 6))
    assert extended_vandermonde(make_points(PrimeField(11), 4, 3), 4, 3).data == (
        (0, 0),
        (1, 5),
        (1, 6),
    )
    degenerate = extended_vandermonde(make_points(F7, 4, 1), 4, 1)
    assert (degenerate.rows, degenerate.cols) == (1, 0)


def test_invert_golden():
    g3 = vandermonde(F7, (3, 5, 6), 3)
    assert g3 @ g3.inv() == GfMatrix.identity(F7, 3)
    ident = GfMatrix.identity(F7, 4)
    assert ident.inv() == ident
    with pytest.raises(Singular):
        GfMatrix.zeros(F7, 2, 2).inv()
    with pytest.raises(DimensionMismatch):
        GfMatrix(F7, [(1, 2, 3)]).inv()


def test_known_inverse_from_decode_path():
    sub = GfMatrix(F7, ((1, 2, 5), (2, 5, 1), (5, 1, 2)))
    assert sub.inv().data == ((2, 1, 5), (1, 5, 2), (5, 2, 1))


def test_rank():
    v = GfMatrix(F7, V_ROWS)
    for rows in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]:
        assert v.select_rows(rows).rank() == 3
    assert GfMatrix.zeros(F7, 3, 3).rank() == 0


def test_rank_of_duplicated_stack_matches_oracle():
    rng = random.Random(11)
    for _ in range(25):
        rows = [
            [rng.randrange(7) for _ in range(4)] for _ in range(rng.randrange(1, 5))
        ]
        a = GfMatrix(F7, rows)
        stacked = a.stack(a)
        assert stacked.rank() == a.rank() == naive_rank(rows, 7)


def test_mat_mul_golden_decode_matrices():
    pts = make_points(F7, 4, 3)
    v = vandermonde(F7, pts.alphas[:4], 3)
    g3 = vandermonde(F7, (3, 5, 6), 3)
    g4 = vandermonde(F7, (4, 5, 6), 3)
    assert (v @ g3.inv()).data == S3_ROWS
    assert (v @ g4.inv()).data == S4_ROWS
    assert v @ GfMatrix.identity(F7, 3) == v


def test_mat_mul_errors():
    a = GfMatrix(F7, [(1, 2)])
    with pytest.raises(DimensionMismatch):
        a @ a
    with pytest.raises(ModulusMismatch):
        a @ GfMatrix(PrimeField(5), [(1,), (2,)])


def test_select_rows():
    v = GfMatrix(F7, V_ROWS)
    assert v.select_rows([1, 2, 3]).data == ((1, 2, 4), (1, 3, 2), (1, 4, 2))
    assert v.select_rows(range(4)) == v
    s3 = GfMatrix(F7, S3_ROWS)
    assert s3.select_rows([0, 1, 3]).data == ((1, 2, 5), (2, 5, 1), (5, 1, 2))
    with pytest.raises(IndexOutOfRange):
        v.select_rows([0, 4])
    with pytest.raises(ValueError):
        v.select_rows([2, 1])


def test_double_inverse_on_random_invertibles():
    rng = random.Random(3)
    found = 0
    while found < 20:
        rows = [[rng.randrange(7) for _ in range(3)] for _ in range(3)]
        m = GfMatrix(F7, rows)
        try:
            inv = m.inv()
        except Singular:
            continue
        found += 1
        assert inv.inv() == m
        assert m @ inv == GfMatrix.identity(F7, 3)


def test_mds_row_subsets_of_upload_matrix():
    # every subset of at most Nr rows has full rank
    from itertools import combinations

    v = GfMatrix(F7, V_ROWS)
    for size in range(1, 4):
        for rows in combinations(range(4), size):
            assert v.select_rows(rows).rank() == size


def test_decode_matrix_unit_row():
    pts = make_points(F7, 4, 3)
    v = vandermonde(F7, pts.alphas[:4], 3)
    tail = pts.alphas[4:]
    for n in range(1, 5):
        gn = vandermonde(F7, (pts.alphas[n - 1],) + tail, 3)
        sn = v @ gn.inv()
        assert sn.row(n - 1) == (1, 0, 0)


def test_entries_canonicalized():
    m = GfMatrix(F7, [(-1, 8), (F7.element(9), 0)])
    assert m.data == ((6, 1), (2, 0))
    with pytest.raises(DimensionMismatch):
        GfMatrix(F7, [(1, 2), (3,)])


@settings(max_examples=60)
@given(
    st.integers(2, 5),
    st.lists(
        st.lists(st.integers(0, 12), min_size=3, max_size=3), min_size=1, max_size=6
    ),
)
def test_rowspace_rank_matches_oracle(width_seed, rows):
    q = [2, 3, 5, 7][width_seed % 4]
    f = PrimeField(q)
    space = RowSpace(f, 3)
    for row in rows:
        space.insert(row)
    assert space.rank == naive_rank(rows, q)


def test_rowspace_clone_is_independent():
    space = RowSpace(F7, 3)
    space.insert([1, 2, 3])
    fork = space.clone()
    fork.insert([0, 1, 1])
    assert space.rank == 1
    assert fork.rank == 2
