"""Dense matrices over GF(q).

Provides Vandermonde-style constructors, Gauss-Jordan inversion, rank,
row selection and an incremental row-space reducer used heavily by the
leakage verifier.  Matrices are immutable after construction; entries
are stored as canonical residues in [0, q-1].

Row and column indices are 0-based throughout this module.  Protocol
code translates 1-based helper/user ids before calling in.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

from .field import FieldElement, PrimeField

__all__ = [
    "MatrixError",
    "DimensionMismatch",
    "Singular",
    "IndexOutOfRange",
    "FieldTooSmall",
    "GfMatrix",
    "EvaluationPoints",
    "make_points",
    "vandermonde",
    "extended_vandermonde",
    "RowSpace",
]


class MatrixError(Exception):
    """Base class for matrix errors."""


class DimensionMismatch(MatrixError):
    """Operand shapes are incompatible."""


class Singular(MatrixError):
    """Inverse of a rank-deficient matrix was requested."""


class IndexOutOfRange(MatrixError):
    """A row index fell outside the matrix."""


class FieldTooSmall(MatrixError):
    """The field has too few nonzero elements for the requested points."""


def _as_int(entry) -> int:
    if isinstance(entry, FieldElement):
        return entry.value
    return int(entry)


class GfMatrix:
    """An immutable rows x cols matrix over GF(q)."""

    __slots__ = ("field", "rows", "cols", "data")

    def __init__(self, field: PrimeField, rows_data: Iterable[Sequence]):
        q = field.q
        data = tuple(
            tuple(_as_int(e) % q for e in row) for row in rows_data
        )
        if data:
            width = len(data[0])
            if any(len(row) != width for row in data):
                raise DimensionMismatch("ragged rows")
        else:
            width = 0
        self.field = field
        self.rows = len(data)
        self.cols = width
        self.data = data

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "GfMatrix":
        return cls(field, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "GfMatrix":
        return cls(field, [[0] * cols for _ in range(rows)])

    def __repr__(self):
        return f"GfMatrix({self.rows}x{self.cols} mod {self.field.q})"

    def __eq__(self, other):
        return (
            isinstance(other, GfMatrix)
            and self.field == other.field
            and self.data == other.data
        )

    def __hash__(self):
        return hash((self.field, self.data))

    def row(self, i: int) -> tuple:
        return self.data[i]

    def __getitem__(self, idx) -> int:
        i, j = idx
        return self.data[i][j]

    def __matmul__(self, other: "GfMatrix") -> "GfMatrix":
        if not isinstance(other, GfMatrix):
            return NotImplemented
        if self.field != other.field:
            from .field import ModulusMismatch

            raise ModulusMismatch(
                f"GF({self.field.q}) vs GF({other.field.q})"
            )
        if self.cols != other.rows:
            raise DimensionMismatch(
                f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}"
            )
        q = self.field.q
        bcols = range(other.cols)
        out = []
        for arow in self.data:
            acc = [0] * other.cols
            for a, brow in zip(arow, other.data):
                if a:
                    for j in bcols:
                        acc[j] += a * brow[j]
            out.append([v % q for v in acc])
        return GfMatrix(self.field, out)

    def stack(self, other: "GfMatrix") -> "GfMatrix":
        """Vertical concatenation."""
        if self.cols != other.cols or self.field != other.field:
            raise DimensionMismatch("stack requires equal widths and fields")
        return GfMatrix(self.field, self.data + other.data)

    def select_rows(self, indices: Sequence[int]) -> "GfMatrix":
        """Submatrix of the given rows; indices must be strictly increasing."""
        idx = list(indices)
        if any(i < 0 or i >= self.rows for i in idx):
            raise IndexOutOfRange(f"row index outside 0..{self.rows - 1}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError("row indices must be strictly increasing")
        return GfMatrix(self.field, [self.data[i] for i in idx])

    def transpose(self) -> "GfMatrix":
        return GfMatrix(
            self.field,
            [[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)],
        )

    def inv(self) -> "GfMatrix":
        """Inverse by Gauss-Jordan elimination.

        Pivots are chosen as the first nonzero entry in each column,
        which keeps the elimination fully deterministic (there is no
        pivot magnitude over a finite field).
        """
        if self.rows != self.cols:
            raise DimensionMismatch("inverse requires a square matrix")
        n = self.rows
        q = self.field.q
        aug = [list(row) + [1 if i == j else 0 for j in range(n)]
               for i, row in enumerate(self.data)]
        for col in range(n):
            pivot = next(
                (r for r in range(col, n) if aug[r][col] % q != 0), None
            )
            if pivot is None:
                raise Singular(f"matrix of rank < {n}")
            if pivot != col:
                aug[col], aug[pivot] = aug[pivot], aug[col]
            inv_p = self.field.inv(aug[col][col])
            aug[col] = [(v * inv_p) % q for v in aug[col]]
            prow = aug[col]
            for r in range(n):
                if r == col:
                    continue
                c = aug[r][col]
                if c:
                    aug[r] = [(v - c * p) % q for v, p in zip(aug[r], prow)]
        return GfMatrix(self.field, [row[n:] for row in aug])

    def rank(self) -> int:
        """Row rank by Gaussian elimination."""
        space = RowSpace(self.field, self.cols)
        for row in self.data:
            space.insert(row)
        return space.rank


class RowSpace:
    """Incrementally reduced row space over GF(q).

    Maintains a reduced-echelon basis so that ``insert`` costs one
    elimination pass.  Designed for the many rank queries made by the
    leakage verifier; ``clone`` lets a conditioning set be reduced once
    and extended along several branches.
    """

    __slots__ = ("field", "width", "pivots", "basis")

    def __init__(self, field: PrimeField, width: int):
        self.field = field
        self.width = width
        self.pivots: list[int] = []
        self.basis: list[list[int]] = []

    @property
    def rank(self) -> int:
        return len(self.basis)

    def clone(self) -> "RowSpace":
        dup = RowSpace(self.field, self.width)
        dup.pivots = list(self.pivots)
        dup.basis = [list(row) for row in self.basis]
        return dup

    def insert(self, row: Sequence[int]) -> bool:
        """Reduce ``row`` against the basis; returns True if rank grew."""
        q = self.field.q
        if len(row) != self.width:
            raise DimensionMismatch("row width does not match the space")
        r = [v % q for v in row]
        for pivot, base in zip(self.pivots, self.basis):
            c = r[pivot]
            if c:
                r = [(x - c * y) % q for x, y in zip(r, base)]
        p = next((j for j, v in enumerate(r) if v), None)
        if p is None:
            return False
        inv_p = self.field.inv(r[p])
        r = [(v * inv_p) % q for v in r]
        # Keep the basis fully reduced at the new pivot column.
        for i, base in enumerate(self.basis):
            c = base[p]
            if c:
                self.basis[i] = [(x - c * y) % q for x, y in zip(base, r)]
        self.pivots.append(p)
        self.basis.append(r)
        return True

    def insert_matrix(self, m: GfMatrix) -> None:
        for row in m.data:
            self.insert(row)


@dataclass(frozen=True)
class EvaluationPoints:
    """The N + Nr - 1 pairwise-distinct nonzero evaluation points.

    The first ``num_helpers`` points parameterize helper rows of the
    upload matrix; the remaining ``resiliency - 1`` tail points extend
    it for the helper-side key construction.
    """

    field: PrimeField
    alphas: tuple[int, ...]

    def __post_init__(self):
        q = self.field.q
        if any(a % q == 0 for a in self.alphas):
            raise ValueError("evaluation points must be nonzero")
        if len(set(a % q for a in self.alphas)) != len(self.alphas):
            raise ValueError("evaluation points must be pairwise distinct")

    def __len__(self):
        return len(self.alphas)


def make_points(field: PrimeField, num_helpers: int, resiliency: int) -> EvaluationPoints:
    """Canonical evaluation points alpha_i = i, i in [1, N + Nr - 1].

    Deterministic so that every matrix, transcript and golden vector is
    reproducible.  Raises :class:`FieldTooSmall` when GF(q) cannot host
    the required number of distinct nonzero points (q < N + Nr).
    """
    count = num_helpers + resiliency - 1
    if field.q < count + 1:
        raise FieldTooSmall(
            f"need {count} distinct nonzero points, GF({field.q}) has {field.q - 1}"
        )
    return EvaluationPoints(field, tuple(range(1, count + 1)))


def vandermonde(field: PrimeField, points: Sequence, cols: int) -> GfMatrix:
    """Vandermonde matrix with entry (i, j) = points[i] ** j, j < cols."""
    if cols < 1:
        raise ValueError("need at least one column")
    pts = [_as_int(p) for p in points]
    return GfMatrix(
        field, [[field.pow(p, j) for j in range(cols)] for p in pts]
    )


def extended_vandermonde(points: EvaluationPoints, num_helpers: int, resiliency: int) -> GfMatrix:
    """The Nr x (Nr - 1) key-mixing matrix.

    Its first row is all zero; row 1 + i is the Vandermonde row of tail
    point alpha_{N+i} with resiliency - 1 columns.  The zero first row
    is what makes each helper's own key coordinate vanish.
    """
    if len(points) != num_helpers + resiliency - 1:
        raise DimensionMismatch("points do not match (N, Nr)")
    field = points.field
    width = resiliency - 1
    rows = [[0] * width]
    for i in range(1, resiliency):
        alpha = points.alphas[num_helpers + i - 1]
        rows.append([field.pow(alpha, j) for j in range(width)])
    return GfMatrix(field, rows)
