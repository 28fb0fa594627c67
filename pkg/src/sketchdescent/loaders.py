"""Readers for the two on-disk matrix formats the benchmarks consume.

Matrix Market dense/coordinate real files (general or symmetric) and LIBSVM
sparse feature rows. Both readers return plain dense float64 arrays; these
solvers are desk scale and the dense representation keeps every downstream
kernel simple. A minimal Matrix Market writer is included so instances can
be round-tripped to disk.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    EmptyMatrixError,
    MalformedFileError,
    ParseError,
    UnsupportedFormatError,
)


def _float(token: str, where: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"bad numeric token {token!r} {where}") from None


def _int(token: str, where: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"bad integer token {token!r} {where}") from None


def load_matrix_market(path) -> np.ndarray:
    """Read a Matrix Market file into a dense array.

    Supports the coordinate and array formats with real entries and general
    or symmetric qualifiers. Symmetric files store the lower triangle; the
    upper triangle is mirrored in. Anything else in the header is refused
    rather than guessed at.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket"):
            raise UnsupportedFormatError(f"{path}: missing MatrixMarket banner")
        parts = header.strip().split()
        if len(parts) != 5 or parts[1].lower() != "matrix":
            raise UnsupportedFormatError(f"{path}: malformed banner {header!r}")
        layout, field, symmetry = (p.lower() for p in parts[2:5])
        if layout not in ("coordinate", "array"):
            raise UnsupportedFormatError(f"{path}: unsupported layout {layout!r}")
        if field != "real":
            raise UnsupportedFormatError(f"{path}: unsupported field {field!r}")
        if symmetry not in ("general", "symmetric"):
            raise UnsupportedFormatError(f"{path}: unsupported symmetry {symmetry!r}")

        lines = [ln for ln in (raw.strip() for raw in fh)
                 if ln and not ln.startswith("%")]

    if not lines:
        raise MalformedFileError(f"{path}: no size line")

    if layout == "coordinate":
        size = lines[0].split()
        if len(size) != 3:
            raise MalformedFileError(f"{path}: coordinate size line needs m n nnz")
        m = _int(size[0], "in size line")
        n = _int(size[1], "in size line")
        nnz = _int(size[2], "in size line")
        if symmetry == "symmetric" and m != n:
            raise MalformedFileError(f"{path}: symmetric matrix must be square")
        entries = lines[1:]
        if len(entries) != nnz:
            raise MalformedFileError(
                f"{path}: declared {nnz} entries, found {len(entries)}"
            )
        M = np.zeros((m, n))
        for lineno, entry in enumerate(entries, start=1):
            toks = entry.split()
            if len(toks) != 3:
                raise MalformedFileError(
                    f"{path}: entry {lineno} has {len(toks)} fields, expected 3"
                )
            i = _int(toks[0], f"at entry {lineno}")
            j = _int(toks[1], f"at entry {lineno}")
            v = _float(toks[2], f"at entry {lineno}")
            if not (1 <= i <= m and 1 <= j <= n):
                raise MalformedFileError(
                    f"{path}: entry {lineno} index ({i},{j}) out of bounds "
                    f"for {m}x{n}"
                )
            M[i - 1, j - 1] = v
            if symmetry == "symmetric" and i != j:
                M[j - 1, i - 1] = v
        return M

    # Dense array layout: column-major values, lower triangle only when
    # symmetric.
    size = lines[0].split()
    if len(size) != 2:
        raise MalformedFileError(f"{path}: array size line needs m n")
    m = _int(size[0], "in size line")
    n = _int(size[1], "in size line")
    if symmetry == "symmetric" and m != n:
        raise MalformedFileError(f"{path}: symmetric matrix must be square")
    values = []
    for lineno, ln in enumerate(lines[1:], start=1):
        for tok in ln.split():
            values.append(_float(tok, f"at value line {lineno}"))
    expected = m * n if symmetry == "general" else n * (n + 1) // 2
    if len(values) != expected:
        raise MalformedFileError(
            f"{path}: expected {expected} values, found {len(values)}"
        )
    M = np.zeros((m, n))
    k = 0
    if symmetry == "general":
        for j in range(n):
            for i in range(m):
                M[i, j] = values[k]
                k += 1
    else:
        for j in range(n):
            for i in range(j, n):
                M[i, j] = values[k]
                M[j, i] = values[k]
                k += 1
    return M


def save_matrix_market(M, path) -> None:
    """Write a dense array as a Matrix Market array-format real general file.

    Values are printed with 17 significant digits, which round-trips every
    float64 exactly.
    """
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise MalformedFileError("only 2-d arrays can be written")
    m, n = A.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{m} {n}\n")
        for j in range(n):
            for i in range(m):
                fh.write(f"{A[i, j]:.17g}\n")


def load_libsvm(path, m_limit: int | None = None,
                n_features: int | None = None) -> np.ndarray:
    """Read LIBSVM-format feature rows into a dense matrix.

    Each line is ``label index:value index:value ...`` with 1-based, strictly
    increasing indices. Labels are validated and discarded; these solvers
    synthesize a consistent right-hand side instead. The column count is the
    largest index seen unless n_features pins it. m_limit caps how many rows
    are read.
    """
    rows: list[dict[int, float]] = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            toks = line.split()
            _float(toks[0], f"in label at line {lineno}")
            entries: dict[int, float] = {}
            prev = 0
            for tok in toks[1:]:
                if ":" not in tok:
                    raise MalformedFileError(
                        f"{path}: line {lineno} token {tok!r} is not index:value"
                    )
                idx_s, val_s = tok.split(":", 1)
                idx = _int(idx_s, f"in feature index at line {lineno}")
                val = _float(val_s, f"in feature value at line {lineno}")
                if idx < 1:
                    raise MalformedFileError(
                        f"{path}: line {lineno} has index {idx} < 1"
                    )
                if idx <= prev:
                    raise MalformedFileError(
                        f"{path}: line {lineno} indices not strictly increasing "
                        f"({prev} then {idx})"
                    )
                if n_features is not None and idx > n_features:
                    raise MalformedFileError(
                        f"{path}: line {lineno} index {idx} exceeds declared "
                        f"feature count {n_features}"
                    )
                entries[idx] = val
                prev = idx
            rows.append(entries)
            max_index = max(max_index, prev)
            if m_limit is not None and len(rows) >= m_limit:
                break
    if not rows:
        raise EmptyMatrixError(f"{path}: no feature rows")
    n = n_features if n_features is not None else max_index
    if n == 0:
        raise EmptyMatrixError(f"{path}: rows carry no features")
    M = np.zeros((len(rows), n))
    for r, entries in enumerate(rows):
        for idx, val in entries.items():
            M[r, idx - 1] = val
    # rows whose features are all zero (absent or explicit) carry no
    # information and break the no-zero-rows assumption downstream
    keep = np.linalg.norm(M, axis=1) > 0.0
    if not keep.any():
        raise EmptyMatrixError(f"{path}: every row has all-zero features")
    return M[keep]
