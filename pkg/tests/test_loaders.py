import numpy as np
import pytest

from sketchdescent.errors import (
    EmptyMatrixError,
    MalformedFileError,
    ParseError,
    UnsupportedFormatError,
)
from sketchdescent.loaders import load_libsvm, load_matrix_market, save_matrix_market


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestMatrixMarket:
    def test_coordinate_general(self, tmp_path):
        path = write(tmp_path, "a.mtx", """%%MatrixMarket matrix coordinate real general
% comment line
3 2 3
1 1 1.5
2 2 -2.0
3 1 4.0
""")
        M = load_matrix_market(path)
        assert np.array_equal(M, np.array([[1.5, 0.0], [0.0, -2.0], [4.0, 0.0]]))

    def test_coordinate_symmetric_mirrors(self, tmp_path):
        path = write(tmp_path, "s.mtx", """%%MatrixMarket matrix coordinate real symmetric
2 2 3
1 1 2.0
2 1 1.0
2 2 2.0
""")
        M = load_matrix_market(path)
        assert np.array_equal(M, np.array([[2.0, 1.0], [1.0, 2.0]]))

    def test_coordinate_symmetric_missing_diagonal_is_zero(self, tmp_path):
        path = write(tmp_path, "s0.mtx", """%%MatrixMarket matrix coordinate real symmetric
2 2 2
1 1 2.0
2 1 1.0
""")
        M = load_matrix_market(path)
        assert np.array_equal(M, np.array([[2.0, 1.0], [1.0, 0.0]]))

    def test_coordinate_empty_is_zero(self, tmp_path):
        path = write(tmp_path, "z.mtx",
                     "%%MatrixMarket matrix coordinate real general\n3 3 0\n")
        assert np.array_equal(load_matrix_market(path), np.zeros((3, 3)))

    def test_array_column_major(self, tmp_path):
        path = write(tmp_path, "v.mtx",
                     "%%MatrixMarket matrix array real general\n2 1\n3\n4\n")
        assert np.array_equal(load_matrix_market(path),
                              np.array([[3.0], [4.0]]))
        path2 = write(tmp_path, "v2.mtx",
                      "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
        # values fill columns first
        assert np.array_equal(load_matrix_market(path2),
                              np.array([[1.0, 3.0], [2.0, 4.0]]))

    def test_array_symmetric_lower_triangle(self, tmp_path):
        path = write(tmp_path, "as.mtx",
                     "%%MatrixMarket matrix array real symmetric\n2 2\n2\n1\n5\n")
        assert np.array_equal(load_matrix_market(path),
                              np.array([[2.0, 1.0], [1.0, 5.0]]))

    def test_rejects_complex(self, tmp_path):
        path = write(tmp_path, "c.mtx",
                     "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 2 3\n")
        with pytest.raises(UnsupportedFormatError):
            load_matrix_market(path)

    def test_rejects_bad_banner(self, tmp_path):
        path = write(tmp_path, "b.mtx", "not a matrix market file\n1 1\n")
        with pytest.raises(UnsupportedFormatError):
            load_matrix_market(path)

    def test_index_out_of_bounds(self, tmp_path):
        path = write(tmp_path, "o.mtx",
                     "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n")
        with pytest.raises(MalformedFileError):
            load_matrix_market(path)

    def test_non_numeric_value(self, tmp_path):
        path = write(tmp_path, "n.mtx",
                     "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 abc\n")
        with pytest.raises(ParseError):
            load_matrix_market(path)

    def test_roundtrip_17_digits(self, tmp_path):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((4, 3))
        path = tmp_path / "rt.mtx"
        save_matrix_market(M, path)
        assert np.array_equal(load_matrix_market(path), M)


class TestLibsvm:
    def test_sparse_expansion(self, tmp_path):
        path = write(tmp_path, "d.txt", "1 1:2 3:1\n0 2:5\n")
        assert np.array_equal(load_libsvm(path),
                              np.array([[2.0, 0.0, 1.0], [0.0, 5.0, 0.0]]))

    def test_zero_feature_row_dropped(self, tmp_path):
        path = write(tmp_path, "d.txt", "1 1:0 2:0\n1 1:3\n")
        M = load_libsvm(path)
        assert M.shape == (1, 2)
        assert M[0, 0] == 3.0

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "e.txt", "")
        with pytest.raises(EmptyMatrixError):
            load_libsvm(path)

    def test_non_increasing_indices(self, tmp_path):
        path = write(tmp_path, "bad.txt", "1 3:1 2:1\n")
        with pytest.raises(MalformedFileError):
            load_libsvm(path)

    def test_non_numeric_value(self, tmp_path):
        path = write(tmp_path, "bad.txt", "1 1:x\n")
        with pytest.raises(ParseError):
            load_libsvm(path)

    def test_m_limit_and_declared_width(self, tmp_path):
        path = write(tmp_path, "d.txt", "1 1:1\n1 2:1\n1 3:1\n")
        M = load_libsvm(path, m_limit=2, n_features=4)
        assert M.shape == (2, 4)
