import numpy as np
import pytest

from specclip.errors import EmptyMatrixError, MatrixFormatError, NonFiniteError
from specclip.matio import (
    format_float,
    load_matrix,
    matrix_to_csv,
    read_matrix_bin,
    read_matrix_csv,
    save_matrix,
    write_matrix_bin,
    write_matrix_csv,
)


def test_format_float_round_trip():
    for x in (0.1, 1 / 3, 1e-300, 123456.789, -0.05):
        assert float(format_float(x)) == x


def test_csv_round_trip(tmp_path):
    a = np.random.default_rng(0).standard_normal((4, 3))
    path = tmp_path / "m.csv"
    write_matrix_csv(path, a)
    np.testing.assert_array_equal(read_matrix_csv(path), a)


def test_csv_canonical_form():
    text = matrix_to_csv(np.array([[1.0, 0.5]]))
    assert text == "1,0.5\n"
    assert "\r" not in text


def test_bin_round_trip(tmp_path):
    a = np.random.default_rng(1).standard_normal((5, 2))
    path = tmp_path / "m.bin"
    write_matrix_bin(path, a)
    np.testing.assert_array_equal(read_matrix_bin(path), a)
    raw = path.read_bytes()
    assert raw[:8] == b"SPCMAT01"
    assert len(raw) == 24 + 5 * 2 * 8


def test_load_matrix_sniffs_format(tmp_path):
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    c = tmp_path / "a.csv"
    b = tmp_path / "a.bin"
    save_matrix(c, a, fmt="csv")
    save_matrix(b, a, fmt="bin")
    np.testing.assert_array_equal(load_matrix(c), a)
    np.testing.assert_array_equal(load_matrix(b), a)


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(MatrixFormatError):
        read_matrix_csv(p)
    p.write_text("1,zap\n")
    with pytest.raises(MatrixFormatError):
        read_matrix_csv(p)
    p.write_text("")
    with pytest.raises(EmptyMatrixError):
        read_matrix_csv(p)
    p.write_text("1,inf\n")
    with pytest.raises(NonFiniteError):
        read_matrix_csv(p)


def test_bin_errors(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(MatrixFormatError):
        read_matrix_bin(p)
    p.write_bytes(b"SPCMAT01" + (2).to_bytes(8, "little") + (2).to_bytes(8, "little") + b"\x00" * 8)
    with pytest.raises(MatrixFormatError):
        read_matrix_bin(p)
