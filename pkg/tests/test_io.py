import numpy as np
import pytest
from hypothesis import given

from framecs.errors import InvalidInputError
from framecs.io import (complex_from_json, complex_to_json, format_complex, parse_complex,
                        read_matrix_bin, read_matrix_csv, read_vector_csv, write_matrix_bin,
                        write_matrix_csv)

from conftest import complex_vectors


def test_format_parse():
    assert format_complex(1 - 2j) == "1.0-2i"
    assert parse_complex("1.0-2i") == 1 - 2j
    assert parse_complex("3.5") == 3.5


def test_bad_entry():
    with pytest.raises(InvalidInputError):
        parse_complex("abc")


@given(complex_vectors(max_size=6))
def test_csv_roundtrip(tmp_path_factory, x):
    p = tmp_path_factory.mktemp("csv") / "m.csv"
    A = np.outer(x, x[::-1])
    write_matrix_csv(p, A)
    np.testing.assert_array_equal(read_matrix_csv(p), A)


def test_vector_csv(tmp_path):
    write_matrix_csv(tmp_path / "v.csv", np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(read_vector_csv(tmp_path / "v.csv"), [1, 2, 3])


def test_ragged(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(InvalidInputError):
        read_matrix_csv(tmp_path / "r.csv")


def test_binary_roundtrip(tmp_path, rng):
    A = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    write_matrix_bin(tmp_path / "a.bin", A)
    np.testing.assert_array_equal(read_matrix_bin(tmp_path / "a.bin"), A)
    raw = (tmp_path / "a.bin").read_bytes()
    (tmp_path / "b.bin").write_bytes(raw[:-1])
    with pytest.raises(InvalidInputError):
        read_matrix_bin(tmp_path / "b.bin")


def test_json_vector():
    x = np.array([1 + 2j, -3.0])
    np.testing.assert_array_equal(complex_from_json(complex_to_json(x)), x)
