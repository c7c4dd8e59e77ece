import numpy as np
import pytest

from blochgauge.errors import InvalidInput
from blochgauge.fileio import read_family, read_header, scalar_field_columns, write_csv, write_family
from blochgauge.frames import BlochFrame
from blochgauge.torus import ProjectionFamily, SelfAdjointFamily, SymmetryKind, TorusGrid, UnitaryFamily


def test_roundtrip_all_payloads(tmp_path, rng):
    g = TorusGrid(2, 8)
    data = rng.normal(size=(8, 8, 2, 2)) + 1j * rng.normal(size=(8, 8, 2, 2))
    objs = [
        UnitaryFamily(g, data, SymmetryKind("fermionic")),
        SelfAdjointFamily(g, data, None),
        ProjectionFamily(g, data, SymmetryKind("bosonic"), rank=1),
        BlochFrame(g, data[..., :1], None),
    ]
    for i, obj in enumerate(objs):
        path = tmp_path / f"f{i}.fam"
        write_family(path, obj)
        back = read_family(path)
        assert type(back) is type(obj)
        vals = back.vectors if isinstance(back, BlochFrame) else back.samples
        ref = obj.vectors if isinstance(obj, BlochFrame) else obj.samples
        assert np.array_equal(vals, ref)
        assert back.symmetry == obj.symmetry


def test_layout_is_row_major_odometer(tmp_path):
    g = TorusGrid(1, 8)
    data = np.zeros((8, 2, 2), dtype=complex)
    data[1, 0, 1] = 3 + 4j
    write_family(tmp_path / "a.fam", UnitaryFamily(g, data, None))
    _, blob = read_header(tmp_path / "a.fam")
    floats = np.frombuffer(blob, dtype="<f8")
    # point 1, entry (0, 1): offset (1*4 + 1) complex numbers
    assert floats[10] == 3.0 and floats[11] == 4.0


def test_corrupted_files(tmp_path):
    p = tmp_path / "bad.fam"
    p.write_bytes(b"{not json\n")
    with pytest.raises(InvalidInput):
        read_family(p)
    p.write_bytes(b'{"dim": 1}\n')
    with pytest.raises(InvalidInput):
        read_family(p)
    p.write_bytes(b'{"dim":1,"N":8,"m":1,"n":1,"symmetry":"none","payload":"unitary"}\n' + b"\0" * 8)
    with pytest.raises(InvalidInput):
        read_family(p)


def test_csv_is_reproducible(tmp_path):
    g = TorusGrid(1, 8)
    cols = scalar_field_columns(g, np.linspace(0, 1, 8), "phase")
    write_csv(tmp_path / "a.csv", cols)
    write_csv(tmp_path / "b.csv", cols)
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.splitlines()[0] == "k1,phase"
