import json

import numpy as np
import pytest

from pcfield import io
from pcfield.errors import ContractError
from pcfield.model import box_window, sample_paths


@pytest.mark.parametrize("name", ["stationary", "strong", "ampl2", "weak"])
def test_model_json_roundtrip(name, request):
    model = request.getfixturevalue(name)
    text = io.dumps(io.model_to_json(model, truncation=40))
    back = io.model_from_json(json.loads(text))
    w = box_window((-3, 3)) if model.n == 1 else box_window((-3, 3), (-2, 2))
    assert np.allclose(back.kernel_matrix(w), model.kernel_matrix(w), atol=1e-12)
    assert back.subgroup.same_as(model.subgroup)
    # serialization is stable; a callable field is tabulated by the first dump
    again = io.dumps(io.model_to_json(back, truncation=40))
    if model.P.finite_support:
        assert again == text
    assert io.dumps(io.model_to_json(io.model_from_json(json.loads(again)), truncation=40)) == again


def test_model_json_rejects_garbage():
    with pytest.raises(ContractError):
        io.model_from_json({"n": 1})
    with pytest.raises(ContractError):
        io.from_pairs([1.0, 2.0, 3.0])


def test_model_json_rejects_inconsistent_quotient(ampl2):
    data = io.model_to_json(ampl2)
    data["periodic"]["quotient"]["torsion"] = [3]
    with pytest.raises(ContractError):
        io.model_from_json(data)


def test_kernel_json_roundtrip(strong):
    w = box_window((0, 3), (0, 2))
    pts, G, K = io.kernel_from_json(json.loads(io.dumps(io.kernel_to_json(strong, w))))
    assert np.array_equal(pts, w)
    assert np.allclose(G, strong.kernel_matrix(w))
    assert K.same_as(strong.subgroup)


def test_kernel_json_shape_mismatch(strong):
    data = io.kernel_to_json(strong, box_window((0, 1), (0, 1)))
    data["gram"] = data["gram"][:3]
    with pytest.raises(ContractError):
        io.kernel_from_json(data)


@pytest.fixture
def paths(strong):
    return sample_paths(strong, box_window((0, 2), (0, 1)), 4, seed=3)


def test_paths_csv_roundtrip(paths):
    text = io.paths_to_csv(paths, header='{"seed": 3}')
    assert text.startswith("# ")
    back = io.paths_from_csv(text)
    assert np.array_equal(back.points, paths.points)
    assert np.array_equal(back.paths, paths.paths)


def test_paths_json_roundtrip(paths):
    back = io.paths_from_json(json.loads(io.dumps(io.paths_to_json(paths))))
    assert np.array_equal(back.paths, paths.paths)
    assert back.seed == 3


def test_paths_npz_roundtrip(paths, tmp_path):
    f = tmp_path / "p.npz"
    io.save_paths_npz(paths, f, meta="{}")
    back = io.load_paths(f)
    assert np.array_equal(back.points, paths.points)
    assert np.array_equal(back.paths, paths.paths)
    assert back.seed == 3


def test_load_paths_by_content(paths, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.csv"
    a.write_text(io.dumps(io.paths_to_json(paths)))
    b.write_text(io.paths_to_csv(paths))
    assert np.array_equal(io.load_paths(a).paths, io.load_paths(b).paths)
