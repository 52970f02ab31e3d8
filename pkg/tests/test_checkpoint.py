import numpy as np
import pytest

from facecnn.backprop import backward
from facecnn.checkpoint import dumps, load_checkpoint, loads, read_checkpoint, save_checkpoint
from facecnn.exceptions import (
    CheckpointMissingError,
    CheckpointShapeError,
    CheckpointValueError,
    CheckpointVersionError,
)
from facecnn.network import DEFAULT_SPEC, REDUCED_SPEC, build, forward_full
from facecnn.trainer import apply_update


@pytest.mark.parametrize("spec", [DEFAULT_SPEC, REDUCED_SPEC])
def test_round_trip_is_bit_exact(tmp_path, spec):
    params = build(spec, 3)
    params["f.biases"][:] = [1e-300, -0.0, 1 / 3] + [np.pi] * (spec.num_classes - 3)
    path = tmp_path / "a.cnnckpt"
    save_checkpoint(params, path, seed=3)
    loaded, loaded_spec = load_checkpoint(path)
    assert loaded_spec == spec
    assert loaded.vector.tobytes() == params.vector.tobytes()
    save_checkpoint(loaded, tmp_path / "b.cnnckpt", seed=3)
    assert (tmp_path / "a.cnnckpt").read_bytes() == (tmp_path / "b.cnnckpt").read_bytes()


def test_round_trip_after_training_step(tmp_path):
    params = build(REDUCED_SPEC, 1)
    image = np.random.default_rng(1).uniform(-1, 1, (8, 8))
    grads = backward(forward_full(params, image)[0], np.array([1.0, -1, -1]), params)
    apply_update(params, grads, 0.37)
    save_checkpoint(params, tmp_path / "c.cnnckpt")
    assert load_checkpoint(tmp_path / "c.cnnckpt")[0] == params


def test_default_checkpoint_holds_all_values():
    text = dumps(build(DEFAULT_SPEC, 0), seed=0)
    lines = text.splitlines()
    assert lines[0] == "FACECNN-CHECKPOINT"
    assert lines[2] == "spec 32 6 5 2 16 5 2 170 17"
    body = lines[4:]
    assert [line.split()[0] for line in body] == [
        "c1.kernels", "c1.biases", "s1.coefficients", "s1.biases",
        "c2.kernels", "c2.biases", "s2.coefficients", "s2.biases",
        "h.weights", "h.biases", "f.weights", "f.biases",
    ]
    assert sum(len(line.split()) - 2 for line in body) == 73693


def test_kernel_order_is_out_in_row_col():
    params = build(REDUCED_SPEC, 0)
    params["c2.kernels"][...] = np.arange(params["c2.kernels"].size).reshape(2, 2, 2, 2)
    line = dumps(params).splitlines()[8]
    assert line.split()[2:6] == ["0.0", "1.0", "2.0", "3.0"]
    assert read_seed(dumps(params, seed=9)) == 9


def read_seed(text):
    return loads(text)[2]


def test_read_checkpoint_returns_seed(tmp_path):
    save_checkpoint(build(REDUCED_SPEC, 0), tmp_path / "s.cnnckpt", seed=12)
    assert read_checkpoint(tmp_path / "s.cnnckpt")[2] == 12


class TestLoadErrors:
    def text(self):
        return dumps(build(REDUCED_SPEC, 0), seed=0)

    def test_missing(self, tmp_path):
        with pytest.raises(CheckpointMissingError):
            load_checkpoint(tmp_path / "nope.cnnckpt")

    def test_version(self):
        with pytest.raises(CheckpointVersionError):
            loads(self.text().replace("version 1", "version 2"))
        with pytest.raises(CheckpointVersionError):
            loads("P5\n" + self.text())

    def test_corrupted_length_field(self):
        lines = self.text().splitlines()
        fields = lines[4].split()
        fields[1] = str(int(fields[1]) + 1)
        lines[4] = " ".join(fields)
        with pytest.raises(CheckpointShapeError):
            loads("\n".join(lines))

    def test_dropped_value(self):
        lines = self.text().splitlines()
        lines[12] = lines[12].rsplit(" ", 1)[0]
        with pytest.raises(CheckpointShapeError):
            loads("\n".join(lines))

    def test_header_payload_mismatch(self):
        with pytest.raises(CheckpointShapeError):
            loads(self.text().replace("spec 8 2 3 2 2 2 2 4 3", "spec 8 2 3 2 2 2 2 5 3"))

    def test_non_finite(self):
        lines = self.text().splitlines()
        fields = lines[-1].split()
        fields[2] = "nan"
        lines[-1] = " ".join(fields)
        with pytest.raises(CheckpointValueError):
            loads("\n".join(lines))

    def test_save_refuses_non_finite(self, tmp_path):
        params = build(REDUCED_SPEC, 0)
        params["h.biases"][0] = np.inf
        with pytest.raises(CheckpointValueError):
            save_checkpoint(params, tmp_path / "x.cnnckpt")
