"""
Tests for lasr.services.model_service.

Covers:
- Initialization statistics and seeding
- Column-norm projection
- Position weights
- Binary model persistence and its error cases
"""

from pathlib import Path

import numpy as np
import pytest

from lasr.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    NotAModelFileError,
    TruncatedModelError,
    VersionMismatchError,
)
from lasr.models.query import Query
from lasr.models.stage import Model
from lasr.schemas.config import InferenceConfig
from lasr.services import inference_service
from lasr.services.model_service import (
    HEADER,
    MAGIC,
    init_model,
    init_stage,
    load_model,
    position_weights,
    project_columns,
    save_model,
)

# ----------------------------------------------------------------------------
# Initialization
# ----------------------------------------------------------------------------


class TestInitStage:
    """Tests for init_stage and init_model."""

    def test_unit_dimension_statistics(self):
        """Entries are N(0, 1) when n = 1."""
        stage = init_stage(1, 40_000, 40_000, seed=3)
        values = np.concatenate([stage.U.ravel(), stage.V.ravel(), stage.S.ravel()])
        assert abs(values.mean()) < 0.02
        assert abs(values.std() - 1.0) < 0.02

    def test_scaled_standard_deviation(self):
        """Standard deviation is 1/sqrt(n)."""
        stage = init_stage(4, 30_000, 30_000, seed=5)
        values = np.concatenate([stage.U.ravel(), stage.V.ravel(), stage.S.ravel()])
        assert abs(values.std() - 0.5) < 0.5 * 0.05

    def test_equal_seeds_are_bit_identical(self):
        """Same seed, same matrices."""
        a = init_stage(3, 7, 11, seed=42)
        b = init_stage(3, 7, 11, seed=42)
        assert np.array_equal(a.U, b.U)
        assert np.array_equal(a.V, b.V)
        assert np.array_equal(a.S, b.S)

    def test_shapes_and_dtype(self):
        """U is n x D_q, V and S are n x D_items, stored as float32."""
        stage = init_stage(3, 7, 11, seed=0)
        assert stage.U.shape == (3, 7)
        assert stage.V.shape == (3, 11)
        assert stage.S.shape == (3, 11)
        assert stage.U.dtype == np.float32

    @pytest.mark.parametrize("dims", [(0, 5, 5), (3, 0, 5), (3, 5, 0)])
    def test_zero_dimension_rejected(self, dims):
        """Every dimension must be positive."""
        with pytest.raises(ConfigurationError):
            init_stage(*dims, seed=0)

    def test_model_stages_are_independent(self):
        """Each stage gets its own seed."""
        model = init_model(3, 6, 9, stages=2, k=2, seed=1)
        assert len(model.stages) == 3
        assert model.T == 2
        assert not np.array_equal(model.stages[0].U, model.stages[1].U)

    def test_structure_scale_shrinks_only_s(self):
        """A structure scale multiplies S and leaves U and V untouched."""
        base = init_model(3, 6, 9, stages=1, k=2, seed=4)
        small = init_model(3, 6, 9, stages=1, k=2, seed=4, structure_scale=0.1)
        for full, shrunk in zip(base.stages, small.stages):
            assert np.array_equal(full.U, shrunk.U)
            assert np.array_equal(full.V, shrunk.V)
            np.testing.assert_allclose(shrunk.S, 0.1 * full.S, rtol=1e-6)

    def test_model_k_above_item_count_rejected(self):
        """k cannot exceed D_items."""
        with pytest.raises(ConfigurationError):
            init_model(3, 6, 4, stages=0, k=5)


# ----------------------------------------------------------------------------
# Projection
# ----------------------------------------------------------------------------


class TestProjectColumns:
    """Tests for project_columns."""

    def test_rescales_long_column(self):
        """(3, 4) with C = 1 becomes (0.6, 0.8)."""
        out = project_columns(np.array([[3.0], [4.0]]), 1.0)
        assert np.allclose(out[:, 0], [0.6, 0.8])

    def test_short_column_untouched(self):
        """Columns within the bound are returned unchanged."""
        M = np.array([[0.1], [0.1]])
        assert np.array_equal(project_columns(M, 1.0), M)

    def test_zero_column_passes_through(self):
        """A zero column is not divided by its norm."""
        M = np.zeros((3, 2))
        assert np.array_equal(project_columns(M, 1.0), M)

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_idempotent(self, dtype):
        """Projecting twice equals projecting once."""
        M = (np.random.default_rng(0).normal(size=(6, 50)) * 3).astype(dtype)
        once = project_columns(M, 1.5)
        assert np.array_equal(project_columns(once, 1.5), once)

    def test_never_increases_norms_and_keeps_direction(self):
        """Norms are capped at C; directions are preserved."""
        M = np.random.default_rng(1).normal(size=(5, 40)) * 2
        out = project_columns(M, 1.0)
        before = np.linalg.norm(M, axis=0)
        after = np.linalg.norm(out, axis=0)
        assert np.all(after <= np.minimum(before, 1.0) + 1e-12)
        cosine = np.sum(M * out, axis=0) / (before * after)
        assert np.allclose(cosine, 1.0)

    def test_input_not_modified(self):
        """project_columns returns a copy."""
        M = np.array([[3.0], [4.0]])
        project_columns(M, 1.0)
        assert np.array_equal(M, [[3.0], [4.0]])

    def test_non_positive_bound_rejected(self):
        """C must be positive."""
        with pytest.raises(ConfigurationError):
            project_columns(np.ones((2, 2)), 0.0)


# ----------------------------------------------------------------------------
# Position weights
# ----------------------------------------------------------------------------


class TestPositionWeights:
    """Tests for position_weights."""

    def test_harmonic_values(self):
        """k = 3 gives (1, 1/2, 1/3, 0, ...)."""
        w = position_weights(3)
        assert [w.at(i) for i in range(1, 6)] == [1.0, 0.5, 1.0 / 3.0, 0.0, 0.0]

    def test_single_position(self):
        """k = 1 gives a single weight of 1."""
        w = position_weights(1)
        assert w.nonzeros == 1
        assert w.at(1) == 1.0

    def test_nonzero_count_and_order(self):
        """Exactly k strictly decreasing positive weights."""
        w = position_weights(20)
        assert w.nonzeros == 20
        assert np.all(np.diff(w.values) < 0)
        assert np.all(w.values > 0)

    def test_dense_scheme_covers_every_item(self):
        """Dense weights are positive for all D_items positions."""
        w = position_weights(3, "dense", n_items=12)
        assert w.nonzeros == 12
        assert w.at(12) == pytest.approx(1.0 / 12)

    def test_head_pads_with_zeros(self):
        """head() returns one weight per position, zero past k."""
        assert np.array_equal(position_weights(2).head(4), [1.0, 0.5, 0.0, 0.0])

    @pytest.mark.parametrize(
        "args", [{"k": 0}, {"k": 3, "scheme": "cubic"}, {"k": 3, "scheme": "dense"}]
    )
    def test_invalid_arguments(self, args):
        """k < 1, unknown schemes and dense weights without D_items are rejected."""
        with pytest.raises(ConfigurationError):
            position_weights(**args)


# ----------------------------------------------------------------------------
# Persistence
# ----------------------------------------------------------------------------


@pytest.fixture
def saved_model(tmp_path: Path) -> tuple[Model, Path]:
    """A two-stage model written to disk."""
    model = init_model(3, 6, 9, stages=1, k=4, weight_scheme="dense", seed=7)
    path = tmp_path / "model.bin"
    save_model(model, path)
    return model, path


class TestPersistence:
    """Tests for save_model and load_model."""

    def test_round_trip_is_bitwise(self, saved_model):
        """Loaded matrices equal the saved float32 matrices."""
        model, path = saved_model
        loaded = load_model(path)
        assert (loaded.T, loaded.n, loaded.k, loaded.weight_scheme) == (1, 3, 4, "dense")
        for a, b in zip(model.stages, loaded.stages):
            assert np.array_equal(a.U, b.U)
            assert np.array_equal(a.V, b.V)
            assert np.array_equal(a.S, b.S)

    def test_round_trip_preserves_inference(self, saved_model):
        """Predictions of the reloaded model are identical."""
        model, path = saved_model
        loaded = load_model(path)
        config = InferenceConfig(k=4, strategy="iterative")
        for i in range(6):
            q = Query.one_hot(i)
            assert inference_service.infer(model, q, config) == inference_service.infer(
                loaded, q, config
            )

    def test_wrong_magic(self, tmp_path):
        """Files without the magic bytes are rejected as not a model file."""
        path = tmp_path / "bogus.bin"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(NotAModelFileError, match="not a model file"):
            load_model(path)

    def test_truncated_payload(self, saved_model):
        """Dropping the last bytes raises TruncatedModelError."""
        _, path = saved_model
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(TruncatedModelError):
            load_model(path)

    def test_truncated_header(self, tmp_path):
        """A file holding only the magic is truncated."""
        path = tmp_path / "short.bin"
        path.write_bytes(MAGIC + b"\x01")
        with pytest.raises(TruncatedModelError):
            load_model(path)

    def test_unsupported_version(self, saved_model):
        """A different format version is refused."""
        _, path = saved_model
        data = bytearray(path.read_bytes())
        data[4:8] = (99).to_bytes(4, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(VersionMismatchError):
            load_model(path)

    def test_trailing_bytes(self, saved_model):
        """Extra payload beyond the header dimensions is a dimension mismatch."""
        _, path = saved_model
        path.write_bytes(path.read_bytes() + bytes(8))
        with pytest.raises(DimensionMismatchError):
            load_model(path)

    def test_header_k_above_items(self, saved_model):
        """A header whose k exceeds D_items is inconsistent."""
        _, path = saved_model
        data = bytearray(path.read_bytes())
        fields = list(HEADER.unpack_from(data))
        fields[6] = fields[5] + 1
        data[: HEADER.size] = HEADER.pack(*fields)
        path.write_bytes(bytes(data))
        with pytest.raises(DimensionMismatchError):
            load_model(path)

    def test_header_is_little_endian(self, saved_model):
        """Magic, then version 1 as a little-endian u32."""
        _, path = saved_model
        data = path.read_bytes()
        assert data[:4] == b"LASR"
        assert data[4:8] == (1).to_bytes(4, "little")
