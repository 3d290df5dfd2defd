"""Model service: initialization, norm constraints, position weights and persistence."""

import logging
import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from lasr.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    NotAModelFileError,
    TruncatedModelError,
    VersionMismatchError,
)
from lasr.models.stage import Model, StageParams
from lasr.models.weights import WEIGHT_SCHEMES, PositionWeights

logger = logging.getLogger(__name__)

MAGIC = b"LASR"
FORMAT_VERSION = 1
# magic, version, stage count, n, D_q, D_items, k, weight scheme
HEADER = struct.Struct("<4sIIIIIIB")
FLOAT = np.dtype("<f4")


def init_stage(
    n: int,
    n_query_features: int,
    n_items: int,
    seed: int,
    dtype: type = np.float32,
    structure_scale: float = 1.0,
) -> StageParams:
    """Draw fresh stage parameters.

    Every entry of U and V is i.i.d. normal with mean 0 and standard deviation
    1/sqrt(n); entries of S use ``structure_scale / sqrt(n)``.

    Args:
        n: Latent dimension.
        n_query_features: Query vocabulary or feature size D_q.
        n_items: Item count D_items.
        seed: Seed of the generator; equal seeds give identical matrices.
        dtype: Storage dtype (float32 for models, float64 for gradient checks).
        structure_scale: Multiplier of the standard deviation of S.

    Returns:
        Initialized StageParams.

    Raises:
        ConfigurationError: If any dimension is below 1.
    """
    if n < 1 or n_query_features < 1 or n_items < 1:
        raise ConfigurationError(
            f"dimensions must be positive, got n={n}, D_q={n_query_features}, D_items={n_items}"
        )

    rng = np.random.default_rng(seed)
    std = 1.0 / np.sqrt(n)
    U = rng.normal(0.0, std, size=(n, n_query_features)).astype(dtype)
    V = rng.normal(0.0, std, size=(n, n_items)).astype(dtype)
    S = rng.normal(0.0, std * structure_scale, size=(n, n_items)).astype(dtype)
    return StageParams(U, V, S)


def init_model(
    n: int,
    n_query_features: int,
    n_items: int,
    stages: int,
    k: int,
    weight_scheme: str = "sparse",
    seed: int = 0,
    structure_scale: float = 1.0,
) -> Model:
    """Initialize a cascade with ``stages + 1`` independently seeded stages.

    Args:
        n: Latent dimension.
        n_query_features: Query dimension D_q.
        n_items: Item count D_items.
        stages: Index T of the last stage.
        k: Top-k cutoff.
        weight_scheme: Position-weight rule.
        seed: Root seed.
        structure_scale: Multiplier of the initial spread of every S.

    Returns:
        Freshly initialized Model.
    """
    if stages < 0:
        raise ConfigurationError(f"stage index must be >= 0, got {stages}")
    stage_seeds = np.random.SeedSequence(seed).generate_state(stages + 1)
    return Model(
        stages=[
            init_stage(n, n_query_features, n_items, int(s), structure_scale=structure_scale)
            for s in stage_seeds
        ],
        k=k,
        weight_scheme=weight_scheme,
    )


def _projection_tolerance(dtype: np.dtype) -> float:
    # rounding of a rescaled column must not trigger a second rescale
    return 8.0 * float(np.finfo(dtype).eps)


def project_columns(M: np.ndarray, C: float) -> np.ndarray:
    """Rescale every column whose norm exceeds C onto the norm-C sphere.

    Args:
        M: Matrix whose columns are constrained.
        C: Maximum column norm.

    Returns:
        A projected copy of ``M``; columns within the bound are untouched and zero
        columns pass through.
    """
    out = M.copy()
    project_columns_inplace(out, C)
    return out


def project_columns_inplace(M: np.ndarray, C: float, columns: Sequence[int] | None = None) -> None:
    """In-place variant of ``project_columns`` restricted to some columns.

    Args:
        M: Matrix modified in place.
        C: Maximum column norm.
        columns: Columns to check; all columns when None.
    """
    if C <= 0:
        raise ConfigurationError(f"C must be positive, got {C}")

    cols = np.arange(M.shape[1]) if columns is None else np.unique(np.asarray(columns))
    if cols.size == 0:
        return
    block = M[:, cols].astype(np.float64)
    norms = np.linalg.norm(block, axis=0)
    over = norms > C * (1.0 + _projection_tolerance(M.dtype))
    if not over.any():
        return
    block[:, over] *= C / norms[over]
    M[:, cols[over]] = block[:, over].astype(M.dtype)


def position_weights(k: int, scheme: str = "sparse", n_items: int | None = None) -> PositionWeights:
    """Harmonic position weights.

    Args:
        k: Cutoff; positions beyond k weigh 0 under the sparse scheme.
        scheme: ``sparse`` (``w_i = 1/i`` for ``i <= k``) or ``dense``
            (``w_i = 1/i`` for every position up to ``n_items``).
        n_items: Item count, required by the dense scheme.

    Returns:
        PositionWeights.

    Raises:
        ConfigurationError: If k < 1, the scheme is unknown or the dense scheme
            lacks the item count.
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if scheme not in WEIGHT_SCHEMES:
        raise ConfigurationError(f"unknown weight scheme: {scheme}")
    if scheme == "dense" and (n_items is None or n_items < 1):
        raise ConfigurationError("dense position weights need the item count")
    return PositionWeights.harmonic(k, scheme, n_items)


def save_model(model: Model, path: str | Path) -> None:
    """Write a model in the little-endian binary format.

    Args:
        model: Model to persist.
        path: Destination file; parent directories are created.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header = HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        len(model.stages),
        model.n,
        model.n_query_features,
        model.n_items,
        model.k,
        WEIGHT_SCHEMES.index(model.weight_scheme),
    )
    with open(path, "wb") as f:
        f.write(header)
        for stage in model.stages:
            for matrix in (stage.U, stage.V, stage.S):
                f.write(np.ascontiguousarray(matrix, dtype=FLOAT).tobytes())

    logger.info(f"Model saved: {path} ({model})")


def load_model(path: str | Path) -> Model:
    """Read a model written by ``save_model``.

    Args:
        path: Model file.

    Returns:
        The loaded Model with float32 matrices.

    Raises:
        NotAModelFileError: If the magic bytes are wrong.
        VersionMismatchError: If the format version is unsupported.
        TruncatedModelError: If the file ends early; no partial model is returned.
        DimensionMismatchError: If the header is inconsistent with itself or with
            the payload size.
    """
    data = Path(path).read_bytes()

    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise NotAModelFileError(f"not a model file: {path}")
    if len(data) < HEADER.size:
        raise TruncatedModelError(f"truncated model file (header): {path}")

    _, version, n_stages, n, n_q, n_items, k, scheme = HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"model file version {version} is not supported (expected {FORMAT_VERSION}): {path}"
        )
    if min(n_stages, n, n_q, n_items) < 1 or not 1 <= k <= n_items or scheme >= len(WEIGHT_SCHEMES):
        raise DimensionMismatchError(
            f"inconsistent model header: stages={n_stages} n={n} D_q={n_q} "
            f"D_items={n_items} k={k} scheme={scheme}: {path}"
        )

    shapes = [(n, n_q), (n, n_items), (n, n_items)]
    expected = HEADER.size + n_stages * sum(r * c for r, c in shapes) * FLOAT.itemsize
    if len(data) < expected:
        raise TruncatedModelError(
            f"truncated model file: {len(data)} of {expected} bytes present: {path}"
        )
    if len(data) > expected:
        raise DimensionMismatchError(
            f"model file holds {len(data) - expected} bytes beyond its declared dimensions: {path}"
        )

    offset = HEADER.size
    stages = []
    for _ in range(n_stages):
        matrices = []
        for rows, cols in shapes:
            count = rows * cols
            block = np.frombuffer(data, dtype=FLOAT, count=count, offset=offset)
            matrices.append(block.reshape(rows, cols).astype(np.float32))
            offset += count * FLOAT.itemsize
        stages.append(StageParams(*matrices))

    model = Model(stages=stages, k=k, weight_scheme=WEIGHT_SCHEMES[scheme])
    logger.info(f"Model loaded: {path} ({model})")
    return model
