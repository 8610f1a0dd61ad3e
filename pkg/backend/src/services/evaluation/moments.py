"""
Statistical moments of datasets projected on the principal directions of the observed
training data.
"""

from __future__ import annotations

import logging

import numpy as np

from backend.src.common.known_exception import DegenerateBasisError, ShapeMismatchError
from backend.src.schemas.reports import MOMENT_NAMES, MomentRow, MomentsReport
from backend.src.services.datasets.dataset import Dataset

logger = logging.getLogger(__name__)

COMPONENTS = 3
EPS = np.finfo(np.float64).eps


def projection_basis(
    features: np.ndarray, components: int = COMPONENTS, centered: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Leading right singular vectors of the feature matrix.

    Without centering the SVD runs on the raw matrix, so projected means stay nonzero.
    Each direction is signed so that its largest-magnitude entry is positive.

    Returns:
        (basis (components, D), offset (D,), singular values (components,))

    Raises:
        DegenerateBasisError: If the matrix rank is below ``components``.
    """
    features = np.asarray(features, dtype=np.float64)
    offset = features.mean(axis=0) if centered else np.zeros(features.shape[1])
    _, singular, vt = np.linalg.svd(features - offset, full_matrices=False)
    tolerance = (singular[0] if singular.size else 0.0) * max(features.shape) * EPS
    rank = int(np.sum(singular > tolerance))
    if rank < components:
        raise DegenerateBasisError(rank, components)
    basis = vt[:components]
    pivots = np.argmax(np.abs(basis), axis=1)
    signs = np.sign(basis[np.arange(components), pivots])
    return basis * signs[:, None], offset, singular[:components]


def sample_moments(values: np.ndarray) -> dict[str, np.ndarray]:
    """
    Population mean, variance, skewness and non-excess kurtosis per column.

    Columns with zero variance get zero skewness and kurtosis.
    """
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean(axis=0)
    centered = values - mean
    variance = np.mean(centered**2, axis=0)
    m3 = np.mean(centered**3, axis=0)
    m4 = np.mean(centered**4, axis=0)
    safe = np.where(variance > 0.0, variance, 1.0)
    skewness = np.where(variance > 0.0, m3 / safe**1.5, 0.0)
    kurtosis = np.where(variance > 0.0, m4 / safe**2, 0.0)
    return {"mean": mean, "variance": variance, "skewness": skewness, "kurtosis": kurtosis}


def pca_moments(
    otd: Dataset, generated: list[Dataset], centered: bool = False
) -> MomentsReport:
    """
    Projects the reference and every generated dataset on the reference's first three
    principal directions and tabulates four moments per component.

    Raises:
        DegenerateBasisError: If the reference has rank below 3.
        ShapeMismatchError: If a generated dataset has another feature width.
    """
    basis, offset, singular = projection_basis(otd.features, centered=centered)
    rows: list[MomentRow] = []
    for dataset in [otd, *generated]:
        if dataset.features.shape[1] != basis.shape[1]:
            raise ShapeMismatchError(
                f"projection of {dataset.name}", basis.shape[1], dataset.features.shape[1]
            )
        moments = sample_moments((dataset.features - offset) @ basis.T)
        for component in range(basis.shape[0]):
            rows.extend(
                MomentRow(
                    dataset=dataset.name,
                    component=component + 1,
                    moment=moment,
                    value=float(moments[moment][component]),
                )
                for moment in MOMENT_NAMES
            )
    logger.info(
        "moments of %d datasets on the %s basis of %s",
        len(generated) + 1,
        "centered" if centered else "uncentered",
        otd.name,
    )
    return MomentsReport(
        reference=otd.name,
        centered=centered,
        singular_values=[float(s) for s in singular],
        rows=rows,
    )
