"""
Regression data for the census scenario: CSV ingestion and a synthetic
stand-in with the same two columns.
"""
import logging
import math
import os
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import IngestionError, ParameterError
from src.models.inference import Sample

logger = logging.getLogger(__name__)

REGRESSION_COLUMNS = ('mrkinc', 'shelco')
LABEL_CUTOFF = 0.5


def _scale_unit(values: pd.Series, name: str, rows_read: int) -> np.ndarray:
    low, high = values.min(), values.max()
    if not high > low:
        raise IngestionError(f"column {name} is constant and cannot be scaled to [0, 1]",
                             rows_read=rows_read, rows_kept=len(values))
    return ((values - low) / (high - low)).to_numpy(dtype=float)


def regression_sample_from_frame(frame: pd.DataFrame, columns: Tuple[str, str] = REGRESSION_COLUMNS,
                                 rows_read: Optional[int] = None) -> Sample:
    """
    Scale covariate and response to [0, 1] by their observed range, build
    x = (1, v)/sqrt(2) and label +1 where the scaled response is at least 0.5.
    """
    covariate_name, response_name = columns
    rows_read = len(frame) if rows_read is None else rows_read
    if frame.empty:
        raise IngestionError("no complete rows left after dropping missing values", rows_read=rows_read, rows_kept=0)

    covariate = _scale_unit(frame[covariate_name], covariate_name, rows_read)
    response = _scale_unit(frame[response_name], response_name, rows_read)
    records = np.column_stack([np.ones_like(covariate), covariate]) / math.sqrt(2.0)
    labels = np.where(response >= LABEL_CUTOFF, 1.0, -1.0)
    return Sample(records=records, labels=labels, lower=0.0, upper=1.0 / math.sqrt(2.0))


def ingest_regression_csv(path, columns: Tuple[str, str] = REGRESSION_COLUMNS) -> Sample:
    """Read a two-column regression CSV, drop incomplete rows and scale to the unit square."""
    try:
        raw = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Error reading regression file {path}: {str(e)}")
        raise IngestionError(f"cannot read {path}: {str(e)}")

    rows_read = len(raw)
    missing = [name for name in columns if name not in raw.columns]
    if missing:
        raise IngestionError(f"{path} lacks the column(s) {', '.join(missing)}", rows_read=rows_read)

    raw = raw[list(columns)]
    numeric = raw.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna() & raw.notna()
    if bad.any().any():
        row = int(np.flatnonzero(bad.any(axis=1).to_numpy())[0])
        raise IngestionError(f"{path} row {row + 1} holds a non-numeric value", rows_read=rows_read)

    frame = numeric.dropna()
    logger.info(f"Ingested {path}: {rows_read} rows read, {len(frame)} kept")
    return regression_sample_from_frame(frame, columns, rows_read=rows_read)


def read_value_column(path) -> np.ndarray:
    """
    Numbers from the first column of a CSV. The first row is a header only
    when its first cell is not a number; empty or non-numeric cells below it
    are dropped.
    """
    try:
        raw = pd.read_csv(path, header=None, dtype=str, skipinitialspace=True, skip_blank_lines=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Error reading value file {path}: {str(e)}")
        raise IngestionError(f"cannot read {path}: {str(e)}")

    column = raw.iloc[:, 0]
    has_header = pd.isna(pd.to_numeric(column.iloc[:1], errors='coerce')).all()
    if has_header:
        column = column.iloc[1:]
    values = pd.to_numeric(column, errors='coerce').dropna().to_numpy(dtype=float)
    if values.size == 0:
        raise IngestionError(f"{path} holds no numeric values", rows_read=len(column), rows_kept=0)
    logger.info(f"Read {path}: {len(column)} rows{' after the header' if has_header else ''}, {values.size} kept")
    return values


def synthesize_census_surrogate(count: int, rng: np.random.Generator, missing_rate: float = 0.01) -> pd.DataFrame:
    """
    Two right-skewed, positively correlated variables named like the census
    columns, with a few empty cells.
    """
    if count < 2:
        raise ParameterError(f"count must be at least 2, got {count}")
    if not 0.0 <= missing_rate < 1.0:
        raise ParameterError(f"missing_rate must lie in [0, 1), got {missing_rate}")

    income_factor = rng.standard_normal(count)
    mrkinc = np.exp(10.5 + 0.8 * income_factor)
    shelco = np.exp(6.8 + 0.5 * (0.6 * income_factor + 0.8 * rng.standard_normal(count)))
    frame = pd.DataFrame({'mrkinc': np.round(mrkinc), 'shelco': np.round(shelco)})
    for name in frame.columns:
        frame.loc[rng.uniform(size=count) < missing_rate, name] = np.nan
    return frame


def write_census_surrogate(path, count: int = 10_000, seed: int = 0) -> str:
    frame = synthesize_census_surrogate(count, np.random.default_rng(seed))
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote census surrogate with {count} rows to {path}")
    return str(path)
