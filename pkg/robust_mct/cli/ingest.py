"""
CSV ingestion for the analysis commands.

Reads a long-format table (one row per subject, a group column plus one or
more numeric response columns) into ``GroupedSample`` objects with the
control group first and the remaining groups in ascending dose order.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from robust_mct.errors import DataFormatError, InvalidDesignError
from robust_mct.models import Group, GroupedSample

logger = logging.getLogger(__name__)

# data rows start on line 2 of the file
_FIRST_DATA_LINE = 2


def _group_order(labels: Sequence[str], control: Optional[str]) -> List[str]:
    """Control first, then numeric labels ascending, then the rest alphabetically."""
    unique = list(dict.fromkeys(labels))
    numeric = pd.to_numeric(pd.Series(unique), errors="coerce")
    if control is None:
        if numeric.notna().any():
            control = unique[int(numeric.idxmin())]
        else:
            control = sorted(unique)[0]
    if control not in unique:
        raise InvalidDesignError(f"Control group '{control}' not found", {"groups": unique})
    rest = [lab for lab in unique if lab != control]
    num = sorted((lab for lab in rest if pd.notna(pd.to_numeric(lab, errors="coerce"))), key=float)
    other = sorted(lab for lab in rest if pd.isna(pd.to_numeric(lab, errors="coerce")))
    return [control] + num + other


def read_table(path: str, columns: Sequence[str]) -> pd.DataFrame:
    """
    Read ``path`` as strings and check that ``columns`` exist.

    Raises:
        DataFormatError: unreadable file, missing header or missing columns
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataFormatError(f"Input file not found: {path}") from exc
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataFormatError(f"Cannot parse {path}: {exc}") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataFormatError(f"Missing column(s) {missing}", details={"available": list(frame.columns)})
    return frame


def _parse_responses(frame: pd.DataFrame, columns: Sequence[str], drop_missing: bool) -> Tuple[pd.DataFrame, List[int]]:
    """Numeric responses; rows with unparseable values raise or are dropped."""
    numeric = pd.DataFrame({c: pd.to_numeric(frame[c].str.strip(), errors="coerce") for c in columns}, index=frame.index)
    bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric.fillna(0.0)).all(axis=1)
    bad_lines = [int(i) + _FIRST_DATA_LINE for i in frame.index[bad]]
    if bad_lines and not drop_missing:
        raise DataFormatError(
            f"{len(bad_lines)} row(s) with missing or non-numeric responses in {list(columns)}",
            lines=bad_lines,
        )
    if bad_lines:
        logger.warning(f"[INGEST] Dropped {len(bad_lines)} incomplete row(s): lines {bad_lines[:10]}")
    return numeric.loc[~bad], bad_lines


def ingest_csv(
    path: str,
    response: str,
    group_column: str = "Dose",
    control: Optional[str] = None,
    drop_missing: bool = False,
) -> GroupedSample:
    """
    Load one response column as a one-way layout.

    Args:
        path: CSV file with a header row
        response: response column name
        group_column: column holding the group (dose) labels
        control: control label, defaults to the smallest numeric label
        drop_missing: drop rows with missing responses instead of failing

    Raises:
        DataFormatError: missing columns or unparseable values (with line numbers)
        InvalidDesignError: unknown control or groups with fewer than 2 observations
    """
    samples, _ = ingest_endpoints(path, [response], group_column, control, drop_missing)
    return samples[response]


def ingest_endpoints(
    path: str,
    responses: Sequence[str],
    group_column: str = "Dose",
    control: Optional[str] = None,
    drop_missing: bool = False,
) -> Tuple[Dict[str, GroupedSample], np.ndarray]:
    """
    Load several responses measured on the same subjects.

    Only rows complete in every response are kept, so all samples share the
    same subjects in the same order.

    Returns:
        (sample per response, row index of every subject in sample order)
    """
    frame = read_table(path, [group_column, *responses])
    labels = frame[group_column].str.strip()
    empty = labels == ""
    if empty.any():
        lines = [int(i) + _FIRST_DATA_LINE for i in frame.index[empty]]
        if not drop_missing:
            raise DataFormatError(f"Missing group label in column '{group_column}'", lines=lines)
        frame, labels = frame.loc[~empty], labels.loc[~empty]

    numeric, _ = _parse_responses(frame, responses, drop_missing)
    labels = labels.loc[numeric.index]
    order = _group_order(labels.tolist(), control)

    samples: Dict[str, GroupedSample] = {}
    subject_rows: List[np.ndarray] = []
    for lab in order:
        rows = numeric.index[labels == lab]
        subject_rows.append(np.asarray(rows))
        if len(rows) < 2:
            raise InvalidDesignError(
                f"Group '{lab}' has {len(rows)} usable observation(s); at least 2 are required",
                {"group": lab, "n": int(len(rows))},
            )
    for column in responses:
        groups = []
        for lab, rows in zip(order, subject_rows):
            dose = pd.to_numeric(lab, errors="coerce")
            groups.append(
                Group(label=lab, responses=numeric.loc[rows, column].to_numpy(), dose=None if pd.isna(dose) else float(dose))
            )
        samples[column] = GroupedSample(tuple(groups))

    sizes = ", ".join(f"{lab}:{len(r)}" for lab, r in zip(order, subject_rows))
    logger.info(f"[INGEST] {path}: {len(order)} groups ({sizes}), responses {list(responses)}")
    return samples, np.concatenate(subject_rows)


def plot_data(sample: GroupedSample, response: str) -> pd.DataFrame:
    """
    Per-observation points with their group mean and SD, for external boxplots.

    Columns: response, group, value, group_mean, group_sd, n.
    """
    rows = []
    for grp in sample.groups:
        mean = float(grp.responses.mean())
        sd = float(grp.responses.std(ddof=1))
        for value in grp.responses:
            rows.append(
                {"response": response, "group": grp.label, "value": float(value), "group_mean": mean, "group_sd": sd, "n": grp.n}
            )
    return pd.DataFrame(rows)
