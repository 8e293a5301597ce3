"""
Report rendering for analysis and simulation results.

Human and CSV output print every number with 15 significant digits, so both
carry identical values and CSV output re-reads losslessly.
"""

import json
import logging
from typing import Optional, Sequence, Tuple

import pandas as pd

from robust_mct.errors import RobustMCTError
from robust_mct.models import MaxTResult, TailSpec

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"
FORMATS = ("human", "csv", "json")

ONE_SIDED_NOTE = (
    "note: two-sided test. For toxicity studies a one-sided alternative "
    "(--tail greater or --tail less) is usually the appropriate choice."
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


def results_frame(sections: Sequence[Tuple[str, MaxTResult]]) -> pd.DataFrame:
    """All result rows with an ``analysis`` column naming their section."""
    frames = []
    for title, result in sections:
        frame = result.to_frame()
        frame.insert(0, "analysis", title)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def render_human(sections: Sequence[Tuple[str, MaxTResult]]) -> str:
    blocks = []
    for title, result in sections:
        head = [
            f"== {title} ==",
            f"method: {result.method}   tail: {result.tail.value}   alpha: {_fmt(result.alpha)}",
            f"df: {_fmt(float(result.df))}   critical value: {_fmt(float(result.critical_value))}",
        ]
        flags = {k: v for k, v in result.flags.items() if k not in ("message", "start")}
        if flags:
            head.append("flags: " + ", ".join(f"{k}={v}" for k, v in flags.items()))
        table = result.to_frame().drop(columns=["method", "tail", "alpha", "critical_value", "joint_df"])
        head.append(table.to_string(index=False, float_format=lambda x: FLOAT_FORMAT % x))
        blocks.append("\n".join(head))
    if any(result.tail is TailSpec.TWO_SIDED for _, result in sections):
        blocks.append(ONE_SIDED_NOTE)
    return "\n\n".join(blocks) + "\n"


def render_json(sections: Sequence[Tuple[str, MaxTResult]]) -> str:
    payload = [{"analysis": title, **result.to_dict()} for title, result in sections]
    return json.dumps(payload if len(payload) > 1 else payload[0], indent=2, default=str) + "\n"


def render(sections: Sequence[Tuple[str, MaxTResult]], fmt: str = "human") -> str:
    """Render result sections in ``fmt`` ("human", "csv" or "json")."""
    if fmt == "csv":
        return results_frame(sections).to_csv(index=False, float_format=FLOAT_FORMAT)
    if fmt == "json":
        return render_json(sections)
    return render_human(sections)


def render_error(exc: RobustMCTError, fmt: str = "human") -> str:
    """Structured diagnostic for a failed command."""
    if fmt == "json":
        return json.dumps(exc.to_dict(), indent=2, default=str) + "\n"
    text = f"error [{exc.kind}]: {exc.message}"
    if exc.details:
        text += "\n" + "\n".join(f"  {k}: {v}" for k, v in exc.details.items())
    return text + "\n"


def render_frame(frame: pd.DataFrame, fmt: str = "csv") -> str:
    """Plain tables (simulation grids, plot data)."""
    if fmt == "json":
        return frame.to_json(orient="records", indent=2) + "\n"
    if fmt == "csv":
        return frame.to_csv(index=False, float_format=FLOAT_FORMAT)
    return frame.to_string(index=False, float_format=lambda x: FLOAT_FORMAT % x) + "\n"


def write_output(text: str, output: Optional[str] = None) -> None:
    """Write ``text`` to ``output`` or stdout."""
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        logger.info(f"[CLI] Wrote {output}")
    else:
        print(text, end="")

