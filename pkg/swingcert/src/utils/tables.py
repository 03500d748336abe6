import csv
import io
from typing import Iterable, Optional, Sequence


def format_float(value: Optional[float]) -> str:
    """Shortest repr that round-trips; empty for missing values."""
    if value is None:
        return ""
    return repr(float(value))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """
    CSV with ``\\n`` line endings. Floats are written with ``format_float``.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) or v is None else v for v in row])
    return buffer.getvalue()
