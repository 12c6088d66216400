import os

import polars as pl

from src.cdal.constants import CSV_FLOAT_FORMAT, DEFAULT_OUTPUT_DIR


def output_dir() -> str:
    return os.environ.get("CDAL_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)


def format_floats(df: pl.DataFrame) -> pl.DataFrame:
    """Render every float column with 9 significant digits (as strings)."""
    cols = []
    for col, dtype in df.schema.items():
        if dtype in (pl.Float32, pl.Float64):
            cols.append(
                pl.col(col).map_elements(lambda v: CSV_FLOAT_FORMAT.format(v), return_dtype=pl.Utf8).alias(col)
            )
        else:
            cols.append(pl.col(col))
    return df.select(cols)


def write_csv(df: pl.DataFrame, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    format_floats(df).write_csv(path)
    print(f"💾 Saved {df.height} rows → {path}")
    return path
