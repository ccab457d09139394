"""Plot-ready CSVs (one column per profile) from the outputs of a finished run."""

from pathlib import Path
from typing import List, Union

import pandas as pd
from loguru import logger

from src.errors import UpstreamOutputError
from src.reporting.manifest import MANIFEST_NAME, RunManifest, sha256_file


def _verified(run_dir: Path, manifest: RunManifest, relative: str) -> Path:
    digest = manifest.checksums.get(relative)
    if digest is None:
        raise UpstreamOutputError(f"Manifest does not list {relative}")
    path = run_dir / relative
    if not path.exists():
        raise UpstreamOutputError(f"{path} is missing")
    if sha256_file(path) != digest:
        raise UpstreamOutputError(f"{path} does not match its manifest checksum")
    return path


def _coords(df: pd.DataFrame) -> List[str]:
    return [c for c in ("x", "y") if c in df.columns] or ["x"]


def _wide(df: pd.DataFrame, keys: List[str], value: str) -> pd.DataFrame:
    """Node coordinates first, then one column per distinct ``keys`` combination."""
    coords = _coords(df)
    if df.empty:
        return pd.DataFrame(columns=coords)
    labels = df[keys].astype(str).apply(lambda row: "_".join(f"{k}={v}" for k, v in zip(keys, row)), axis=1)
    wide = df.assign(profile=labels).pivot_table(index=coords, columns="profile", values=value, sort=False)
    return wide.reset_index()


def branch_profiles(path: Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    coords = _coords(df)
    low = _wide(df, ["t"], "u_low").rename(columns=lambda c: c if c in coords else f"u_low_{c}")
    up = _wide(df.dropna(subset=["u_up"]), ["t"], "u_up").rename(columns=lambda c: c if c in coords else f"u_up_{c}")
    if up.columns.tolist() == coords:
        return low
    return low.merge(up, on=coords, how="left")


def census_profiles(path: Path) -> pd.DataFrame:
    return _wide(pd.read_csv(path), ["t", "cluster"], "u")


def emit_plotdata(manifest_path: Union[str, Path], target: Union[str, Path, None] = None) -> List[Path]:
    """
    Writes branch and census profile CSVs for the run behind ``manifest_path``.

    Raises:
        UpstreamOutputError: the manifest lists neither branch nor census outputs,
            or a listed file is missing or altered.
    """
    manifest_path = Path(manifest_path)
    run_dir = manifest_path if manifest_path.is_dir() else manifest_path.parent
    manifest = RunManifest.load(run_dir / MANIFEST_NAME)
    target = Path(target) if target is not None else run_dir / "plotdata"

    sources = {
        "branches/branches.csv": ("branch_profiles.csv", branch_profiles),
        "census/census_solutions.csv": ("census_profiles.csv", census_profiles),
    }
    present = [rel for rel in sources if rel in manifest.checksums]
    if not present:
        raise UpstreamOutputError(f"{manifest_path} references no branch or census output")

    target.mkdir(parents=True, exist_ok=True)
    files = []
    for relative in present:
        name, reshape = sources[relative]
        df = reshape(_verified(run_dir, manifest, relative))
        out = target / name
        df.to_csv(out, index=False, float_format="%.12g")
        files.append(out)
        logger.info("Plot data {} ({} profile column(s))", out, max(len(df.columns) - 1, 0))
    return files
