import json
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel, Field

BUNDLE_VERSION = 1
INDEX_NAME = "index.json"


class BundleFile(BaseModel):
    path: str
    description: str
    columns: list[str] = Field(default_factory=list)


class BundleIndex(BaseModel):
    """
    Contents of index.json: every file in the bundle, plus headline statistics.

    Attributes
    ----------
    version : int
    label : str
        "trained" or "random", the weights the primary tables were computed with.
    files : list[BundleFile]
    empty_events : dict[str, list[str]]
        Per table, the requested events that had no segments.
    statistics : dict[str, Any]
    """

    version: int = BUNDLE_VERSION
    label: str
    files: list[BundleFile] = Field(default_factory=list)
    empty_events: dict[str, list[str]] = Field(default_factory=dict)
    statistics: dict[str, Any] = Field(default_factory=dict)

    def file(self, path: str) -> BundleFile:
        for entry in self.files:
            if entry.path == path:
                return entry
        raise KeyError(f"{path} is not part of the bundle. Files: {[f.path for f in self.files]}.")


class PlotBundle:
    """A directory of plain CSV/JSON files any plotting tool can read, documented by index.json.

    Parameters
    ----------
    out_dir : Path
    label : str
    """

    def __init__(self, out_dir: Path, label: str) -> None:
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        self.index = BundleIndex(label=label)

    def add_table(self, name: str, frame: pd.DataFrame, description: str) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False)
        self.index.files.append(BundleFile(path=name, description=description, columns=[str(c) for c in frame.columns]))
        return path

    def add_json(self, name: str, payload: dict[str, Any], description: str) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.index.files.append(BundleFile(path=name, description=description))
        return path

    def add_file(self, name: str, description: str) -> None:
        """Registers a file some other writer already put into the bundle directory."""
        self.index.files.append(BundleFile(path=name, description=description))

    def write_index(self) -> Path:
        path = self.out_dir / INDEX_NAME
        path.write_text(self.index.model_dump_json(indent=2) + "\n")
        return path


def read_bundle_index(out_dir: Path) -> BundleIndex:
    return BundleIndex.model_validate_json((out_dir / INDEX_NAME).read_text())
