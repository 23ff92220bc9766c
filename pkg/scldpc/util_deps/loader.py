"""
Config loader - layered JSON configuration and the on-disk result cache.

Priority: defaults < ~/.config/scldpc/ (user) < .scldpc/ (project) < explicit file < overrides
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Optional

from ..models import LabConfig
from .config import CONFIG_FILENAME, PROJECT_CONFIG_NAME, USER_CONFIG_DIR

logger = logging.getLogger(__name__)


def find_config_dirs() -> list[Path]:
    """Find config directories in priority order (user > project)."""
    dirs = []

    # User config (base)
    if USER_CONFIG_DIR.exists():
        dirs.append(USER_CONFIG_DIR)

    # Project config (overrides)
    project_dir = Path.cwd() / PROJECT_CONFIG_NAME
    if project_dir.exists():
        dirs.append(project_dir)

    return dirs


def load_json_file(path: Path) -> dict:
    """Load a JSON file, return empty dict if not found."""
    if path.exists():
        return json.loads(path.read_text())
    return {}


def merge_dicts(base: dict, override: dict) -> dict:
    """Deep merge two dicts, override wins for conflicts."""
    result = base.copy()
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_dicts(result[key], value)
        else:
            result[key] = value
    return result


def load_lab_config(
    config_dir: Optional[Path] = None,
    config_file: Optional[Path] = None,
    overrides: Optional[dict] = None,
) -> LabConfig:
    """Load the merged configuration."""
    config_dirs = [config_dir] if config_dir else find_config_dirs()
    merged: dict = {}

    for directory in config_dirs:
        path = directory / CONFIG_FILENAME
        if path.exists():
            logger.debug("config layer %s", path)
            merged = merge_dicts(merged, load_json_file(path))

    if config_file:
        merged = merge_dicts(merged, load_json_file(Path(config_file)))
    if overrides:
        merged = merge_dicts(merged, overrides)

    return LabConfig(**merged) if merged else LabConfig()


def init_config_dir(path: Optional[Path] = None) -> Path:
    """Initialize a config directory with the default config file."""
    path = path or USER_CONFIG_DIR
    path.mkdir(parents=True, exist_ok=True)

    config_file = path / CONFIG_FILENAME
    if not config_file.exists():
        config_file.write_text(json.dumps(LabConfig().model_dump(mode="json"), indent=2))
        logger.info("wrote default config to %s", config_file)

    return path


def cache_key(namespace: str, payload: dict[str, Any], version: str) -> str:
    """Content hash of (version, namespace, resolved inputs)."""
    blob = json.dumps({"v": version, "ns": namespace, "in": payload}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


class ResultCache:
    """JSON records keyed by content hash."""

    def __init__(self, directory: Path | str, enabled: bool = True):
        self.directory = Path(directory)
        self.enabled = enabled

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        if not self.enabled:
            return None
        path = self._path(key)
        if path.exists():
            logger.info("cache hit %s", key)
            return json.loads(path.read_text())
        logger.debug("cache miss %s", key)
        return None

    def put(self, key: str, record: dict) -> None:
        if not self.enabled:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        self._path(key).write_text(json.dumps(record, indent=2, sort_keys=True))
