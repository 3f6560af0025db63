"""On-disk kernel cache keyed by a content hash of the inputs."""

import hashlib
import json
import os
from pathlib import Path

from .io import read_matrix, write_matrix

ENV_VAR = "GPGC_CACHE_DIR"


def content_hash(graph_path, features_path, cfg, n_nodes=None):
    h = hashlib.sha256()
    for p in (graph_path, features_path):
        h.update(Path(p).read_bytes())
        h.update(b"\0")
    h.update(json.dumps({"kernel": cfg.kernel_fields(), "n_nodes": n_nodes}, sort_keys=True).encode())
    return h.hexdigest()


def resolve_cache_dir(cli_value=None):
    """``$GPGC_CACHE_DIR`` overrides the configured directory; None disables
    caching."""
    value = os.environ.get(ENV_VAR) or cli_value
    return Path(value) if value else None


class KernelCache:
    def __init__(self, directory):
        self.directory = Path(directory)

    def path(self, key):
        return self.directory / f"{key}.gpgcmat"

    def get(self, key):
        p = self.path(key)
        return read_matrix(p) if p.exists() else None

    def put(self, key, kernel):
        self.directory.mkdir(parents=True, exist_ok=True)
        tmp = self.path(key).with_suffix(".tmp")
        write_matrix(tmp, kernel)
        os.replace(tmp, self.path(key))
        return self.path(key)
