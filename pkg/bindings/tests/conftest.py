import os
from types import SimpleNamespace

import pytest

from bindings_helpers import (
    eval_results,
    fuse_source_a,
    fuse_source_b,
    gt_doc,
    self_results,
    solo_results,
    write_json,
)


@pytest.fixture(autouse=True)
def _no_env_defaults(monkeypatch):
    # MASKBENCH_* config vars would leak into the spawned CLI and skew
    # the equivalence comparisons, so the binding tests run without them
    for name in list(os.environ):
        if name.startswith("MASKBENCH_"):
            monkeypatch.delenv(name)


@pytest.fixture()
def scene(tmp_path):
    return SimpleNamespace(
        gt=write_json(tmp_path / "gt.json", gt_doc()),
        results=write_json(tmp_path / "results.json", eval_results()),
        self_results=write_json(tmp_path / "self.json", self_results()),
        src_a=write_json(tmp_path / "src_a.json", fuse_source_a()),
        src_b=write_json(tmp_path / "src_b.json", fuse_source_b()),
        solo=write_json(tmp_path / "solo.json", solo_results()),
        dir=tmp_path,
    )
