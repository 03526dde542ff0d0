"""Shared fixtures: a desk corpus built through the dataset CLI, trained
checkpoints, and a test client over them.

The dataset is produced by the `cohereval augment` command line, so this
package touches the scorer project only through its published interfaces:
the CLI and the dataset file format.
"""

import json
import random
import subprocess
import sys
import time

import pytest

from model_service.cli import main as cli_main

_OPENERS = [
    "The crew began the survey",
    "Alice started the project",
    "The team opened the site",
    "Workers launched the dig",
]
_MIDDLES = [
    "Work continued through phase",
    "Progress held during stage",
    "Effort advanced in step",
    "Momentum carried past checkpoint",
]
_CLOSERS = [
    "The survey finished cleanly.",
    "The project ended on schedule.",
    "The site closed without issue.",
    "The dig wrapped up early.",
]


def write_corpus(root, n_docs=440, seed=0):
    """Templated narratives with ordered openings, middles, and endings so
    shuffled versions are learnably different from the originals."""
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    for i in range(n_docs):
        n_mid = rng.randint(1, 3)
        sentences = [f"{rng.choice(_OPENERS)} on day {i}."]
        sentences += [f"{rng.choice(_MIDDLES)} {k} of run {i}." for k in range(n_mid)]
        sentences.append(rng.choice(_CLOSERS))
        (root / f"doc{i:04d}.txt").write_text(" ".join(sentences), encoding="utf-8")


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory):
    base = tmp_path_factory.mktemp("corpus")
    sources = base / "sources"
    write_corpus(sources)
    out = base / "augmented"
    subprocess.run(
        [
            "cohereval", "augment",
            "--sources", str(sources),
            "--out", str(out),
            "--seed", "11",
            "--delta", "0",
        ],
        check=True,
        capture_output=True,
        text=True,
    )
    return out / "dataset.jsonl"


@pytest.fixture(scope="session")
def trained(dataset_path, tmp_path_factory):
    """Checkpoint directory plus the training report and wall time."""
    out = tmp_path_factory.mktemp("checkpoints")
    start = time.perf_counter()
    code = cli_main(
        [
            "train",
            "--dataset", str(dataset_path),
            "--out", str(out),
            "--epochs", "5",
            "--seed", "3",
        ]
    )
    elapsed = time.perf_counter() - start
    assert code == 0
    report = json.loads((out / "training_report.json").read_text(encoding="utf-8"))
    return {"dir": out, "report": report, "seconds": elapsed}


@pytest.fixture(scope="session")
def client(trained):
    from fastapi.testclient import TestClient

    from model_service.service import create_app

    return TestClient(create_app(trained["dir"], deterministic=True))


def has_cohereval_cli() -> bool:
    probe = subprocess.run(
        ["cohereval", "--version"], capture_output=True, text=True
    )
    return probe.returncode == 0


def pytest_sessionstart(session):
    if not has_cohereval_cli():
        print("cohereval CLI not on PATH; dataset fixtures will fail", file=sys.stderr)
