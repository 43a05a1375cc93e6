"""Bundled regression corpus.

Each entry holds an explicit instance, an accepted abscissa and the oracle
projector onto the eigenvalues right of it, frozen when the corpus was built.
Rebuild with ``python3 -m specidem.corpus`` (only needed if the format changes).
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .generators import random_instance
from .io import from_pairs, instance_from_dict, instance_to_dict, to_pairs, write_json
from .oracle import HalfPlane, riesz_oracle

__all__ = ["CORPUS_SPECS", "build_corpus", "load_corpus"]

CORPUS_SPECS = [(N, R, seed) for seed, (N, R) in enumerate(
    [(8, 1), (8, 2), (8, 3), (12, 1), (12, 2), (12, 3), (16, 1), (16, 2), (16, 3), (16, 4),
     (10, 1), (10, 2), (14, 1), (14, 2), (14, 3), (6, 1), (6, 2), (20, 2), (20, 3), (24, 2)], start=100)]


def build_corpus() -> list:
    out = []
    for N, R, seed in CORPUS_SPECS:
        T, xi = random_instance(N, R, seed)
        P = riesz_oracle(T, HalfPlane(xi, "plus"))
        out.append({"instance": instance_to_dict(T), "xi": xi, "expected_plus": to_pairs(P)})
    return out


def load_corpus() -> list:
    """List of ``(T, xi, P_plus)`` triples."""
    text = resources.files("specidem").joinpath("data/corpus.json").read_text()
    return [(instance_from_dict(e["instance"]), float(e["xi"]), from_pairs(e["expected_plus"]))
            for e in json.loads(text)]


if __name__ == "__main__":
    path = Path(__file__).parent / "data" / "corpus.json"
    write_json(build_corpus(), path)
    print(f"wrote {path}")
