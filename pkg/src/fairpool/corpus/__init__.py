"""The PhD-admissions example corpus: two expert models, a fairness spec,
an encoding table and two applicants."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

MODELS = ("alice.scm", "bob.scm")
SPEC = "phd.fair"
ENCODING = "phd.enc"
EVIDENCE = "applicants.evd"


def path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(name)))


def read(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load():
    """Parse the whole corpus: ``(models, spec, encoding, evidence)``."""
    from ..dsl import parse_model
    from ..formats import parse_encoding, parse_evidence, parse_fairness_spec

    models = [parse_model(read(name)) for name in MODELS]
    spec = parse_fairness_spec(read(SPEC), models)
    encoding = parse_encoding(read(ENCODING))
    variables = set().union(*(m.variables for m in models))
    evidence = parse_evidence(read(EVIDENCE), encoding, variables)
    return models, spec, encoding, evidence
