import pytest

from fairpool import corpus
from fairpool.errors import (DuplicateDeclaration, FairnessSpecError, IncompletePartition, ModelSyntaxError,
                             OverlappingPartition, PredictorInPartition, UnknownToken,
                             UnknownVariable)
from fairpool.formats import (EncodingTable, format_encoding, format_fairness_spec,
                              parse_encoding, parse_evidence, parse_fairness_spec)


def test_app1_resolves_through_the_default_table(phd):
    _, _, encoding, _ = phd
    (record,) = parse_evidence(
        "App1: Age=22; Gnd=F; Dpt=ComputerScience; Mrk=0.8; Job=True; Cvr=0.4", encoding)
    assert record.label == "App1"
    assert dict(record.resolved) == {"Age": 22, "Gnd": 1, "Dpt": 0, "Mrk": 0.8, "Job": 1,
                                     "Cvr": 0.4}
    assert record.values["Gnd"] == "F"


def test_corpus_applicants_differ_only_in_gender(applicants):
    a, b = dict(applicants["App1"].resolved), dict(applicants["App2"].resolved)
    assert a.pop("Gnd") == 1 and b.pop("Gnd") == 0
    assert a == b


def test_numeric_record_passes_through():
    (record,) = parse_evidence("Age=22; Mrk=0.8; Cvr=-1.5e-1")
    assert dict(record.resolved) == {"Age": 22.0, "Mrk": 0.8, "Cvr": -0.15}
    assert record.label == "record1"


def test_unknown_token_is_located(phd):
    with pytest.raises(UnknownToken) as info:
        parse_evidence("\nApp3: Age=22; Gnd=Q", phd[2])
    assert info.value.line == 2 and info.value.column == 15


def test_unknown_variable():
    with pytest.raises(UnknownVariable):
        parse_evidence("Salary=3", variables={"Age"})


def test_evidence_syntax_errors():
    with pytest.raises(ModelSyntaxError):
        parse_evidence("Age 22")
    with pytest.raises(DuplicateDeclaration):
        parse_evidence("Age=22; Age=23")


def test_with_value_overrides_one_entry(applicants):
    changed = applicants["App1"].with_value("Gnd", 0)
    assert changed.resolved["Gnd"] == 0 and applicants["App1"].resolved["Gnd"] == 1


def test_encoding_round_trip(phd):
    encoding = phd[2]
    assert parse_encoding(format_encoding(encoding)) == encoding
    assert encoding.token_for("Gnd", 1) == "F"
    assert encoding.resolve("Gnd", "0.5") == 0.5


@pytest.mark.parametrize("text, error", [
    ("Gnd.F = x", ModelSyntaxError),
    ("Gnd = 1", ModelSyntaxError),
    ("Gnd.F = 1\nGnd.F = 0", DuplicateDeclaration),
])
def test_bad_encodings(text, error):
    with pytest.raises(error):
        parse_encoding(text)


def test_encoding_values_must_be_finite():
    with pytest.raises(ValueError):
        EncodingTable({"Gnd": {"F": float("inf")}})


def test_corpus_fairness_spec(phd):
    models, spec, _, _ = phd
    assert spec.protected == {"Gnd"}
    assert {"Age", "Dpt", "Mrk", "Job", "Cvr", "U_age", "U_gnd"} <= spec.features
    assert spec.predictor == "Y"
    assert parse_fairness_spec(format_fairness_spec(spec), models) == spec


def test_overlapping_partition(phd):
    text = "protected = Gnd\nfeatures = Gnd, Age, Dpt, Mrk, Job, Cvr\nexogenous = features\npredictor = Y"
    with pytest.raises(OverlappingPartition):
        parse_fairness_spec(text, phd[0])


def test_incomplete_partition(phd):
    text = "protected = Gnd\nfeatures = Age, Dpt, Mrk, Job\nexogenous = features\npredictor = Y"
    with pytest.raises(IncompletePartition) as info:
        parse_fairness_spec(text, phd[0])
    assert info.value.variable == "Cvr"


def test_predictor_in_partition(phd):
    text = "protected = Gnd\nfeatures = Age, Y\npredictor = Y"
    with pytest.raises(PredictorInPartition):
        parse_fairness_spec(text, phd[0])


def test_unknown_variable_in_spec(phd):
    text = corpus.read("phd.fair").replace("Cvr", "Cvr, Salary")
    with pytest.raises(UnknownVariable):
        parse_fairness_spec(text, phd[0])


def test_spec_requires_a_predictor():
    with pytest.raises(FairnessSpecError) as info:
        parse_fairness_spec("protected = Gnd")
    assert "predictor" in str(info.value)
