import math

import pytest

import varid


def test_text_helpers():
    assert varid.normalize_text("homónimo") == "homonimo"
    assert varid.normalize_text("“Olá  — mundo”", keep_diacritics=True) == '"Olá - mundo"'
    assert varid.tokenize("Dá-me um computador.") == ["Dá-me", "um", "computador", "."]
    assert varid.ngrams("ab", analyzer="char", ngram_range=(1, 2)) == {"a": 1, "b": 1, "ab": 1}


def test_tag_and_delexicalize():
    tokens = varid.tag("O João viu a Maria")
    assert [t["ner"] for t in tokens if t["surface"] == "João"] == ["PERSON"]
    text = "O João viu a Maria"
    assert varid.delexicalize(text) == text
    assert varid.delexicalize(text, p_ner=1.0) == "O PERSON viu a PERSON"


def test_clean_reports_counts():
    docs = [
        {"id": "a", "text": "x", "domain": "Web", "label": "EP"},
        {"id": "b", "text": "x", "domain": "Web", "label": "EP"},
        {"id": "c", "text": "", "domain": "Web", "label": "BP"},
    ]
    out, report = varid.clean(docs)
    assert [d["id"] for d in out] == ["a"]
    assert report["input_count"] == 3
    assert report["dropped_duplicates"] == 1


def test_pipeline_round_trip(tmp_path):
    corpus = varid.synthetic_corpus(docs_per_domain=200, seed=1)
    splits = varid.build_splits(corpus, train_per_domain=120, val_per_domain=60, seed=2)
    grid = {"p_ner": [0.0, 1.0], "max_features": [1000]}
    records = varid.sweep(splits, grid, "Legal")
    assert len(records) == 2
    assert all("Legal" not in r["per_heldout_f1"] for r in records)
    surface = varid.delex_surface(records)
    assert set(surface) == {(0.0, 0.0), (0.0, 1.0)}
    best = varid.select_best(records)

    model = varid.Model.train_step2(corpus, best, sample_seed=3)
    assert len(model.metadata["provenance"]["domains"]) == 4
    label, post = model.predict(corpus[0]["text"])
    assert label in ("EP", "BP")
    assert math.isclose(math.exp(post["EP"]) + math.exp(post["BP"]), 1.0)

    path = tmp_path / "model.json"
    model.save(path)
    loaded = varid.Model.load(path)
    assert loaded.to_json() == model.to_json()
    assert loaded.predict(corpus[1]["text"]) == model.predict(corpus[1]["text"])


def test_metrics():
    report = varid.confusion_and_f1(["EP", "EP", "EP", "EP"], ["EP", "EP", "BP", "BP"])
    assert report["macro_f1"] == pytest.approx(1 / 3)
    assert varid.fleiss_kappa([["EP", "EP", "EP"], ["EP", "EP", "BP"]]) == pytest.approx(-0.2)
    pairs = [{"pair_id": "p0", "bucket": "entity", "ep_id": "e", "bp_id": "b"}]
    assert varid.paired_analysis({"e": "EP", "b": "EP"}, pairs)["same_label_pair_rate"] == 1.0


def test_errors_carry_their_kind(tmp_path):
    with pytest.raises(varid.VaridError) as info:
        varid.Model.load(tmp_path / "missing.json")
    assert info.value.kind == "io"
    with pytest.raises(varid.VaridError) as info:
        varid.Model.train(["a", "b"], ["EP", "EP"])
    assert info.value.kind == "data"
