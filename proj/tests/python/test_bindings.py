import math
from pathlib import Path

import pytest

import minitod


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    out = tmp_path_factory.mktemp("world")
    train_turns, test_turns = minitod.gen_corpus(str(out), train=20, test=5, seed=3)
    assert train_turns > 0 and test_turns > 0
    return out


def test_gen_corpus_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    minitod.gen_corpus(str(a), train=10, test=3, seed=5)
    minitod.gen_corpus(str(b), train=10, test=3, seed=5)
    for name in ["train.json", "test.json", "db.json", "ontology.json"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_vocab_round_trip(world):
    seqs = minitod.training_sequences(
        str(world / "train.json"), str(world / "ontology.json")
    )
    assert len(seqs) > 0
    vocab = minitod.Vocab.build(seqs, minitod.segment_specials())
    for seq in seqs[:10]:
        assert vocab.decode(vocab.encode(seq)) == seq


def test_belief_serialization_round_trips():
    belief = [
        ("train", "destination", "ely"),
        ("train", "day", "monday"),
        ("hotel", "book stay", "two nights"),
    ]
    canon = minitod.canonicalize(belief)
    assert canon == sorted(set(belief))

    text = minitod.serialize_belief(canon)
    slots = ["destination", "day", "book stay"]
    parsed, failed = minitod.parse_belief(text, slots)
    assert not failed
    assert parsed == canon


def test_bleu_fixture():
    candidates = ["the cat sat on the mat", "there are three trains to ely today"]
    references = ["the cat sat on a mat", "there are three trains to ely on monday"]
    assert minitod.bleu(candidates, references) == pytest.approx(
        64.43132520717141, abs=1e-9
    )
    assert minitod.bleu(candidates, candidates) == pytest.approx(100.0)


def test_metric_helpers():
    gold = [[("train", "day", "monday")], [("train", "day", "tuesday")]]
    pred = [[("train", "day", "monday")], []]
    assert minitod.joint_goal_accuracy(pred, gold) == pytest.approx(0.5)
    assert minitod.combined_score(90.0, 80.0, 15.0) == pytest.approx(100.0)


def test_db_query_matches_constraints(world):
    rows = minitod.db_query(
        str(world / "db.json"), str(world / "ontology.json"), [], "train"
    )
    assert rows
    probe = rows[0]
    constrained = minitod.db_query(
        str(world / "db.json"),
        str(world / "ontology.json"),
        [
            ("train", "destination", probe["destination"]),
            ("train", "day", probe["day"]),
        ],
        "train",
    )
    assert constrained
    for row in constrained:
        assert row["destination"] == probe["destination"]
        assert row["day"] == probe["day"]


def test_model_memorizes_a_tiny_sequence():
    texts = ["a b c d e", "a b c d e"]
    vocab = minitod.Vocab.build(texts, minitod.segment_specials())
    cfg = minitod.ModelConfig()
    cfg.layers = 1
    cfg.heads = 2
    cfg.dim = 32
    cfg.ff = 64
    cfg.max_len = 16
    cfg.vocab_size = vocab.size()

    model = minitod.Model.random_init(cfg, 7)
    ids = vocab.encode(texts[0])
    losses = model.train([ids] * 4, steps=150, batch=4, lr=3e-3, seed=7)
    assert losses[-1] < 0.05

    out = model.greedy_decode(ids[:2], [], 3)
    assert vocab.decode(ids[:2] + out) == texts[0]
