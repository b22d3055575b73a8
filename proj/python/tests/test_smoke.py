import numpy as np
import pytest

import subguard as sg


def test_jump_relu_is_strict():
    assert sg.jump_relu(6.0, 5.0) == 6.0
    assert sg.jump_relu(5.0, 5.0) == 0.0


def test_encode_decode_shapes():
    m = sg.init_model(8, 32, 0.1, 0)
    z = sg.encode(m, np.ones(8))
    assert z.shape == (32,)
    assert sg.decode(m, z).shape == (8,)
    with pytest.raises(sg.DomainError):
        sg.encode(m, np.ones(7))


def test_python_written_dump_loads_in_core(tmp_path):
    rng = np.random.default_rng(0)
    recs = [("COPYRIGHTED", rng.normal(size=(3, 4))), ("GENERAL", rng.normal(size=(2, 4)))]
    path = sg.write_dump(tmp_path / "x.scpa", 4, recs, {"model": "tiny", "layer": "1"})
    ds = sg.load_dump(path)
    assert ds.d == 4
    assert ds.count(sg.CorpusLabel.COPYRIGHTED) == 1
    assert ds.metadata == {"layer": "1", "model": "tiny"}
    np.testing.assert_array_equal(ds.records[0].vectors, recs[0][1].astype(np.float32))
    # The core writer produces the same bytes.
    assert sg.encode_dump(ds) == path.read_bytes()


def test_damaged_dump_is_rejected(tmp_path):
    data = bytearray(sg.dump.encode(2, [("GENERAL", np.zeros((1, 2)))]))
    with pytest.raises(sg.CorruptionError):
        sg.decode_dump(bytes(data[:-1]))
    data[0:4] = b"NOPE"
    with pytest.raises(sg.FormatError):
        sg.decode_dump(bytes(data))


def test_planted_pipeline_recovers_planted_dims():
    cfg = sg.PlantedConfig()
    cfg.d, cfg.k, cfg.planted = 16, 64, [0, 16, 32, 48]
    data = sg.generate_planted(cfg, 60, 60)
    tc = sg.TrainConfig()
    tc.epochs = 40
    sae = sg.train(data.dataset, 64, 5.0, tc)
    report = sg.score_report(sg.pool_codes(sae, data.dataset))
    spec = sg.select_top_n(report, 4, sae.tau)
    assert len(spec.indices()) == 4
    assert sg.planted_recall(sae.decoder_weight, [int(i) for i in spec.indices()], data.dictionary, data.ground_truth) >= 0.75


def test_passthrough_hook_is_identity():
    m = sg.init_model(6, 12, 0.1, 1)
    report = sg.score_report([sg.PooledVector(sg.CorpusLabel.COPYRIGHTED, np.arange(12.0)),
                              sg.PooledVector(sg.CorpusLabel.GENERAL, np.zeros(12))])
    spec = sg.select_top_n(report, 3, 0.1)
    h = np.linspace(-1, 1, 6)
    np.testing.assert_array_equal(sg.apply_hook(m, h, sg.InterventionMode.PASSTHROUGH, spec), h)


def test_metrics_and_win_rate():
    assert sg.levenshtein_similarity("kitten", "sitting") == pytest.approx(1 - 3 / 7)
    assert sg.minhash_similarity("a b c d", "a b c d") == 1.0
    rates = sg.win_rates([("vanilla", "p0", "the sea", "the sea"), ("clamp", "p0", "a rock", "the sea")])
    assert rates == {"vanilla": 0.0, "clamp": 1.0}
