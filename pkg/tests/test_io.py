import json
import logging

import numpy as np
import pytest

from bridgepoint.io import (
    MANIFEST,
    ParseError,
    default_anchors,
    ingest,
    read_draws,
    read_manifest,
    write_draws,
    write_table,
    write_votes,
)
from bridgepoint.model import DataError, PriorConfig, Vote
from bridgepoint.runner import run
from helpers import random_data


def _write(tmp_path, votes_text, motions_text):
    v, m = tmp_path / "votes.csv", tmp_path / "motions.csv"
    v.write_text(votes_text)
    m.write_text(motions_text)
    return v, m


TOY_VOTES = (
    "legislator_id,legislator_name,party,m1,m2\n"
    "a,Ann,D,1,0\n"
    "b,Bob,R,0,1\n"
    "c,Cy,D,1,NA\n"
)
TOY_MOTIONS = "motion_id,group\nm1,0\nm2,1\n"


class TestIngest:
    def test_toy_file(self, tmp_path):
        data, report = ingest(*_write(tmp_path, TOY_VOTES, TOY_MOTIONS), anchors=("a", "b"))
        assert data.votes.tolist() == [[1, 0], [0, 1], [1, Vote.MISSING]]
        assert data.group.tolist() == [0, 1]
        assert data.legislator_ids == ["a", "b", "c"]
        assert (data.anchor_neg, data.anchor_pos) == (0, 1)
        assert data.legislators[2].party == "D"
        assert report.n_missing == 1
        assert report.missing_rate == 1 / 6
        assert "(16.67%)" in str(report)

    def test_round_trip(self, tmp_path):
        data, _ = ingest(*_write(tmp_path, TOY_VOTES, TOY_MOTIONS), anchors=("a", "b"))
        v2, m2 = tmp_path / "v2.csv", tmp_path / "m2.csv"
        write_votes(data, v2, m2)
        again, _ = ingest(v2, m2, anchors=("a", "b"))
        assert np.array_equal(again.votes, data.votes)
        assert np.array_equal(again.group, data.group)
        assert again.legislators == data.legislators
        assert again.motion_ids == data.motion_ids
        assert v2.read_text() == TOY_VOTES

    def test_reported_missing_share(self, tmp_path):
        rng = np.random.default_rng(0)
        data = random_data(rng, 100, 633)
        cells = rng.choice(100 * 633, 1633, replace=False)
        data.votes.flat[cells] = Vote.MISSING
        v, m = tmp_path / "v.csv", tmp_path / "m.csv"
        write_votes(data, v, m)
        _, report = ingest(v, m, anchors=(0, 1))
        assert report.n_missing == 1633
        assert "missing votes: 1633 (2.58%)" in str(report)

    def test_unknown_token(self, tmp_path):
        bad = TOY_VOTES.replace("0,1\n", "0,Y\n")
        with pytest.raises(ParseError) as err:
            ingest(*_write(tmp_path, bad, TOY_MOTIONS))
        assert (err.value.line, err.value.column) == (3, 5)
        assert "votes.csv:3:5" in str(err.value)

    def test_ragged_row(self, tmp_path):
        bad = TOY_VOTES.replace("a,Ann,D,1,0", "a,Ann,D,1")
        with pytest.raises(ParseError) as err:
            ingest(*_write(tmp_path, bad, TOY_MOTIONS))
        assert err.value.line == 2

    def test_bad_headers(self, tmp_path):
        with pytest.raises(ParseError):
            ingest(*_write(tmp_path, TOY_VOTES.replace("party", "faction"), TOY_MOTIONS))
        with pytest.raises(ParseError):
            ingest(*_write(tmp_path, TOY_VOTES, "id,group\nm1,0\nm2,1\n"))
        with pytest.raises(ParseError) as err:
            ingest(*_write(tmp_path, TOY_VOTES, "motion_id,group\nm1,0\nm2,3\n"))
        assert (err.value.line, err.value.column) == (3, 2)

    def test_dimension_mismatch(self, tmp_path):
        with pytest.raises(DataError, match="dimension mismatch"):
            ingest(*_write(tmp_path, TOY_VOTES, TOY_MOTIONS + "m3,1\n"))
        with pytest.raises(DataError, match="does not match"):
            ingest(*_write(tmp_path, TOY_VOTES, "motion_id,group\nm1,0\nmX,1\n"))

    def test_unknown_anchor(self, tmp_path):
        with pytest.raises(DataError):
            ingest(*_write(tmp_path, TOY_VOTES, TOY_MOTIONS), anchors=("a", "zz"))

    def test_drops_empty_rows_and_columns(self, tmp_path, caplog):
        text = (
            "legislator_id,legislator_name,party,m1,m2,m3\n"
            "a,Ann,D,1,0,NA\n"
            "b,Bob,R,0,1,NA\n"
            "c,Cy,D,NA,NA,NA\n"
            "d,Di,R,1,1,NA\n"
        )
        with caplog.at_level(logging.WARNING):
            data, report = ingest(*_write(tmp_path, text, "motion_id,group\nm1,0\nm2,1\nm3,1\n"), anchors=("a", "b"))
        assert data.votes.shape == (3, 2)
        assert report.dropped_legislators == ["c"] and report.dropped_motions == ["m3"]
        assert "dropping" in caplog.text
        assert "dropped all-missing legislators: c" in str(report)

    def test_default_anchors_are_opposite_extremes(self):
        votes = np.array([[1, 1, 1, 0], [1, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]])
        neg, pos = default_anchors(votes)
        assert {neg, pos} == {0, 3}
        with pytest.raises(DataError):
            default_anchors(np.ones((3, 3), dtype=int))


@pytest.fixture(scope="module")
def draws():
    data = random_data(np.random.default_rng(1), 5, 6)
    return run(data, PriorConfig(), n_chains=2, n_iter=30, burn_in=20, thin=2, seed=3)


class TestDraws:
    def test_round_trip(self, draws, tmp_path):
        write_draws(draws, tmp_path / "d", metadata={"anchors": ["L0", "L1"]})
        back = read_draws(tmp_path / "d")
        for name in ("mu", "alpha", "beta0", "beta1", "zeta", "hypers"):
            assert np.array_equal(getattr(back, name), getattr(draws, name))
        assert back.settings == draws.settings and back.config == draws.config
        assert back.config_fingerprint() == draws.config_fingerprint()
        manifest = read_manifest(tmp_path / "d")
        assert manifest["metadata"] == {"anchors": ["L0", "L1"]}
        assert manifest["n_kept"] == 5 and manifest["stream_ids"] == [0, 1]

    def test_byte_identical(self, draws, tmp_path):
        write_draws(draws, tmp_path / "a")
        write_draws(draws, tmp_path / "b")
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_header_uses_ids(self, draws, tmp_path):
        write_draws(draws, tmp_path / "d")
        header = (tmp_path / "d" / "beta0.csv").read_text().splitlines()[0]
        assert header == "chain,draw," + ",".join(draws.legislator_ids)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_draws(tmp_path)

    def test_tampered_manifest(self, draws, tmp_path):
        write_draws(draws, tmp_path / "d")
        path = tmp_path / "d" / MANIFEST
        m = json.loads(path.read_text())
        m["run"]["seed"] = 99
        path.write_text(json.dumps(m))
        with pytest.raises(DataError):
            read_draws(tmp_path / "d")


def test_write_table(tmp_path):
    write_table([{"a": 0.1, "b": "x", "c": 2}, {"a": np.float64(1 / 3), "b": "y", "c": 3}], tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == "a,b,c\n0.1,x,2\n0.3333333333333333,y,3\n"
    with pytest.raises(ValueError):
        write_table([], tmp_path / "u.csv")
