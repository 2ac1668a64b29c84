import json

import numpy as np
import pytest

from trajnet.errors import DatasetFormatError, ShapeError
from trajnet.losses import EVENT_CLASSES
from trajnet.records import (
    COURT_BOUNDS, RINK_BOUNDS, CoordinateBounds, Dataset, DatasetHeader, PossessionSample, TrajectorySample,
    dumps_dataset, load_dataset, loads_dataset, save_dataset,
)

EVENT_HEADER = DatasetHeader("event", 2, 16, RINK_BOUNDS, EVENT_CLASSES)


def _event(rng, label=0, key=0):
    xy = rng.uniform(-90, 90, size=(2, 2, 16))
    mask = np.ones((2, 16), dtype=bool)
    mask[1, :4] = False
    xy[1, :, :4] = 0.0
    return TrajectorySample(xy, mask, label, key=key, game_id="g03", center_frame=140)


def _header_line(**overrides) -> str:
    return json.dumps({**EVENT_HEADER.to_dict(), **overrides})


def test_bounds_normalize():
    xy = np.array([[0.0, 94.0, 47.0], [0.0, 50.0, 25.0]])
    out = COURT_BOUNDS.normalize(xy, np.array([True, True, False]))
    assert out.tolist() == [[-1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]]
    with pytest.raises(ShapeError):
        CoordinateBounds(1.0, 1.0, 0.0, 1.0)


def test_sample_validation():
    with pytest.raises(ShapeError, match="absent frames"):
        TrajectorySample(np.ones((1, 2, 3)), np.zeros((1, 3), dtype=bool), 0)
    with pytest.raises(ShapeError):
        TrajectorySample(np.zeros((1, 2, 3)), np.zeros((1, 4), dtype=bool), 0)
    with pytest.raises(ShapeError):
        TrajectorySample(np.zeros((2, 2, 3)), np.zeros((2, 3), dtype=bool), 0, key=2)
    with pytest.raises(ShapeError):
        PossessionSample(np.zeros((2, 4)), np.zeros(3, dtype=bool), np.zeros((1, 2, 4)),
                         np.zeros((1, 4), dtype=bool), 0)


def test_save_load_is_bit_exact(tmp_path, rng):
    samples = [_event(rng, label=i % 6, key=None if i == 2 else 0) for i in range(5)]
    path = tmp_path / "events.jsonl"
    save_dataset(Dataset(EVENT_HEADER, samples), path)
    loaded = load_dataset(path)
    assert loaded.header == EVENT_HEADER
    for a, b in zip(samples, loaded.samples):
        assert np.array_equal(a.xy, b.xy) and np.array_equal(a.mask, b.mask)
        assert (a.label, a.key, a.game_id, a.center_frame) == (b.label, b.key, b.game_id, b.center_frame)


def test_team_records(rng):
    header = DatasetHeader("team", 1, 4, COURT_BOUNDS, ("team_00", "team_01"))
    sample = PossessionSample(rng.uniform(0, 50, (2, 4)), np.ones(4, dtype=bool), rng.uniform(0, 50, (1, 2, 4)),
                              np.ones((1, 4), dtype=bool), 1, game_id="r000g01", possession_index=7)
    text = dumps_dataset(Dataset(header, [sample]))
    assert json.loads(text.splitlines()[1])["label"] == "team_01"
    back = loads_dataset(text).samples[0]
    assert np.array_equal(back.players_xy, sample.players_xy)
    assert (back.label, back.possession_index) == (1, 7)


def test_empty_dataset_is_valid():
    dataset = loads_dataset(_header_line() + "\n")
    assert len(dataset) == 0 and dataset.header.t == 16


def test_wrong_length_record_names_line(rng):
    good = json.loads(dumps_dataset(Dataset(EVENT_HEADER, [_event(rng)])).splitlines()[1])
    bad = json.loads(json.dumps(good))
    for person in bad["persons"]:
        for k in ("x", "y", "mask"):
            person[k] = person[k] + [0]
    text = "\n".join([_header_line(), json.dumps(good), json.dumps(bad)])
    with pytest.raises(DatasetFormatError) as info:
        loads_dataset(text)
    assert info.value.line == 3
    assert str(info.value).startswith("line 3:")


@pytest.mark.parametrize("header, line", [
    ("", 1),
    ("not json", 1),
    (_header_line(task="tracking"), 1),
    (_header_line(format_version=2), 1),
])
def test_bad_headers(header, line):
    with pytest.raises(DatasetFormatError) as info:
        loads_dataset(header)
    assert info.value.line == line


def test_unknown_label_is_rejected(rng):
    rec = json.loads(dumps_dataset(Dataset(EVENT_HEADER, [_event(rng)])).splitlines()[1])
    rec["label"] = "faceoff"
    with pytest.raises(DatasetFormatError) as info:
        loads_dataset(_header_line() + "\n" + json.dumps(rec))
    assert info.value.line == 2


def test_dataset_helpers(rng):
    dataset = Dataset(EVENT_HEADER, [_event(rng, label=i) for i in range(4)])
    assert dataset.labels.tolist() == [0, 1, 2, 3]
    assert dataset.subset([3, 1]).labels.tolist() == [3, 1]
    assert dataset.game_ids() == ["g03"] * 4
