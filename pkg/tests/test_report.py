import json

from vmbwaves.ui.report import checks_table, key_value_table, rows_table, write_csv, write_json


def test_csv_is_stamped(tmp_path):
    path = write_csv(tmp_path / "out" / "rows.csv", [{"xi": 0.5, "value": 1 - 2j}], "abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=1 config=abc"
    assert lines[1] == "xi,value"
    assert lines[2] == "0.5,1-2j"


def test_json_is_stamped(tmp_path):
    path = write_json(tmp_path / "doc.json", {"value": 1j, "labels": (1, 2)}, "abc")
    document = json.loads(path.read_text())
    assert document["schema"] == "1"
    assert document["config_hash"] == "abc"
    assert document["value"] == {"re": 0.0, "im": 1.0}
    assert document["labels"] == [1, 2]


def test_tables():
    assert key_value_table("t", {"a": 1.0, "b": 2}).row_count == 2
    table = rows_table("t", [{"x": float(i)} for i in range(30)], limit=10)
    assert table.row_count == 10
    assert table.caption == "20 more rows in the CSV artifact"
    checks = checks_table([{"name": "gap", "measured": 0.3, "target": "> 0", "passed": True}])
    assert checks.row_count == 1
