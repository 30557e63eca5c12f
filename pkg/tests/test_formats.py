import json
from pathlib import Path

import numpy as np
import pytest

from axemu import (
    FormatError,
    Layout,
    RunReport,
    Signedness,
    Tensor4,
    error_stats,
    exact_lut,
    load_cifar10,
    load_lut,
    load_model,
    load_report,
    load_tensor,
    report_csv,
    run,
    save_cifar10,
    save_lut,
    save_model,
    save_report,
    save_tensor,
    synthetic_cifar10,
    transform,
    truncated_lut,
)
from cases import resnet8_style_graph, single_conv_graph

GOLDEN = Path(__file__).resolve().parent / "golden"


class TestLutFiles:
    def test_round_trip_byte_identical(self, tmp_path):
        lut = truncated_lut(Signedness.SIGNED, 3)
        p1, p2 = tmp_path / "a.axm", tmp_path / "b.axm"
        save_lut(lut, p1)
        again = load_lut(p1)
        save_lut(again, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert again.mode is lut.mode
        np.testing.assert_array_equal(again.entries, lut.entries)

    def test_headered_size(self, tmp_path):
        path = tmp_path / "exact.axm"
        save_lut(exact_lut(Signedness.UNSIGNED), path)
        assert path.stat().st_size == 131_088

    def test_raw_import(self, tmp_path):
        lut = exact_lut(Signedness.SIGNED)
        raw = tmp_path / "table.bin"
        raw.write_bytes(lut.raw.astype("<u2").tobytes())
        assert raw.stat().st_size == 131_072
        again = load_lut(raw, mode=Signedness.SIGNED, raw=True)
        np.testing.assert_array_equal(again.entries, lut.entries)

    def test_raw_needs_mode(self, tmp_path):
        raw = tmp_path / "table.bin"
        raw.write_bytes(bytes(131_072))
        with pytest.raises(ValueError, match="mode"):
            load_lut(raw, raw=True)

    def test_wrong_size_names_byte_counts(self, tmp_path):
        path = tmp_path / "short.axm"
        path.write_bytes(bytes(100))
        with pytest.raises(FormatError, match="131088.*100"):
            load_lut(path)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.axm"
        path.write_bytes(b"NOPE" + bytes(131_084))
        with pytest.raises(FormatError, match="magic"):
            load_lut(path)

    def test_unknown_operand_order_rejected(self, tmp_path):
        path = tmp_path / "order.axm"
        path.write_bytes(b"AXM1\x00\x01" + bytes(10) + bytes(131_072))
        with pytest.raises(FormatError, match="operand-order"):
            load_lut(path)

    def test_mode_mismatch_rejected(self, tmp_path):
        path = tmp_path / "u.axm"
        save_lut(exact_lut(Signedness.UNSIGNED), path)
        with pytest.raises(FormatError, match="unsigned"):
            load_lut(path, mode=Signedness.SIGNED)

    def test_golden_file_byte_compare(self, tmp_path):
        golden = GOLDEN / "exact_unsigned.axm"
        path = tmp_path / "fresh.axm"
        save_lut(exact_lut(Signedness.UNSIGNED), path)
        assert path.read_bytes() == golden.read_bytes()
        stats = error_stats(load_lut(golden))
        assert stats.error_count == 0


class TestTensorFiles:
    def test_round_trip(self, tmp_path, rng):
        t = Tensor4(rng.normal(size=(2, 3, 4, 5)).astype(np.float32), Layout.HWCN)
        path = tmp_path / "t.axt"
        save_tensor(t, path)
        again = load_tensor(path)
        assert again.layout is Layout.HWCN
        np.testing.assert_array_equal(again.data, t.data)

    def test_exact_byte_layout(self, tmp_path):
        t = Tensor4(np.array([1.5, -2.0], np.float32).reshape(1, 2, 1, 1))
        path = tmp_path / "t.axt"
        save_tensor(t, path)
        expected = (
            b"AXT1" + bytes([0]) + bytes(3)
            + np.array([1, 2, 1, 1], "<u4").tobytes()
            + np.array([1.5, -2.0], "<f4").tobytes()
        )
        assert path.read_bytes() == expected
        assert path.stat().st_size == 24 + 8

    def test_golden_file_byte_compare(self):
        t = load_tensor(GOLDEN / "unit.axt")
        assert t.layout is Layout.NHWC
        np.testing.assert_array_equal(
            t.data.ravel(), np.array([0.0, 0.5, -1.25, 3.0], np.float32)
        )

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "t.axt"
        save_tensor(Tensor4(np.zeros((1, 2, 2, 1), np.float32)), path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(FormatError, match="bytes"):
            load_tensor(path)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "t.axt"
        path.write_bytes(b"XXXX" + bytes(24))
        with pytest.raises(FormatError, match="magic"):
            load_tensor(path)


class TestCifar10:
    def test_single_zero_record(self, tmp_path):
        path = tmp_path / "one.bin"
        path.write_bytes(bytes(3073))
        batch = load_cifar10(path)
        assert batch.images.shape == (1, 32, 32, 3)
        assert batch.labels.tolist() == [0]
        assert np.array_equal(batch.images.data, np.zeros((1, 32, 32, 3)))

    def test_two_records(self, tmp_path):
        path = tmp_path / "two.bin"
        path.write_bytes(bytes(3073 * 2))
        assert load_cifar10(path).images.shape == (2, 32, 32, 3)

    def test_record_offset_arithmetic(self, tmp_path):
        # R plane starts at offset 1; G at 1+1024; B at 1+2048
        rec = bytearray(3073)
        rec[0] = 7  # label
        rec[1] = 200  # R at pixel (0, 0)
        rec[1 + 1024] = 100  # G at pixel (0, 0)
        rec[1 + 2048] = 50  # B at pixel (0, 0)
        rec[1 + 32] = 10  # R at pixel (1, 0): row-major within the plane
        path = tmp_path / "r.bin"
        path.write_bytes(bytes(rec))
        batch = load_cifar10(path)
        assert batch.labels[0] == 7
        img = batch.images.data[0]
        assert img[0, 0, 0] == pytest.approx(200 / 255)
        assert img[0, 0, 1] == pytest.approx(100 / 255)
        assert img[0, 0, 2] == pytest.approx(50 / 255)
        assert img[1, 0, 0] == pytest.approx(10 / 255)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(bytes(3073 + 100))
        with pytest.raises(FormatError, match="3073"):
            load_cifar10(path)

    def test_label_out_of_range_rejected(self, tmp_path):
        rec = bytearray(3073)
        rec[0] = 11
        path = tmp_path / "bad.bin"
        path.write_bytes(bytes(rec))
        with pytest.raises(FormatError, match="label"):
            load_cifar10(path)

    def test_synthetic_write_read_round_trip(self, tmp_path):
        images, labels = synthetic_cifar10(16, seed=3)
        path = tmp_path / "synth.bin"
        save_cifar10(path, images, labels)
        batch = load_cifar10(path)
        np.testing.assert_array_equal(batch.labels, labels)
        np.testing.assert_array_equal(batch.images.data, images)


class TestReports:
    def test_empty_round_trips(self, tmp_path):
        path = tmp_path / "r.json"
        save_report(RunReport(), path)
        assert load_report(path) == RunReport()

    def test_fields_preserved_and_total_printed(self, tmp_path):
        r = RunReport(t_init=0.3, t_comp=15.5, phase_seconds={"init": 0.3},
                      mac_count=21_000_000, per_layer={"conv1": 1.25})
        path = tmp_path / "r.json"
        save_report(r, path)
        doc = json.loads(path.read_text())
        assert doc["total"] == pytest.approx(15.8)
        assert load_report(path) == r

    def test_random_full_precision_round_trip(self, tmp_path, rng):
        r = RunReport(
            t_init=float(rng.uniform(0, 10)),
            t_comp=float(rng.uniform(0, 1000)),
            phase_seconds={n: float(rng.uniform(0, 9)) for n in "abcd"},
            mac_count=int(rng.integers(0, 10**12)),
            per_layer={f"l{i}": float(rng.uniform(0, 2)) for i in range(5)},
        )
        path = tmp_path / "r.json"
        save_report(r, path)
        assert load_report(path) == r

    def test_percentages_partition_total(self):
        from axemu import make_report

        r = make_report(t_init=1.0, t_comp=3.0, lut_s=1.2, quant_s=0.3,
                        mac_count=5, per_layer={})
        pct = r.phase_percentages()
        assert sum(pct.values()) == pytest.approx(100.0, abs=0.5)

    def test_csv_export(self):
        from axemu import make_report

        r = make_report(0.5, 2.0, 0.7, 0.2, 42, {"conv": 1.9})
        text = report_csv(r)
        lines = text.strip().splitlines()
        assert lines[0] == "name,seconds,percent"
        assert any(line.startswith("lut_lookup,0.7,") for line in lines)
        assert any(line.startswith("mac_count,42") for line in lines)
        assert any(line.startswith("layer:conv,") for line in lines)

    def test_malformed_document_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FormatError, match="malformed"):
            load_report(path)
        path.write_text('{"t_init": 1}')
        with pytest.raises(FormatError, match="missing"):
            load_report(path)


class TestModelFiles:
    def test_float_model_round_trip(self, tmp_path, rng):
        g = resnet8_style_graph()
        path = tmp_path / "model.json"
        save_model(g, path)
        again = load_model(path)
        batch = Tensor4(rng.uniform(0, 1, (2, 16, 16, 3)).astype(np.float32))
        a = run(g, batch)
        b = run(again, batch)
        assert np.array_equal(a.data.view(np.uint32), b.data.view(np.uint32))

    def test_transformed_model_round_trip_with_lut_sidecar(self, tmp_path, rng):
        g = single_conv_graph(bias=True)
        tg, _ = transform(g, truncated_lut(Signedness.SIGNED, 2))
        path = tmp_path / "ax.json"
        save_model(tg, path)
        assert (tmp_path / "ax.axm").exists()
        again = load_model(path)
        batch = Tensor4(rng.uniform(-1, 1, (2, 8, 8, 3)).astype(np.float32))
        a = run(tg, batch)
        b = run(again, batch)
        assert np.array_equal(a.data.view(np.uint32), b.data.view(np.uint32))

    def test_weights_sidecar_is_float32_le(self, tmp_path):
        g = single_conv_graph()
        path = tmp_path / "m.json"
        save_model(g, path)
        blob = (tmp_path / "m.weights.bin").read_bytes()
        filters = g.nodes[1].attrs["filters"]
        assert blob == filters.astype("<f4").tobytes()

    def test_unknown_kind_rejected(self, tmp_path):
        g = single_conv_graph()
        path = tmp_path / "m.json"
        save_model(g, path)
        doc = json.loads(path.read_text())
        doc["nodes"][0]["kind"] = "BatchNorm"
        path.write_text(json.dumps(doc))
        with pytest.raises(FormatError, match="BatchNorm"):
            load_model(path)

    def test_not_a_model_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(FormatError, match="not a model"):
            load_model(path)
