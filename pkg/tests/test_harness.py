"""Monte Carlo engine, result files, raw IQ I/O and the command line."""

import json

import numpy as np
import pytest

from csslink.filters import design_rc
from csslink.iqio import read_iq, read_sidecar, sidecar_path, write_iq
from csslink.cli import main
from csslink.modem import IqBuffer, ModemConfig, SampleRate
from csslink.sim import (
    ExperimentSpec,
    emit_results,
    parse_csv,
    run_experiment,
)
from csslink.txrx import random_burst, transmit

CFG7 = ModemConfig(sf=7, data_symbols=32)


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            ExperimentSpec(kind="ber_psychic", cfg=CFG7, ebn0_grid_db=(0.0,), trials=1)

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="grid"):
            ExperimentSpec(kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(), trials=1)

    def test_bad_trials_and_budget(self):
        with pytest.raises(ValueError, match="trials"):
            ExperimentSpec(kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(0.0,), trials=0)
        with pytest.raises(ValueError, match="budget"):
            ExperimentSpec(
                kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(0.0,), trials=1, error_budget=0
            )

    def test_bad_ideal_mode(self):
        with pytest.raises(ValueError, match="ideal_mode"):
            ExperimentSpec(
                kind="ber_ideal", cfg=CFG7, ebn0_grid_db=(0.0,), trials=1, ideal_mode="psychic"
            )

    def test_pskcss_requires_psk_config(self):
        with pytest.raises(ValueError, match="psk_order"):
            ExperimentSpec(kind="ber_pskcss", cfg=CFG7, ebn0_grid_db=(0.0,), trials=1)

    def test_grid_coerced_to_floats(self):
        spec = ExperimentSpec(kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(1, 2), trials=1)
        assert spec.ebn0_grid_db == (1.0, 2.0)
        assert all(isinstance(e, float) for e in spec.ebn0_grid_db)


class TestBerPoints:
    def test_noiseless_channel_is_error_free(self):
        spec = ExperimentSpec(
            kind="ber_noncoherent",
            cfg=CFG7,
            ebn0_grid_db=(0.0, 4.0),
            trials=2,
            noiseless=True,
        )
        res = run_experiment(spec)
        assert len(res.ber_points) == 2
        for p in res.ber_points:
            assert p.bit_errors == 0
            assert p.ber == 0.0
            assert p.bursts == 2
            assert p.bits == 2 * CFG7.bits_per_burst
            assert p.snr_db == float("inf")

    def test_error_budget_stops_early(self):
        spec = ExperimentSpec(
            kind="ber_noncoherent",
            cfg=CFG7,
            ebn0_grid_db=(-5.0,),
            trials=50,
            error_budget=100,
        )
        point = run_experiment(spec).ber_points[0]
        assert point.bursts < spec.trials
        assert point.bit_errors >= spec.error_budget
        assert point.bits == point.bursts * CFG7.bits_per_burst
        assert point.ber == point.bit_errors / point.bits

    def test_budget_meets_confidence_target(self):
        """Stopping at >= 100 errors caps the binomial 95% CI half-width
        below 20% of the estimate (1.96/sqrt(n) at small error rates)."""
        spec = ExperimentSpec(
            kind="ber_noncoherent",
            cfg=CFG7,
            ebn0_grid_db=(-2.0,),
            trials=100,
            error_budget=100,
        )
        point = run_experiment(spec).ber_points[0]
        assert point.bit_errors >= 100
        half_width = 1.96 * np.sqrt(point.bit_errors) / point.bits
        assert half_width / point.ber < 0.20
        # the default budget leaves margin on top of that
        assert 1.96 / np.sqrt(200) < 0.14

    def test_reruns_are_byte_identical(self, tmp_path):
        spec = ExperimentSpec(
            kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(-2.0,), trials=3, error_budget=500
        )
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_results(run_experiment(spec), str(a))
        emit_results(run_experiment(spec), str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_master_seed_changes_the_draw(self):
        base = dict(kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(-2.0,), trials=3)
        r0 = run_experiment(ExperimentSpec(master_seed=0, **base))
        r1 = run_experiment(ExperimentSpec(master_seed=1, **base))
        assert r0.ber_points[0].bit_errors != r1.ber_points[0].bit_errors


class TestMsePoints:
    def test_curve_shape_and_bookkeeping(self):
        cfg = ModemConfig(sf=7, data_symbols=16)
        spec = ExperimentSpec(kind="timing_mse", cfg=cfg, ebn0_grid_db=(20.0,), trials=3)
        res = run_experiment(spec)
        curve = res.mse_curves[0]
        assert curve.mse_ui2.shape == (cfg.data_symbols,)
        assert curve.bursts == 3
        assert curve.excluded == 0
        assert np.all(curve.mse_ui2 >= 0)
        # timing error shrinks as the loop averages
        assert curve.mse_ui2[-1] < curve.mse_ui2[0]

    def test_hopeless_snr_raises(self):
        """If every burst fails acquisition there is no curve to report.

        At Eb/N0 = -30 dB even the pooled preamble spectra are pure
        noise, so the coarse estimates land far outside the plausible
        window and the receiver reports sync_ok False on every burst.
        """
        cfg = ModemConfig(sf=7, data_symbols=16)
        spec = ExperimentSpec(kind="timing_mse", cfg=cfg, ebn0_grid_db=(-30.0,), trials=3)
        with pytest.raises(RuntimeError, match="failed acquisition"):
            run_experiment(spec)


class TestResultFiles:
    def _ber_result(self):
        spec = ExperimentSpec(
            kind="ber_noncoherent", cfg=CFG7, ebn0_grid_db=(-2.0, 0.0), trials=3, error_budget=500
        )
        return run_experiment(spec)

    def test_csv_reparse_is_exact(self, tmp_path):
        res = self._ber_result()
        path = tmp_path / "ber.csv"
        emit_results(res, str(path))
        header, rows = parse_csv(str(path))
        assert header == ["ebn0_db", "snr_db", "bursts", "bits", "bit_errors", "ber"]
        assert rows == res.rows()

    def test_mse_csv_layout(self, tmp_path):
        cfg = ModemConfig(sf=7, data_symbols=16)
        spec = ExperimentSpec(kind="phase_mse", cfg=cfg, ebn0_grid_db=(18.0, 20.0), trials=2)
        res = run_experiment(spec)
        path = tmp_path / "mse.csv"
        emit_results(res, str(path))
        header, rows = parse_csv(str(path))
        assert header == ["ebn0_db", "symbol_index", "mse_ui2", "mse_db"]
        assert len(rows) == 2 * cfg.data_symbols
        assert [r[1] for r in rows[: cfg.data_symbols]] == list(range(1, cfg.data_symbols + 1))
        ebn0, _, mse, mse_db = rows[0]
        assert ebn0 == 18.0
        assert mse_db == 10 * np.log10(mse)

    def test_json_structure(self, tmp_path):
        res = self._ber_result()
        path = tmp_path / "ber.json"
        emit_results(res, str(path), fmt="json")
        payload = json.loads(path.read_text())
        assert set(payload) == {"metadata", "columns", "rows"}
        assert payload["metadata"]["kind"] == "ber_noncoherent"
        assert payload["metadata"]["cfg"]["sf"] == 7
        assert payload["metadata"]["master_seed"] == 0
        assert payload["columns"][0] == "ebn0_db"
        assert len(payload["rows"]) == 2

    def test_rejects_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            emit_results(self._ber_result(), str(tmp_path / "x.dat"), fmt="pickle")

    def test_unwritable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            emit_results(self._ber_result(), str(tmp_path / "no_dir" / "x.csv"))


class TestIqFiles:
    CFG = ModemConfig(sf=7, data_symbols=8)

    def test_round_trip_is_value_exact_at_f32(self, tmp_path):
        rng = np.random.default_rng(3)
        iq = transmit(self.CFG, random_burst(self.CFG, rng))
        path = str(tmp_path / "burst.iq")
        write_iq(path, iq, self.CFG)
        back, meta = read_iq(path)
        assert back.rate is SampleRate.OVERSAMPLED_LX
        assert np.array_equal(back.samples.real, iq.samples.real.astype(np.float32))
        assert np.array_equal(back.samples.imag, iq.samples.imag.astype(np.float32))
        assert meta["sf"] == 7.0
        assert meta["oversample"] == 2.0
        assert meta["bandwidth_hz"] == 125e3
        assert meta["sample_rate_hz"] == 250e3

    def test_payload_is_interleaved_little_endian_f32(self, tmp_path):
        buf = IqBuffer(
            samples=np.array([1.0 + 2.0j, -3.0 + 0.5j]), rate=SampleRate.OVERSAMPLED_LX
        )
        path = str(tmp_path / "two.iq")
        write_iq(path, buf, self.CFG)
        raw = np.fromfile(path, dtype="<f4")
        np.testing.assert_array_equal(raw, np.array([1.0, 2.0, -3.0, 0.5], dtype="<f4"))

    def test_empty_buffer_round_trips(self, tmp_path):
        buf = IqBuffer(samples=np.zeros(0, complex), rate=SampleRate.OVERSAMPLED_LX)
        path = str(tmp_path / "empty.iq")
        write_iq(path, buf, self.CFG)
        assert (tmp_path / "empty.iq").stat().st_size == 0
        back, meta = read_iq(path)
        assert len(back) == 0
        assert meta["sf"] == 7.0

    def test_truncated_payload_rejected(self, tmp_path):
        path = str(tmp_path / "odd.iq")
        buf = IqBuffer(samples=np.array([1.0 + 1.0j]), rate=SampleRate.OVERSAMPLED_LX)
        write_iq(path, buf, self.CFG)
        np.array([1.0, 2.0, 3.0], dtype="<f4").tofile(path)
        with pytest.raises(ValueError, match="truncated"):
            read_iq(path)

    def test_missing_sidecar_rejected(self, tmp_path):
        path = str(tmp_path / "raw.iq")
        np.zeros(4, dtype="<f4").tofile(path)
        with pytest.raises(ValueError, match="sidecar"):
            read_iq(path)

    def test_malformed_sidecar_line(self, tmp_path):
        path = str(tmp_path / "bad.iq")
        np.zeros(4, dtype="<f4").tofile(path)
        with open(sidecar_path(path), "w") as f:
            f.write("sample_rate_hz 250000\n")
        with pytest.raises(ValueError, match="key=value"):
            read_sidecar(path)

    def test_sidecar_missing_key(self, tmp_path):
        path = str(tmp_path / "short.iq")
        np.zeros(4, dtype="<f4").tofile(path)
        with open(sidecar_path(path), "w") as f:
            f.write("sample_rate_hz=250000\nsf=7\n# comment\n\n")
        with pytest.raises(ValueError, match="missing keys"):
            read_sidecar(path)


class TestCli:
    def test_tx_rx_loopback(self, tmp_path, capsys):
        path = str(tmp_path / "b.iq")
        assert main(["tx", "--out", path, "--sf", "7", "--data-symbols", "32", "--seed", "5"]) == 0
        assert (
            main(
                ["rx", "--in", path, "--receiver", "noncoherent",
                 "--data-symbols", "32", "--ref-seed", "5"]
            )
            == 0
        )
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["sync_ok"] is True
        assert report["bit_errors"] == 0
        assert len(report["symbols"]) == 32

    def test_tx_with_channel_then_coherent_rx(self, tmp_path, capsys):
        path = str(tmp_path / "c.iq")
        args = ["tx", "--out", path, "--sf", "7", "--data-symbols", "32", "--seed", "8",
                "--tau", "0.3", "--eps", "-0.2", "--psi", "1.0"]
        assert main(args) == 0
        assert main(["rx", "--in", path, "--data-symbols", "32", "--ref-seed", "8"]) == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["receiver"] == "coherent"
        assert report["bit_errors"] == 0
        assert abs(report["coarse"]["tau_ui"] - 0.3) < 0.05

    def test_rx_reads_modem_from_sidecar(self, tmp_path, capsys):
        path = str(tmp_path / "d.iq")
        assert main(["tx", "--out", path, "--sf", "6", "--data-symbols", "256", "--seed", "1"]) == 0
        # no --sf on rx: it must come from the sidecar
        assert main(["rx", "--in", path, "--ref-seed", "1"]) == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["bit_errors"] == 0
        assert max(m for m, _ in report["symbols"]) < 64

    def test_sim_writes_csv(self, tmp_path, capsys):
        out = str(tmp_path / "r.csv")
        args = ["sim", "--experiment", "ber_noncoherent", "--ebn0", "0,2", "--trials", "2",
                "--noiseless", "--sf", "7", "--data-symbols", "16", "--out", out]
        assert main(args) == 0
        header, rows = parse_csv(out)
        assert header[0] == "ebn0_db"
        assert [r[0] for r in rows] == [0.0, 2.0]
        assert all(r[-1] == 0.0 for r in rows)

    def test_filters_dump_matches_design(self, tmp_path):
        out = str(tmp_path / "taps.csv")
        assert main(["filters", "--kind", "rc", "--rolloff", "0.25", "--out", out]) == 0
        header, rows = parse_csv(out)
        assert header == ["index", "tap"]
        ref = design_rc(0.25, 16, 2).taps
        assert len(rows) == len(ref)
        np.testing.assert_array_equal(np.array([t for _, t in rows]), ref)

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        conf = tmp_path / "link.conf"
        conf.write_text("# demo link\nsf=7\ndata_symbols=32\nseed=9\n")
        path = str(tmp_path / "e.iq")
        # --sf beats the file; data_symbols and seed come from the file
        assert main(["tx", "--config", str(conf), "--out", path, "--sf", "6"]) == 0
        meta = read_sidecar(path)
        assert meta["sf"] == 6.0
        capsys.readouterr()
        assert main(["rx", "--in", path, "--config", str(conf), "--sf", "6",
                     "--ref-seed", "9"]) == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["bit_errors"] == 0

    def test_errors_exit_nonzero(self, tmp_path, capsys):
        assert main(["sim", "--trials", "2"]) == 1  # no --ebn0
        assert main(["rx", "--in", str(tmp_path / "nope.iq")]) == 1
        err = capsys.readouterr().err
        assert "csslink:" in err
