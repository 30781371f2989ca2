import logging
import math

import pytest
from pydantic import ValidationError

from errors import UsageError
from machine_config import DEFAULT_RUN_CONF, MachineConfig, RunConfigStore, merge_config


def test_off_resonance_ratio_and_warning():
    config = MachineConfig(rabi_1=1.0, rabi_2=2.0, half_detuning=50.0)
    assert config.off_resonance_ratio == pytest.approx(0.02)
    assert not config.off_resonance_warning
    assert config.with_ratio(3.0).off_resonance_warning


def test_entangler_duration_and_resonances():
    config = MachineConfig(rabi_1=2.0, rabi_2=1.0, half_detuning=10.0, sigma_z_sign=-1)
    assert config.entangler_duration(1) == pytest.approx(math.pi / math.sqrt(2))
    assert config.resonance_detuning(1) == 10.0
    assert config.resonance_detuning(2) == -10.0
    with pytest.raises(UsageError):
        config.resonance_detuning(3)
    with pytest.raises(UsageError):
        config.rabi(0)


def test_machine_config_is_strict():
    with pytest.raises(ValidationError):
        MachineConfig(rabi_1=1.0, rabi_2=1.0, half_detuning=10.0, sigma_z_sign=2)
    with pytest.raises(ValidationError):
        MachineConfig(rabi_1=1.0, rabi_2=1.0, half_detuning=10.0, detuning=3)


def test_merge_config_is_deep_and_leaves_inputs():
    merged = merge_config(DEFAULT_RUN_CONF, {"machine": {"n_max": 4}})
    assert merged["machine"]["n_max"] == 4
    assert merged["machine"]["rabi_1"] == DEFAULT_RUN_CONF["machine"]["rabi_1"]
    assert DEFAULT_RUN_CONF["machine"]["n_max"] == 3


def test_store_reads_overrides_from_the_environment(monkeypatch):
    monkeypatch.setenv("CAVITY_CONF", '{"optimization": {"restarts": 8}}')
    store = RunConfigStore()
    assert store.section("optimization")["restarts"] == 8
    assert store.section("optimization")["step_count"] == 72


def test_store_falls_back_on_bad_json(monkeypatch, caplog):
    monkeypatch.setenv("CAVITY_CONF", "{not json")
    with caplog.at_level(logging.WARNING):
        store = RunConfigStore()
    assert store.config == DEFAULT_RUN_CONF
    assert "Invalid CAVITY_CONF" in caplog.text


def test_store_warns_when_close_to_resonance(monkeypatch, caplog):
    monkeypatch.delenv("CAVITY_CONF", raising=False)
    store = RunConfigStore()
    with caplog.at_level(logging.WARNING):
        config = store.machine({"half_detuning": 2.0e8})
    assert config.off_resonance_warning
    assert "Off-resonance" in caplog.text
