#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pandas as pd
import pytest
import yaml

from app import cli


def write_config(path, log_dir, **sections):
    config = {
        'system': {'n_subcarriers': 61, 'n_pilots': 11},
        'simulation': {
            'snr_db_list': [20], 'n_trials': 1, 'max_outer_iters': 2,
            'outer_patience': 1, 'max_inner_iters': 5, 'receivers': ['oracle'],
            'bp_iterations_oracle': 2,
        },
        'logging': {'console_level': 'WARNING', 'log_dir': str(log_dir)},
    }
    for section, values in sections.items():
        config.setdefault(section, {}).update(values)
    path.write_text(yaml.safe_dump(config), encoding='utf-8')
    return str(path)


class TestUsage:
    def test_unknown_flag(self):
        assert cli(['sim', 'snr', '--bogus']) == 2

    def test_missing_command(self):
        assert cli([]) == 2

    def test_unknown_experiment(self):
        assert cli(['sim', 'bandwidth']) == 2


class TestInvalidConfig:
    def test_constraint_violation(self, tmp_path):
        config = write_config(tmp_path / 'bad.yaml', tmp_path, channel={'max_delay': 1e-5})
        assert cli(['sim', 'snr', '--config', config, '--out', str(tmp_path / 'r.csv')]) == 1
        assert not (tmp_path / 'r.csv').exists()

    def test_unknown_key(self, tmp_path):
        config = write_config(tmp_path / 'bad.yaml', tmp_path, simulation={'n_trails': 3})
        assert cli(['sim', 'snr', '--config', config]) == 1

    def test_missing_file(self, tmp_path):
        assert cli(['sim', 'snr', '--config', str(tmp_path / 'absent.yaml')]) == 1

    def test_unknown_receiver_flag(self, tmp_path):
        config = write_config(tmp_path / 'c.yaml', tmp_path)
        assert cli(['sim', 'snr', '--config', config, '--receiver', 'ls']) == 1


class TestSim:
    def test_snr_writes_results(self, tmp_path, capsys):
        config = write_config(tmp_path / 'c.yaml', tmp_path)
        out = tmp_path / 'out' / 'snr.csv'
        raw = tmp_path / 'raw.csv'
        code = cli(['sim', 'snr', '--config', config, '--out', str(out), '--raw', str(raw),
                    '--receiver', 'oracle', '--receiver', 'freq_lmmse', '--seed', '3'])
        assert code == 0
        assert str(out) in capsys.readouterr().out
        table = pd.read_csv(out)
        assert list(table.columns) == ['snr_db', 'receiver', 'ber', 'nmse', 'trials']
        assert set(table['receiver']) == {'oracle', 'freq_lmmse'}
        assert (table['trials'] == 1).all()
        assert 'bit_errors' in pd.read_csv(raw).columns

    def test_iters_with_trials_flag(self, tmp_path):
        config = write_config(tmp_path / 'c.yaml', tmp_path)
        out = tmp_path / 'iters.csv'
        assert cli(['sim', 'iters', '--config', config, '--trials', '2', '--out', str(out)]) == 0
        table = pd.read_csv(out)
        assert table['outer_iter'].tolist() == [1, 2]
        assert (table['trials'] == 2).all()


@pytest.mark.slow
class TestProbe:
    def test_eigen_vs_n(self, tmp_path):
        config = write_config(tmp_path / 'c.yaml', tmp_path)
        out = tmp_path / 'eig.csv'
        assert cli(['probe', 'eigen', '--config', config, '--trials', '1', '--out', str(out)]) == 0
        table = pd.read_csv(out)
        assert table['N'].tolist() == [100, 200, 400, 800]
