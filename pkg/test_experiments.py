import json
import math
import time

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.errors import IngestionError, ParameterError, ReportError
from src.models.experiment import REPORT_COLUMNS, CliConfig, ExperimentConfig, ReportRow
from src.models.inference import Sample
from src.services.blbquant import make_blb_config
from src.services.datasets import (
    ingest_regression_csv,
    read_value_column,
    synthesize_census_surrogate,
    write_census_surrogate,
)
from src.services.estimators import logistic_objective
from src.services.experiments import (
    build_scenario,
    emit_report,
    private_interval,
    reference_minimizer,
    run_coverage_study,
)
from src.services.gdp_core import solve_budget


def _row(**overrides):
    values = dict(scenario='truncated_normal_mean', method='m_out_of_n', n=1000, m=10, B=100, mu=0.5,
                  alpha=0.05, coord=0, coverage=0.894, avg_length=0.136, avg_time_sec=0.0042,
                  replications=500, seed=0)
    values.update(overrides)
    return ReportRow(**values)


# Ingestion

def test_ingest_scales_and_labels(tmp_path):
    path = tmp_path / 'census.csv'
    path.write_text("mrkinc,shelco\n0,0\n10,20\n5,10\n,3\n7,\n")
    sample = ingest_regression_csv(path)
    assert sample.size == 3
    np.testing.assert_allclose(sample.records * math.sqrt(2), [[1, 0], [1, 1], [1, 0.5]])
    # a scaled response of exactly 0.5 counts as a positive label
    np.testing.assert_array_equal(sample.labels, [-1, 1, 1])


def test_ingest_rejects_non_numeric_cells(tmp_path):
    path = tmp_path / 'census.csv'
    path.write_text("mrkinc,shelco\n1,2\n3,abc\n")
    with pytest.raises(IngestionError, match='row 2'):
        ingest_regression_csv(path)


def test_ingest_rejects_constant_column(tmp_path):
    path = tmp_path / 'census.csv'
    path.write_text("mrkinc,shelco\n4,1\n4,2\n4,3\n")
    with pytest.raises(IngestionError) as excinfo:
        ingest_regression_csv(path)
    assert excinfo.value.rows_read == 3


def test_ingest_rejects_missing_columns_and_files(tmp_path):
    path = tmp_path / 'census.csv'
    path.write_text("income,shelter\n1,2\n")
    with pytest.raises(IngestionError):
        ingest_regression_csv(path)
    with pytest.raises(IngestionError):
        ingest_regression_csv(tmp_path / 'absent.csv')


def test_surrogate_round_trips_through_ingestion(tmp_path):
    frame = synthesize_census_surrogate(2000, np.random.default_rng(0))
    assert list(frame.columns) == ['mrkinc', 'shelco']
    assert frame.isna().any().any()
    assert (frame.dropna() > 0).all().all()
    assert np.corrcoef(np.log(frame.dropna().T.to_numpy()))[0, 1] > 0.2

    path = write_census_surrogate(tmp_path / 'data' / 'census.csv', count=500, seed=1)
    sample = ingest_regression_csv(path)
    assert 450 < sample.size <= 500
    assert sample.records.max() <= 1 / math.sqrt(2) + 1e-12


def test_value_column_with_and_without_header(tmp_path):
    headed = tmp_path / 'headed.csv'
    headed.write_text("x,y\n0.5,1\n-1.25,2\n\n3,\n")
    np.testing.assert_array_equal(read_value_column(headed), [0.5, -1.25, 3.0])

    bare = tmp_path / 'bare.csv'
    bare.write_text("0.5\n-1.25\nn/a\n3\n")
    np.testing.assert_array_equal(read_value_column(bare), [0.5, -1.25, 3.0])


def test_value_column_rejects_empty_files(tmp_path):
    empty = tmp_path / 'empty.csv'
    empty.write_text("")
    with pytest.raises(IngestionError):
        read_value_column(empty)
    header_only = tmp_path / 'header.csv'
    header_only.write_text("x\n")
    with pytest.raises(IngestionError):
        read_value_column(header_only)
    with pytest.raises(IngestionError):
        read_value_column(tmp_path / 'absent.csv')


# Configuration

def test_config_parses_comma_lists():
    config = ExperimentConfig(scenario='truncated_normal_mean', method='m_out_of_n',
                              n='500, 1000', B='100', mu='0.5,1')
    assert config.n == [500, 1000] and config.B == [100] and config.mu == [0.5, 1.0]


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(scenario='truncated_normal_mean', method='m_out_of_n', n=[1000], mu=[0.5])
    with pytest.raises(ValidationError):
        ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n', n=[1000], mu=[0.5], colour='red')
    with pytest.raises(ValidationError):
        ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n', n=[1000], mu=[0.5],
                         data_path='census.csv')
    with pytest.raises(ValidationError):
        ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n', n=[1000], mu=[-0.5])


def test_cli_config_from_text():
    config = CliConfig.from_text(
        "# desk-scale table\n"
        "scenario = truncated_normal_mean\n"
        "method = m_out_of_n\n"
        "n = 1000, 5000   # two sizes\n"
        "B = 100\n"
        "mu = 0.5\n"
        "replications = 20\n"
        "format = json\n"
    )
    assert config.format == 'json' and config.output == 'report.csv'
    experiment = config.experiment()
    assert isinstance(experiment, ExperimentConfig) and not isinstance(experiment, CliConfig)
    assert experiment.replications == 20 and experiment.n == [1000, 5000]

    with pytest.raises(ValueError, match='duplicate'):
        CliConfig.from_text("mu = 0.5\nmu = 1\n")
    with pytest.raises(ValueError, match='line 1'):
        CliConfig.from_text("scenario truncated_normal_mean\n")


def test_report_row_validation():
    assert ReportRow.from_dict(_row().to_dict()) == _row()
    with pytest.raises(ValueError):
        _row(coverage=1.2)
    with pytest.raises(ValueError):
        _row(avg_length=-0.1)


# Scenarios and intervals

def test_reference_minimizer_matches_grid_search():
    rng = np.random.default_rng(3)
    records = np.column_stack([np.ones(20), rng.uniform(size=20)]) / math.sqrt(2)
    sample = Sample(records=records, labels=rng.choice([-1.0, 1.0], size=20))
    axis = np.linspace(-0.6, 0.6, 121)
    best = min(((a, b) for a in axis for b in axis), key=lambda t: logistic_objective(np.array(t), sample))
    np.testing.assert_allclose(reference_minimizer(sample), best, atol=0.02)


def test_census_scenario_uses_a_surrogate_without_data():
    config = ExperimentConfig(scenario='logistic_census', method='m_out_of_n', n=[200], B=[20], mu=[1.0],
                              population_size=3000)
    setup = build_scenario(config)
    assert setup.estimator.dimension == 2
    assert setup.truth.shape == (2,)
    assert setup.draw(200, np.random.default_rng(0)).size == 200


def test_private_interval_methods():
    rng = np.random.default_rng(4)
    setup = build_scenario(ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n',
                                            n=[500], mu=[1.0]))
    sample = setup.draw(500, rng)
    for method in ('m_out_of_n', 'n_out_of_n', 'blbquant'):
        interval = private_interval(method, sample, setup.estimator, B=100, mu=1.0, alpha=0.05, rng=rng)
        assert interval.lower[0] <= interval.upper[0]
    with pytest.raises(ParameterError):
        private_interval('jackknife', sample, setup.estimator, B=100, mu=1.0, alpha=0.05, rng=rng)


def test_m_out_of_n_is_much_faster_than_n_out_of_n():
    setup = build_scenario(ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n',
                                            n=[5000], mu=[1.0]))
    sample = setup.draw(5000, np.random.default_rng(21))

    def best_time(method):
        times = []
        for seed in range(3):
            start = time.perf_counter()
            private_interval(method, sample, setup.estimator, B=1000, mu=1.0, alpha=0.05,
                             rng=np.random.default_rng(seed))
            times.append(time.perf_counter() - start)
        return min(times)

    assert 10 * best_time('m_out_of_n') <= best_time('n_out_of_n')


# Studies

def test_small_study_is_reproducible():
    config = ExperimentConfig(scenario='truncated_normal_mean', method='m_out_of_n', n=[500], B=[50],
                              mu=[1.0], replications=20, seed=7)
    first = run_coverage_study(config)
    second = run_coverage_study(config)
    assert len(first) == 1
    row = first[0]
    assert row.m == 10
    assert row.coverage * row.replications == pytest.approx(round(row.coverage * row.replications))
    assert (row.coverage, row.avg_length) == (second[0].coverage, second[0].avg_length)


def test_grid_defaults():
    n_out = run_coverage_study(ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n',
                                                n=[200], mu=[1.0, 0.5], replications=2))
    assert [(row.m, row.B) for row in n_out] == [(200, 200), (200, 50)]

    blb = run_coverage_study(ExperimentConfig(scenario='truncated_normal_mean', method='blbquant',
                                              n=[500], B=[30], mu=[1.0], replications=2))
    epsilon = solve_budget('epsilon', delta=1 / 500, mu=1.0)
    assert blb[0].m == make_blb_config(500, epsilon, 1 / 500).bag_size
    assert blb[0].B == 30


def test_logistic_study_reports_every_coordinate():
    config = ExperimentConfig(scenario='logistic_census', method='m_out_of_n', n=[300], B=[20], mu=[1.0],
                              replications=3, population_size=2000)
    rows = run_coverage_study(config)
    assert [row.coord for row in rows] == [0, 1]
    assert all(row.avg_time_sec > 0 for row in rows)


# Reports

def test_emit_csv_report(tmp_path):
    path = tmp_path / 'report.csv'
    emit_report([_row(), _row(coord=1, avg_length=9.75e-5)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == 'scenario,method,n,m,B,mu,alpha,coord,coverage,avg_length,avg_time_sec,replications,seed'
    assert lines[0] == ','.join(REPORT_COLUMNS)
    assert lines[2].split(',')[9] == '9.75e-05'
    frame = pd.read_csv(path)
    assert frame['coverage'].tolist() == [0.894, 0.894]
    assert frame['avg_length'].tolist() == [0.136, 9.75e-5]


def test_emit_json_report(tmp_path):
    path = tmp_path / 'report.json'
    emit_report([_row()], path, fmt='json')
    records = json.loads(path.read_text())
    assert list(records[0].keys()) == list(REPORT_COLUMNS)
    assert ReportRow.from_dict(records[0]) == _row()


def test_emit_report_failures(tmp_path):
    path = tmp_path / 'empty.csv'
    with pytest.raises(ParameterError):
        emit_report([], path)
    assert not path.exists()
    with pytest.raises(ReportError):
        emit_report([_row()], tmp_path / 'missing' / 'report.csv')


# Desk-scale reproductions

@pytest.mark.slow
def test_m_out_of_n_mean_table_row():
    config = ExperimentConfig(scenario='truncated_normal_mean', method='m_out_of_n', n=[1000], B=[100],
                              mu=[0.5], replications=500)
    row = run_coverage_study(config)[0]
    assert row.m == 10
    assert abs(row.coverage - 0.894) <= 0.045
    assert row.avg_length == pytest.approx(0.136, rel=0.1)


@pytest.mark.slow
def test_n_out_of_n_is_much_wider():
    base = dict(scenario='truncated_normal_mean', n=[1000], mu=[0.5], replications=200)
    m_row = run_coverage_study(ExperimentConfig(method='m_out_of_n', B=[100], **base))[0]
    n_row = run_coverage_study(ExperimentConfig(method='n_out_of_n', B=[250], **base))[0]
    assert n_row.coverage >= 0.99
    assert n_row.avg_length >= 8 * m_row.avg_length


@pytest.mark.slow
def test_noise_free_n_out_of_n_has_nominal_coverage():
    config = ExperimentConfig(scenario='truncated_normal_mean', method='n_out_of_n', n=[5000], B=[500],
                              mu=[1.0], replications=500, noise_free=True)
    row = run_coverage_study(config)[0]
    assert 0.86 <= row.coverage <= 0.94


@pytest.mark.slow
def test_logistic_17d_coverage():
    config = ExperimentConfig(scenario='logistic_synthetic_17d', method='m_out_of_n', n=[5000], B=[500],
                              mu=[1.0], m=10, replications=200)
    rows = run_coverage_study(config)
    for coord, target in ((0, 0.906), (8, 0.900), (10, 0.914)):
        assert abs(rows[coord].coverage - target) <= 0.07


@pytest.mark.slow
def test_logistic_n_out_of_n_is_wider_than_m_out_of_n():
    base = dict(scenario='logistic_synthetic_17d', n=[1000], mu=[1.0], replications=50)
    m_rows = run_coverage_study(ExperimentConfig(method='m_out_of_n', B=[500], m=10, **base))
    n_rows = run_coverage_study(ExperimentConfig(method='n_out_of_n', B=[500], **base))
    assert n_rows[8].avg_length > 3 * m_rows[8].avg_length
    # replicate noise (sd ~0.036) swamps the sampling sd of theta_8 (~0.001), so nothing is missed
    assert n_rows[8].coverage >= 0.98
