import math

import numpy as np
import pytest

from sbfem.exceptions import ConfigError
from sbfem.problems import builtin_problem, canonical_id, exact_solution
from sbfem.study import (
    CSV_HEADER,
    ConvergenceRecord,
    StudyConfig,
    emit_csv,
    emit_plot_data,
    estimate_rates,
    format_csv,
    load_config,
    pairwise_rate,
    read_csv,
    run_study,
)

THETA = 1.5 * np.pi


# -- built-in problems ------------------------------------------------------------


def test_test1_exact_value():
    assert exact_solution("test1")(1.0, 0.75 * np.pi) == pytest.approx(1.0)


def test_test2_edges_and_outer_value():
    v = exact_solution("test2")
    assert v(1.0, 0.0) == pytest.approx(1.0)
    r = np.array([0.01, 0.3, 0.8])
    np.testing.assert_allclose(v(r, 0.0 * r), r ** (2 / 3))
    np.testing.assert_allclose(v(r, THETA + 0.0 * r), r ** (2 / 3), rtol=1e-12)


@pytest.mark.parametrize("pid", ["test1", "test2", "test3-manufactured"])
def test_exact_partials_match_finite_differences(pid):
    f = exact_solution(pid)
    rng = np.random.default_rng(7)
    r = rng.uniform(0.1, 0.95, 20)
    t = rng.uniform(0.1, THETA - 0.1, 20)
    e = 1e-6
    val = f.partial("value")
    np.testing.assert_allclose(f.partial("dr")(r, t), (val(r + e, t) - val(r - e, t)) / (2 * e), rtol=1e-6, atol=1e-7)
    np.testing.assert_allclose(f.partial("dtheta")(r, t), (val(r, t + e) - val(r, t - e)) / (2 * e), rtol=1e-6, atol=1e-7)
    dt = f.partial("dtheta")
    np.testing.assert_allclose(f.partial("dthetatheta")(r, t), (dt(r, t + e) - dt(r, t - e)) / (2 * e), rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(f.partial("drtheta")(r, t), (dt(r + e, t) - dt(r - e, t)) / (2 * e), rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("pid", ["test1", "test2"])
def test_harmonic_exact_solutions(pid):
    # polar Laplacian u_rr + u_r / r + u_tt / r^2 = 0, second radial derivative by differences
    f = exact_solution(pid)
    rng = np.random.default_rng(3)
    r = rng.uniform(0.2, 0.9, 30)
    t = rng.uniform(0.0, THETA, 30)
    e = 1e-5
    dr = f.partial("dr")
    urr = (dr(r + e, t) - dr(r - e, t)) / (2 * e)
    lap = urr + dr(r, t) / r + f.partial("dthetatheta")(r, t) / r**2
    np.testing.assert_allclose(lap, 0.0, atol=1e-7)


def test_test3_is_manufactured():
    # -Laplace(r^a sin(nu t)) = -(a^2 - nu^2) r^(a-2) sin(nu t)
    f = exact_solution("test3")
    problem, _ = builtin_problem("test3", 4, 1)
    rng = np.random.default_rng(11)
    r = rng.uniform(0.05, 1.0, 50)
    t = rng.uniform(0.0, THETA, 50)
    nu, a = 2 / 3, 2.5
    # the r^nu part is harmonic, so only -r^a contributes
    neg_lap = (a**2 - nu**2) * r ** (a - 2) * np.sin(nu * t)
    np.testing.assert_allclose(neg_lap, problem.load(r, t), rtol=1e-14)
    assert f(1.0, 1.0) == 0.0


def test_unknown_problem_and_fixed_angle():
    with pytest.raises(ConfigError):
        builtin_problem("test9")
    with pytest.raises(ConfigError):
        builtin_problem("test1", theta_max=1.0)
    assert canonical_id("test3") == "test3-manufactured"


def test_custom_problem_mode():
    problem, exact = builtin_problem("custom", 8, 2, theta_max=2.0, mode=2)
    assert problem.mesh.theta_max == 2.0
    assert exact(1.0, 0.5) == pytest.approx(np.sin(np.pi / 2))


# -- configuration ----------------------------------------------------------------


def test_config_defaults():
    cfg = StudyConfig()
    assert cfg.orders == (1, 2, 4, 6)
    assert cfg.levels == (4, 8, 16, 32, 64)
    assert cfg.theta_max == pytest.approx(THETA)


@pytest.mark.parametrize(
    "kwargs",
    [dict(orders=(0,)), dict(orders=(7,)), dict(levels=(8, 4)), dict(levels=(4, 4)), dict(levels=()), dict(problem="x"), dict(quad_levels=5)],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        StudyConfig(**kwargs)


def test_load_config_file(tmp_path):
    path = tmp_path / "study.cfg"
    path.write_text("# comment\nproblem = test2\norders = 1, 2  # trailing\nlevels=4,8\nquad-levels = 44\ntimings = false\n")
    cfg = load_config(path, levels="8,16")
    assert cfg.problem == "test2"
    assert cfg.orders == (1, 2)
    assert cfg.levels == (8, 16)
    assert cfg.quad_levels == 44
    assert cfg.timings is False


@pytest.mark.parametrize("text", ["unknown = 1\n", "problem\n", "orders = a,b\n", "timings = maybe\n"])
def test_load_config_errors(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.cfg")


# -- rates and records ------------------------------------------------------------


def synthetic(errors_fn, hs, p=1, problem="test1"):
    return [ConvergenceRecord(problem, p, i + 1, h, errors_fn(h), errors_fn(h) ** 0.5) for i, h in enumerate(hs)]


def test_exact_power_law_slope():
    recs = synthetic(lambda h: 3.0 * h**2, [0.4, 0.2, 0.1])
    fit = estimate_rates(recs)[("test1", 1, "L2")]
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert estimate_rates(recs)[("test1", 1, "H1")].slope == pytest.approx(1.0, abs=1e-12)


def test_single_pair_slope_is_pairwise_rate():
    recs = synthetic(lambda h: h**1.7 + 0.1 * h**3, [0.5, 0.25])
    fit = estimate_rates(recs)[("test1", 1, "L2")]
    assert fit.slope == pytest.approx(pairwise_rate(recs[0].err_L2r, recs[1].err_L2r, 0.5, 0.25), rel=1e-12)


def test_floor_excludes_saturated_levels():
    errs = {0.4: 1e-6, 0.2: 1e-8, 0.1: 2e-13, 0.05: 3e-13}
    recs = [ConvergenceRecord("test1", 6, i, h, e, e) for i, (h, e) in enumerate(errs.items())]
    fit = estimate_rates(recs)[("test1", 6, "L2")]
    assert fit.n_points == 2
    assert fit.slope == pytest.approx(math.log(100) / math.log(2))


def test_insufficient_data():
    with pytest.raises(ValueError):
        estimate_rates(synthetic(lambda h: h, [0.3]))


def test_run_study_rates_and_lambda():
    recs = run_study(StudyConfig(problem="test1", orders=(1,), levels=(8, 16)))
    assert recs[0].rate_L2 is None and recs[0].rate_H1 is None
    assert 1.8 <= recs[1].rate_L2 <= 2.2
    assert 0.85 <= recs[1].rate_H1 <= 1.15
    assert recs[1].h == pytest.approx(THETA / 16)
    assert recs[0].lambda_min > recs[1].lambda_min > 2 / 3
    assert recs[0].wall_time is None


def test_run_study_p2_rates():
    recs = run_study(StudyConfig(problem="test1", orders=(2,), levels=(4, 8, 16)))
    for rec in recs[1:]:
        assert abs(rec.rate_L2 - 3) < 0.2 and abs(rec.rate_H1 - 2) < 0.2


def test_single_level_has_no_rates():
    recs = run_study(StudyConfig(problem="test1", orders=(1,), levels=(8,)))
    assert len(recs) == 1 and recs[0].rate_L2 is None


def test_monotone_error_decay_test2():
    recs = run_study(StudyConfig(problem="test2", orders=(1, 2)))
    for p in (1, 2):
        series = [r for r in recs if r.p == p]
        assert all(a.err_L2r > b.err_L2r and a.err_H1tilde > b.err_H1tilde for a, b in zip(series, series[1:]))
    fit = estimate_rates(recs)[("test2", 1, "L2")]
    assert 1.8 <= fit.slope <= 2.2


def test_on_record_callback_and_timings():
    seen = []
    recs = run_study(StudyConfig(orders=(1,), levels=(4, 8), timings=True), on_record=seen.append)
    assert seen == recs
    assert all(r.wall_time is not None and r.wall_time >= 0 for r in recs)


# -- output -----------------------------------------------------------------------


def test_empty_csv_is_header_only():
    assert format_csv([]) == ",".join(CSV_HEADER) + "\n"
    assert CSV_HEADER == tuple("problem,p,n_elements,h,err_L2r,err_H1tilde,rate_L2,rate_H1,lambda_min,wall_time_ms".split(","))


def test_csv_round_trip(tmp_path):
    recs = run_study(StudyConfig(problem="test3", orders=(1, 2), levels=(4, 8)))
    path = tmp_path / "out.csv"
    emit_csv(recs, path)
    lines = path.read_text().splitlines()
    assert lines[1].split(",")[6:8] == ["", ""]
    back = read_csv(path)
    assert back == recs


def test_csv_write_failure_mentions_path(tmp_path):
    with pytest.raises(OSError, match="nope"):
        emit_csv([], tmp_path / "nope" / "x.csv")


def test_plot_data(tmp_path):
    recs = run_study(StudyConfig(orders=(1, 2), levels=(4, 8)))
    paths = emit_plot_data(recs, tmp_path / "plots")
    assert len(paths) == 4
    rows = np.loadtxt(tmp_path / "plots" / "test1_p2_L2.dat")
    assert rows.shape == (2, 2)
    assert rows[0, 0] == pytest.approx(THETA / 4)
    assert rows[1, 1] == recs[3].err_L2r


def test_byte_identical_runs():
    cfg = StudyConfig(problem="test2", orders=(1, 4), levels=(4, 8, 16))
    assert format_csv(run_study(cfg)) == format_csv(run_study(cfg))
