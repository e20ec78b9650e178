import numpy as np
import pytest

from phyplan.numerics import DenseNetwork, LBFGSConfig, table1_sizes
from phyplan.skills import (
    GRAVITY,
    SKILL_NAMES,
    DataOnlySkillError,
    Dataset,
    InputScaler,
    SkillModel,
    UnknownSkillError,
    build_skill,
    data_loss,
    identify_parameter,
    physics_loss,
    physics_residual,
    sample_collocation,
    total_loss,
    train,
)
from phyplan.skills.data import CollocationSet
from phyplan.worldsim.oracle import OracleModel, generate_dataset, oracle_predict, pendulum_exact


def zero_model(skill):
    """A model whose network outputs exactly zero everywhere."""
    spec = build_skill(skill)
    sizes = table1_sizes(spec.n_inputs, spec.n_outputs, hidden=1, width=3)
    net = DenseNetwork.from_flat(sizes, np.zeros(sum(sizes[k + 1] * (sizes[k] + 1) for k in range(len(sizes) - 1))))
    return SkillModel(spec, net, InputScaler(np.zeros(spec.n_inputs), np.ones(spec.n_inputs)))


class StubModel:
    """Physics-loss evaluator with prescribed outputs and time derivatives."""

    def __init__(self, spec, y, dy):
        self.spec = spec
        self.y, self.dy = np.atleast_2d(y), np.atleast_2d(dy)

    def physical_values(self):
        return self.spec.param_values()

    def value_and_time_derivative(self, points):
        return self.y, self.dy


# schemas ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "name, inputs, outputs, physics",
    [
        ("swinging", ("theta_init", "t_query"), ("theta", "omega"), True),
        ("sliding", ("v_init", "t_query"), ("x", "v"), True),
        ("throwing", ("v_hor_init", "v_ver_init", "t_query"), ("v_ver", "y", "x"), True),
        ("bouncing", ("e", "theta_w", "v_ver_init", "v_hor_init"), ("v_ver", "v_hor"), False),
        ("hitting", ("m1", "m2", "v_init"), ("v",), False),
    ],
)
def test_build_skill_schemas(name, inputs, outputs, physics):
    spec = build_skill(name)
    assert spec.input_fields == inputs
    assert spec.output_fields == outputs
    assert spec.has_physics_loss is physics
    assert (spec.time_index is not None) == physics
    if physics:
        assert spec.input_fields[spec.time_index] == "t_query"
        assert spec.param_values()["g"] == GRAVITY


def test_build_skill_examples():
    swing = build_skill("swinging")
    assert (swing.n_inputs, swing.n_outputs, swing.has_physics_loss) == (2, 2, True)
    assert swing.unknown_params == ("l",)
    bounce = build_skill("bouncing")
    assert (bounce.n_inputs, bounce.n_outputs, bounce.has_physics_loss) == (4, 2, False)
    hit = build_skill("hitting")
    assert (hit.n_inputs, hit.n_outputs, hit.has_physics_loss) == (3, 1, False)


def test_build_skill_unknown_name_and_fixed_params():
    with pytest.raises(UnknownSkillError):
        build_skill("juggling")
    with pytest.raises(ValueError):
        build_skill("sliding", g=1.0)
    spec = build_skill("sliding", mu=0.3)
    assert spec.unknown_params == ()
    assert spec.param_values()["mu"] == 0.3


# residuals -------------------------------------------------------------------


def test_sliding_residual_closed_form():
    v0, mu, t = 2.0, 0.1, 1.0
    spec = build_skill("sliding", mu=mu)
    out = [v0 * t - 0.5 * mu * GRAVITY * t**2, v0 - mu * GRAVITY * t]
    dout = [v0 - mu * GRAVITY * t, -mu * GRAVITY]
    res = physics_residual(spec, spec.param_values(), [v0, t], out, dout)
    np.testing.assert_allclose(res, [0.0, 0.0], atol=1e-12)


def test_swinging_residual_equilibrium():
    spec = build_skill("swinging", l=0.5)
    res = physics_residual(spec, spec.param_values(), [0.0, 0.3], [0.0, 0.0], [0.0, 0.0])
    np.testing.assert_array_equal(res, [0.0, 0.0])


def test_throwing_residual_closed_form():
    spec = build_skill("throwing")
    vh, vv, t = 1.5, 2.0, 0.4
    out = [vv - GRAVITY * t, vv * t - 0.5 * GRAVITY * t**2, vh * t]
    dout = [-GRAVITY, vv - GRAVITY * t, vh]
    res = physics_residual(spec, spec.param_values(), [vh, vv, t], out, dout)
    np.testing.assert_allclose(res, [0.0, 0.0, 0.0], atol=1e-12)


def test_residual_rejects_data_only_skills():
    for name in ("bouncing", "hitting"):
        spec = build_skill(name)
        with pytest.raises(DataOnlySkillError):
            physics_residual(spec, spec.param_values(), np.zeros(spec.n_inputs), np.zeros(spec.n_outputs),
                             np.zeros(spec.n_outputs))


def test_residual_detects_wrong_parameter():
    spec = build_skill("sliding", mu=0.2)
    out = [0.0, 1.0]
    dout = [1.0, -0.3 * GRAVITY]  # decelerating as if mu were 0.3
    res = physics_residual(spec, spec.param_values(), [1.0, 0.0], out, dout)
    np.testing.assert_allclose(res, [0.0, -0.1 * GRAVITY], atol=1e-12)


@pytest.mark.parametrize("skill", ["swinging", "sliding", "throwing"])
def test_oracle_trajectories_have_zero_residual(skill):
    data = generate_dataset(skill, n=1000, seed=3)
    oracle = OracleModel(skill)
    y, dy = oracle.value_and_time_derivative(data.inputs)
    res = physics_residual(oracle.spec, oracle.physical_values(), data.inputs, y, dy)
    assert np.max(np.linalg.norm(res, axis=1)) < 1e-10


@pytest.mark.parametrize("skill", ["swinging", "sliding", "throwing"])
def test_oracle_time_derivatives_match_finite_differences(skill):
    # guards the residual-zero test against a derivative that is merely
    # consistent with the residual rather than with the trajectory
    data = generate_dataset(skill, n=200, seed=4)
    oracle = OracleModel(skill)
    ti = oracle.spec.time_index
    pts = data.inputs[data.inputs[:, ti] > 1e-3]
    if skill == "sliding":
        stop = pts[:, 0] / (oracle.params["mu"] * GRAVITY)
        pts = pts[pts[:, ti] < stop - 1e-3]
    h = 1e-5
    plus, minus = pts.copy(), pts.copy()
    plus[:, ti] += h
    minus[:, ti] -= h
    fd = (oracle.value_and_time_derivative(plus)[0] - oracle.value_and_time_derivative(minus)[0]) / (2 * h)
    _, dy = oracle.value_and_time_derivative(pts)
    np.testing.assert_allclose(dy, fd, atol=1e-5)


def test_swinging_oracle_matches_closed_form_pendulum():
    t = np.linspace(0.0, 0.5, 11)
    rk = oracle_predict("swinging", {"l": 0.5}, np.full((11, 1), 1.0), t)
    theta, omega = pendulum_exact(1.0, t, 0.5)
    np.testing.assert_allclose(rk[:, 0], theta, atol=1e-10)
    np.testing.assert_allclose(rk[:, 1], omega, atol=1e-10)


# losses ----------------------------------------------------------------------


def test_data_loss_examples():
    model = zero_model("hitting")
    one = Dataset.for_spec(model.spec, [[0.1, 0.1, 1.0]], [[1.0]])
    assert data_loss(model, one) == 1.0

    model = zero_model("bouncing")
    two = Dataset.for_spec(model.spec, np.zeros((2, 4)), [[1.0, 0.0], [0.0, 2.0]])
    assert data_loss(model, two) == pytest.approx(1.25, abs=1e-15)

    exact = Dataset.for_spec(model.spec, np.ones((3, 4)), model.evaluate(np.ones((3, 4))))
    assert data_loss(model, exact) == 0.0


def test_data_loss_rejects_empty_dataset():
    model = zero_model("hitting")
    empty = Dataset.for_spec(model.spec, np.zeros((0, 3)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        data_loss(model, empty)


def test_physics_loss_examples():
    spec = build_skill("sliding", mu=0.2)
    at_rest_point = np.array([[0.0, 0.0]])
    zero_res = StubModel(spec, [[0.0, 0.0]], [[0.0, -0.2 * GRAVITY]])
    assert physics_loss(zero_res, at_rest_point) == 0.0

    data = generate_dataset("sliding", {"mu": 0.2}, n=100, seed=2)
    colloc = sample_collocation(spec, data, seed=0)
    assert physics_loss(OracleModel("sliding", {"mu": 0.2}), colloc) < 1e-20

    # residual (-v, a + mu g): doubling both components quadruples the loss
    base = StubModel(spec, [[0.0, 0.3]], [[0.0, 0.5 - 0.2 * GRAVITY]])
    doubled = StubModel(spec, [[0.0, 0.6]], [[0.0, 1.0 - 0.2 * GRAVITY]])
    assert physics_loss(doubled, at_rest_point) == pytest.approx(4 * physics_loss(base, at_rest_point), rel=1e-12)


def test_physics_loss_errors():
    with pytest.raises(DataOnlySkillError):
        physics_loss(zero_model("bouncing"), np.zeros((1, 4)))
    with pytest.raises(ValueError):
        physics_loss(OracleModel("sliding"), np.zeros((0, 2)))


def test_total_loss_sums_terms_exactly():
    spec = build_skill("sliding", mu=0.2)
    data = generate_dataset("sliding", {"mu": 0.2}, n=40, seed=5)
    colloc = sample_collocation(spec, data, seed=1)
    model = train(spec, data, colloc, LBFGSConfig(max_iterations=5), seed=0)
    assert total_loss(model, data, colloc) == data_loss(model, data) + physics_loss(model, colloc)

    bounce = zero_model("bouncing")
    bdata = generate_dataset("bouncing", n=10, seed=0)
    assert total_loss(bounce, bdata, colloc) == data_loss(bounce, bdata)


def test_total_loss_zero_for_exact_model_on_zero_residual_points():
    model = zero_model("hitting")
    data = Dataset.for_spec(model.spec, np.ones((2, 3)), np.zeros((2, 1)))
    assert total_loss(model, data) == 0.0


# data and collocation ----------------------------------------------------------


def test_collocation_defaults_to_four_points_per_row():
    spec = build_skill("throwing")
    data = generate_dataset("throwing", n=25, seed=0)
    colloc = sample_collocation(spec, data, seed=0)
    assert len(colloc) == 100
    assert np.all(colloc.points >= colloc.lower) and np.all(colloc.points <= colloc.upper)


def test_sliding_samples_stay_before_stopping_time():
    data = generate_dataset("sliding", {"mu": 0.4}, n=500, seed=0)
    assert np.all(data.inputs[:, 1] <= data.inputs[:, 0] / (0.4 * GRAVITY) + 1e-12)
    colloc = sample_collocation(build_skill("sliding"), data, seed=0)
    moving = data.inputs[:, 0] > 0
    c = np.max(data.inputs[moving, 1] / data.inputs[moving, 0])
    assert np.all(colloc.points[:, 1] <= c * colloc.points[:, 0] + 1e-12)


def test_dataset_noise_statistics():
    clean = generate_dataset("throwing", n=4000, seed=7)
    noisy = generate_dataset("throwing", n=4000, noise_sigma=0.01, seed=7)
    np.testing.assert_array_equal(clean.inputs, noisy.inputs)
    err = (noisy.targets - clean.targets).ravel()
    assert abs(err.mean()) < 5e-4
    assert err.std() == pytest.approx(0.01, rel=0.03)
    assert noisy.provenance["noise_sigma"] == 0.01


def test_dataset_csv_round_trip(tmp_path):
    data = generate_dataset("sliding", n=20, seed=1)
    path = tmp_path / "sliding.csv"
    data.to_csv(path)
    header = [line for line in path.read_text().splitlines() if not line.startswith("#")][0]
    assert header == "v_init,t_query,x,v"
    back = Dataset.from_csv(path, build_skill("sliding"))
    np.testing.assert_array_equal(back.inputs, data.inputs)
    np.testing.assert_array_equal(back.targets, data.targets)
    assert back.provenance["seed"] == "1"


def test_dataset_rejects_inconsistent_rows():
    spec = build_skill("sliding")
    with pytest.raises(ValueError):
        Dataset.for_spec(spec, np.zeros((3, 3)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        Dataset.for_spec(spec, np.zeros((3, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        train(build_skill("throwing"), generate_dataset("sliding", n=5), cfg=LBFGSConfig(max_iterations=1))


# training --------------------------------------------------------------------


def validation_mse(model, data, column=None):
    pred = model.evaluate(data.inputs)
    err = pred - data.targets
    return float(np.mean(err[:, column] ** 2 if column is not None else err**2))


@pytest.mark.slow
def test_train_sliding_reaches_low_validation_error():
    spec = build_skill("sliding", mu=0.2)
    data = generate_dataset("sliding", {"mu": 0.2}, n=200, seed=0)
    colloc = sample_collocation(spec, data, seed=1)
    assert len(colloc) == 800
    model = train(spec, data, colloc, LBFGSConfig(max_iterations=1500), seed=0)
    val = generate_dataset("sliding", {"mu": 0.2}, n=500, seed=99)
    assert validation_mse(model, val, column=0) < 1e-3
    assert model.report.iterations > 0 and model.report.data_loss < 1e-3


@pytest.mark.slow
def test_physics_loss_improves_data_efficiency_at_50_points():
    spec = build_skill("sliding", mu=0.2)
    data = generate_dataset("sliding", {"mu": 0.2}, n=50, seed=0)
    val = generate_dataset("sliding", {"mu": 0.2}, n=500, seed=99)
    cfg = LBFGSConfig(max_iterations=1500)
    pinn = train(spec, data, cfg=cfg, seed=0)
    plain = train(spec.data_only(), data, cfg=cfg, seed=0)
    assert validation_mse(pinn, val) < validation_mse(plain, val)


def test_train_is_deterministic():
    spec = build_skill("throwing")
    data = generate_dataset("throwing", n=30, seed=0)
    cfg = LBFGSConfig(max_iterations=20)
    a = train(spec, data, cfg=cfg, seed=4)
    b = train(spec, data, cfg=cfg, seed=4)
    np.testing.assert_array_equal(a.net.flat(), b.net.flat())
    c = train(spec, data, cfg=cfg, seed=5)
    assert not np.array_equal(a.net.flat(), c.net.flat())


def test_train_reports_non_finite_loss():
    spec = build_skill("hitting")
    data = generate_dataset("hitting", n=10, seed=0)
    data.targets[0, 0] = np.nan
    model = train(spec, data, cfg=LBFGSConfig(max_iterations=10), seed=0)
    assert model.report.status == "non_finite"
    assert np.all(np.isfinite(model.net.flat()))


def test_train_appends_unknown_parameters():
    spec = build_skill("sliding")
    assert spec.unknown_params == ("mu",)
    data = generate_dataset("sliding", {"mu": 0.4}, n=100, seed=0)
    model = train(spec, data, cfg=LBFGSConfig(max_iterations=30), seed=0)
    assert set(model.learned_params) == {"mu"}
    assert model.learned_params["mu"] != spec.param_values()["mu"]


@pytest.mark.slow
def test_identify_swinging_length():
    spec = build_skill("swinging")
    data = generate_dataset("swinging", {"l": 0.5}, n=1000, seed=0)
    _, est = identify_parameter(spec, data, LBFGSConfig(max_iterations=1000), seed=0)
    assert abs(est["l"] - 0.5) / 0.5 < 0.02


@pytest.mark.slow
def test_identify_sliding_is_seed_stable():
    data = generate_dataset("sliding", {"mu": 0.4}, n=1000, seed=0)
    estimates = [
        identify_parameter(build_skill("sliding"), data, LBFGSConfig(max_iterations=600), seed=s)[1]["mu"]
        for s in range(5)
    ]
    assert max(estimates) - min(estimates) < 0.02


def test_identify_rejects_skills_without_unknowns():
    with pytest.raises(DataOnlySkillError):
        identify_parameter(build_skill("bouncing"), generate_dataset("bouncing", n=5))
    with pytest.raises(ValueError):
        identify_parameter(build_skill("throwing"), generate_dataset("throwing", n=5))


# prediction and storage ----------------------------------------------------------


def test_predict_examples(trained_models):
    throw = trained_models["throwing"].predict([1.0, 0.0], 0.5)
    np.testing.assert_allclose(throw, [-4.905, -1.22625, 0.5], atol=1e-2)
    for t in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(trained_models["sliding"].predict([0.0], t, warn=False), [0.0, 0.0], atol=1e-2)
    for t in (0.0, 0.2, 0.5):
        np.testing.assert_allclose(trained_models["swinging"].predict([0.0], t), [0.0, 0.0], atol=1e-2)


def test_throwing_model_tracks_projectile_height(trained_models):
    model = trained_models["throwing"]
    ts = np.linspace(0.0, 1.0, 41)[1:-1]  # unseen interior times
    rng = np.random.default_rng(0)
    for vh, vv in zip(rng.uniform(0.5, 4.5, 8), rng.uniform(-5.0, 3.5, 8)):
        y = model.predict([vh, vv], ts)[:, 1]
        assert np.max(np.abs(y - (vv * ts - 0.5 * GRAVITY * ts**2))) < 1e-2


def test_sliding_prediction_holds_after_stopping(trained_models):
    model = trained_models["sliding"]
    t_stop = model.stopping_time(np.array([2.0]))
    assert t_stop == pytest.approx(2.0 / (0.2 * GRAVITY), abs=0.02)
    late = model.predict([2.0], [t_stop + 0.05, t_stop + 0.4], warn=False)
    np.testing.assert_array_equal(late[:, 1], 0.0)
    assert late[0, 0] == late[1, 0]


def test_predict_time_free_skills_ignore_t(trained_models):
    model = trained_models["bouncing"]
    np.testing.assert_array_equal(model.predict([0.8, 0.5, -3.0, 0.0], 0.1), model.predict([0.8, 0.5, -3.0, 0.0]))


def test_predict_errors_and_warnings(trained_models):
    with pytest.raises(ValueError):
        trained_models["throwing"].predict([1.0], 0.5)
    with pytest.raises(ValueError):
        trained_models["hitting"].predict([0.1, 0.1])
    with pytest.warns(UserWarning, match="outside trained range"):
        trained_models["throwing"].predict([1.0, 0.0], 3.0)


def test_model_save_load_round_trip(tmp_path, trained_models):
    for skill, model in trained_models.items():
        path = tmp_path / f"{skill}.bin"
        model.save(path)
        back = SkillModel.load(path)
        assert back.spec == model.spec
        np.testing.assert_array_equal(back.net.flat(), model.net.flat())
        np.testing.assert_array_equal(back.scaler.lower, model.scaler.lower)
        assert back.report.data_loss == model.report.data_loss
        x = np.ones(model.spec.n_inputs) * 0.3
        np.testing.assert_array_equal(back.evaluate(x), model.evaluate(x))


def test_identified_parameter_survives_serialization(tmp_path):
    data = generate_dataset("sliding", {"mu": 0.4}, n=50, seed=0)
    model = train(build_skill("sliding"), data, cfg=LBFGSConfig(max_iterations=10), seed=0)
    model.save(tmp_path / "m.bin")
    back = SkillModel.load(tmp_path / "m.bin")
    assert back.learned_params == model.learned_params
    assert back.physical_values()["mu"] == model.physical_values()["mu"]


def test_collocation_set_is_plain_points():
    colloc = CollocationSet(np.zeros((3, 2)), np.zeros(2), np.ones(2))
    assert len(colloc) == 3


def test_skill_names_cover_five_skills():
    assert set(SKILL_NAMES) == {"swinging", "sliding", "throwing", "bouncing", "hitting"}
