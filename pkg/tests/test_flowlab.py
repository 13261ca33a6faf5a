import json
import math
from typing import Optional

import numpy as np
import pytest
from click.testing import CliRunner

from grflow.estimates import EstimateReport, Verdict
from grflow.misc import get_threads, set_threads
from flowlab import HomogeneousLaboratory, Laboratory, ScenarioError, ScenarioSelector, feedback, tunable
from flowlab.cli import main
from flowlab.inject import LabInjectError
from flowlab.lab_tunable import collect_feedbacks, lookup, setup_tunables
from flowlab.laboratory import EXIT_FAILURE, EXIT_PASS, laboratory_for
from flowlab.refine import observed_order, refine
from flowlab.reporting import slug, write_csv, write_run
from flowlab.scenario import load, parse
from flowlab.watchdog import SimpleWatchdog


class Product:
    def __init__(self, value):
        self.value = value


class CountCheck:
    product: Product
    extra: Optional[Product]

    cfl = tunable(1.0, key="control.cfl")
    points = tunable(0, key="geometry.points")

    def execute(self):
        self.reports = [EstimateReport.from_residual("count", 0.0, {}, 1e-9)]

    @feedback
    def get_values(self) -> np.ndarray:
        return np.arange(self.product.value, dtype=float)

    @feedback(key="has_extra")
    def extra_given(self) -> bool:
        return self.extra is not None


class ToyLab(Laboratory):
    count: CountCheck

    def createObjects(self):
        self.product = Product(3)


class WrongTypeLab(ToyLab):
    def createObjects(self):
        self.product = 3


class MissingProductLab(ToyLab):
    def createObjects(self):
        pass


@pytest.fixture
def toy_scenario():
    return parse({"name": "toy"})


def test_checks_are_injected(toy_scenario):
    lab = ToyLab(toy_scenario)
    report = lab.run()
    assert isinstance(lab.count, CountCheck)
    assert lab.count.product is lab.product
    assert lab.count.extra is None
    assert lab.count.cfl == 0.2
    assert lab.count.points == 16
    assert lab.count.logger.name == "count"
    assert report.verdict is Verdict.PASS
    assert report.exit_code == EXIT_PASS
    assert list(report.feedback["count"]) == ["has_extra", "values"]
    assert report.feedback["count"]["has_extra"] is False
    # array feedback goes to the series, scalars to the report
    assert report.as_dict()["feedback"] == {"count": {"has_extra": False}}


def test_injection_type_mismatch(toy_scenario):
    with pytest.raises(LabInjectError):
        WrongTypeLab(toy_scenario).run()


def test_injection_missing_product(toy_scenario):
    with pytest.raises(LabInjectError):
        MissingProductLab(toy_scenario).run()


def test_timeout_stops_the_run():
    lab = ToyLab(parse({"name": "toy", "control": {"timeout": 0.5}}))
    now = [0]

    def clock():
        now[0] += 1_000_000_000
        return now[0]

    lab.watchdog._get_time = clock
    report = lab.run()
    assert report.failure["error"] == "RunTimeoutError"
    assert "createObjects" in report.failure["message"]
    assert report.exit_code == EXIT_FAILURE
    assert report.reports == ()


def test_tunables_bind_to_scenario():
    class Check:
        samples = tunable(50)
        alpha = tunable(2.0, key="estimates.lemma.alpha")
        envelope = tunable("general", key="estimates.harnack.envelope")

    check = Check()
    with pytest.raises(AttributeError):
        check.samples
    setup_tunables(check, "harnack", {"harnack": {"samples": 12}, "estimates": {"lemma": {"alpha": 3}}})
    assert check.samples == 12
    # ints are accepted for float tunables
    assert check.alpha == 3.0 and isinstance(check.alpha, float)
    assert check.envelope == "general"

    with pytest.raises(TypeError):
        setup_tunables(check, "harnack", {"harnack": {"samples": "many"}})
    with pytest.raises(TypeError):
        setup_tunables(check, "harnack", {"harnack": {"samples": True}})


def test_tunable_errors():
    with pytest.raises(TypeError):

        class Check:
            invalid = tunable(object())


def test_lookup():
    doc = {"a": {"b": {"c": 1}}}
    assert lookup(doc, "a.b.c") == 1
    assert lookup(doc, "a.x", 5) == 5
    with pytest.raises(KeyError):
        lookup(doc, "a.b.c.d")


def test_feedback_errors():
    with pytest.raises(ValueError):

        class Check:
            @feedback
            def get_value(self, arg):
                return arg

    class Duplicates:
        @feedback
        def get_value(self):
            return 1

        @feedback(key="value")
        def other(self):
            return 2

    with pytest.raises(ValueError):
        collect_feedbacks(Duplicates(), "dupes")


def test_watchdog():
    now = [0]
    wd = SimpleWatchdog(1.0)
    wd._get_time = lambda: now[0]
    assert not wd.isExpired()

    wd.enable()
    now[0] = 500_000_000
    wd.addEpoch("half")
    assert not wd.isExpired()
    now[0] = 1_500_000_000
    wd.addEpoch("rest")
    assert wd.isExpired()
    assert wd.epochs() == [("half", 0.5), ("rest", 1.0)]
    assert wd.getTime() == pytest.approx(1.5)

    wd.disable()
    assert not wd.isExpired()
    assert wd.getTimeout() == 1.0
    wd.reset()
    assert wd.epochs() == []


def test_scenario_defaults_and_digest(toy_scenario):
    doc = toy_scenario.document
    assert toy_scenario.backend == "grid"
    assert doc["control"]["cfl"] == 0.2
    assert doc["control"]["budget_constant"] == 10
    assert doc["estimates"]["liyau"] == [{"alpha": 2, "a": 0.25, "b": 0.125}]
    assert len(toy_scenario.digest) == 64
    assert parse({"name": "toy"}).digest == toy_scenario.digest
    assert toy_scenario.with_overrides(seed=3).digest != toy_scenario.digest


def test_scenario_refinement(toy_scenario):
    fine = toy_scenario.refined(1)
    assert fine["geometry"]["points"] == 32
    assert fine["control"]["cadence"] == 128
    assert fine["heat"]["terminal_width"] == 6
    assert toy_scenario.refined(0) is toy_scenario
    with pytest.raises(ValueError):
        toy_scenario.refined(-1)


@pytest.mark.parametrize(
    "document",
    [
        {},
        {"name": "Bad Name"},
        {"name": "x", "unknown": 1},
        {"name": "x", "geometry": {"points": 4}},
        {"name": "x", "geometry": {"dim": 2, "h_form": {"family": "constant"}}},
        {"name": "x", "heat": {"terminal_time": 0.5}},
        {"name": "x", "estimates": {"lemma": {"alpha": 1.0}}},
        {"name": "x", "estimates": {"harnack": {"pairs": 20}}},
        {"name": "x", "backend": "homogeneous", "homogeneous": {"group": "heisenberg", "k": "bismut-flat"}},
    ],
)
def test_invalid_scenarios(document):
    with pytest.raises(ScenarioError):
        parse(document)


def test_scenario_error_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{\n  "name": "bad",\n  "estimates": {\n    "liyau": [\n      {"alpha": 0.5}\n    ]\n  }\n}\n'
    )
    with pytest.raises(ScenarioError) as excinfo:
        load(str(path))
    e = excinfo.value
    assert e.path == ("estimates", "liyau", 0, "alpha")
    assert e.line == 5
    assert str(e).startswith(f"{path}:5: estimates.liyau.0.alpha")

    path.write_text("{\n  \"name\": \n")
    with pytest.raises(ScenarioError):
        load(str(path))


def _write(directory, name, **extra):
    (directory / f"{name}.json").write_text(json.dumps(dict(name=name, **extra)))


def test_selector(tmp_path):
    _write(tmp_path, "one", description="first", default=True)
    _write(tmp_path, "two")
    selector = ScenarioSelector(str(tmp_path))
    assert selector.names() == ["one", "two"]
    assert selector.default_name == "one"
    assert selector.resolve(None).name == "one"
    assert selector.resolve("two").name == "two"
    assert selector.resolve(str(tmp_path / "two.json")).name == "two"
    assert selector.describe() == ["one  * first", "two"]
    with pytest.raises(ScenarioError):
        selector.get("three")


def test_selector_rejects_two_defaults(tmp_path):
    _write(tmp_path, "one", default=True)
    _write(tmp_path, "two", default=True)
    with pytest.raises(RuntimeError):
        ScenarioSelector(str(tmp_path))


def test_selector_rejects_duplicate_names(tmp_path):
    _write(tmp_path, "one")
    (tmp_path / "copy.json").write_text(json.dumps({"name": "one"}))
    with pytest.raises(RuntimeError):
        ScenarioSelector(str(tmp_path))


def test_homogeneous_fixed_point_run():
    sc = ScenarioSelector().get("bismut-su2")
    lab = laboratory_for(sc)
    assert isinstance(lab, HomogeneousLaboratory)
    report = lab.run()
    assert report.failure is None
    assert report.exit_code == EXIT_PASS
    assert all(r.verdict is Verdict.PASS for r in report.reports)
    assert report.metadata["initial"]["k"] == pytest.approx(2 * math.sqrt(2))
    assert set(report.feedback["homogeneous"]) == {"series", "curvature_bounds", "grid_consistency"}


def test_collapse_is_a_numerical_failure():
    sc = parse({"name": "collapse", "backend": "homogeneous", "homogeneous": {"horizon": 0.3}})
    report = laboratory_for(sc).run()
    assert report.failure["error"] == "CollapseError"
    assert report.exit_code == EXIT_FAILURE
    assert report.reports == ()


def test_step_budget_is_a_numerical_failure():
    sc = ScenarioSelector().get("flat-trivial").with_overrides(
        **{"geometry.points": 8, "control.cadence": 8, "control.max_steps": 1}
    )
    report = laboratory_for(sc).run()
    assert report.failure["error"] == "StepBudgetError"
    assert report.exit_code == EXIT_FAILURE
    assert report.reports == ()


def test_small_grid_run():
    sc = ScenarioSelector().get("flat-trivial").with_overrides(
        **{
            "geometry.points": 8,
            "control.cadence": 8,
            "estimates.harnack.samples": 8,
        }
    )
    report = laboratory_for(sc).run()
    assert report.failure is None
    names = {r.check for r in report.reports}
    assert {"hamilton", "frequency_monotonicity"} <= names
    assert report.metadata["terminal_time"] > 0
    assert report.frequency is not None


def test_outputs_are_reproducible(tmp_path):
    sc = ScenarioSelector().get("bismut-su2")
    for out in ("a", "b"):
        lab = laboratory_for(sc)
        write_run(lab, lab.run(), str(tmp_path / out))
    for name in ("report.json", "trajectory.json", "series/homogeneous_series.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["scenario"] == "bismut-su2"
    assert report["verdict"] == "pass"
    assert report["exit_code"] == 0


def test_write_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(str(path), {"t": np.array([0.0, 0.5]), "x": np.array([1.0, 1 / 3])})
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x"
    assert float(lines[2].split(",")[1]) == 1 / 3
    with pytest.raises(ValueError):
        write_csv(str(path), {"t": np.zeros(2), "x": np.zeros(3)})


def test_slug():
    assert slug("liyau[alpha=2]") == "liyau_alpha_2"
    assert slug("harnack[ricci_flow,alpha=1.5]") == "harnack_ricci_flow_alpha_1.5"


def test_observed_order():
    h = np.array([0.4, 0.2, 0.1])
    assert observed_order(h, 3 * h**2) == pytest.approx(2.0)
    assert observed_order(h, np.array([1.0, 0.0, 1.0])) is None


def test_refine_homogeneous():
    table = refine(ScenarioSelector().get("bismut-su2"), 2)
    assert [r["level"] for r in table.rows] == [0, 1]
    assert not table.partial
    assert table.names
    assert all(table.orders[n] is None for n in table.names)
    with pytest.raises(ValueError):
        refine(ScenarioSelector().get("bismut-su2"), 1)


def _small_generalized_flow(**extra):
    return ScenarioSelector().get("generalized-flow").with_overrides(
        **{
            "geometry.points": 10,
            "control.cadence": 8,
            "heat.initial.params.amplitude": 0.1,
            **extra,
        }
    )


def test_refine_generalized_flow():
    table = refine(_small_generalized_flow(), 3)
    assert not table.partial
    assert [r["level"] for r in table.rows] == [0, 1, 2]
    lemma = [n for n in table.names if n.startswith("lemma_identity")]
    assert lemma
    for name in lemma + ["measure_evolution", "i_prime_identity"]:
        assert table.orders[name] >= 1.9, (name, table.orders[name])


def test_report_does_not_depend_on_threads(tmp_path):
    sc = _small_generalized_flow(**{"estimates.harnack.samples": 8})
    before = get_threads()
    try:
        for threads in (1, 8):
            set_threads(threads)
            lab = laboratory_for(sc)
            write_run(lab, lab.run(), str(tmp_path / str(threads)))
    finally:
        set_threads(before)
    assert (tmp_path / "1" / "report.json").read_bytes() == (tmp_path / "8" / "report.json").read_bytes()


def test_cli_list_scenarios():
    result = CliRunner().invoke(main, ["list-scenarios"])
    assert result.exit_code == 0
    rows = [line.split() for line in result.output.splitlines()]
    assert ["generalized-flow", "*"] == rows[[r[0] for r in rows].index("generalized-flow")][:2]
    assert "bismut-su2" in [r[0] for r in rows]


def test_cli_run(tmp_path):
    out = tmp_path / "out"
    result = CliRunner().invoke(main, ["run", "--config", "bismut-su2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "bismut-su2: pass (exit 0)" in result.output
    assert (out / "report.json").exists()
    assert (out / "trajectory.json").exists()


def test_cli_unknown_scenario(tmp_path):
    result = CliRunner().invoke(main, ["run", "--config", "no-such-scenario", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "no bundled scenario" in result.output


def test_cli_threads_option(tmp_path):
    before = get_threads()
    try:
        result = CliRunner().invoke(
            main, ["run", "--config", "bismut-su2", "--threads", "2", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        assert get_threads() == 2
    finally:
        set_threads(before)
    result = CliRunner().invoke(main, ["run", "--config", "bismut-su2", "--threads", "0", "--out", str(tmp_path)])
    assert result.exit_code == 2
