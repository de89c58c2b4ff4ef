import json

import pytest

from .block_model import BlockStructure, EntryLaw
from .config import RunConfig, parse_config
from .errors import ConfigError, ParseError, ValidationError
from .stieltjes_solver import SolverParams


def config_text(**fields) -> str:
    document = {"alpha": [0.3, 0.7], "g": [[1, 2], [3, 4]]}
    document.update(fields)
    return json.dumps(document)


class TestParseConfig:
    def test_two_block_defaults(self):
        config = parse_config(config_text())
        assert config.structure == BlockStructure.from_arrays([0.3, 0.7], [[1, 2], [3, 4]])
        assert config.structure.distribution is EntryLaw.COMPLEX_GAUSSIAN
        assert config.N == 1000
        assert config.trials == 20
        assert config.seed == 0
        assert config.grid_points == 513
        assert config.bins == 50
        assert config.solver == SolverParams()
        assert config.output_path == "-"

    def test_single_block(self):
        config = parse_config('{"alpha": [1.0], "g": [[1.0]]}')
        assert config.structure.D == 1

    def test_all_fields(self):
        config = parse_config(
            config_text(
                distribution="rademacher",
                N=200,
                trials=3,
                seed=2**64 - 1,
                grid_points=65,
                bins=10,
                solver={"tol": 1e-10, "max_iter": 5000, "t_min": 1e-5},
                output_path="out.csv",
            )
        )
        assert config.structure.distribution is EntryLaw.RADEMACHER
        assert (config.N, config.trials, config.grid_points, config.bins) == (200, 3, 65, 10)
        assert config.seed == 2**64 - 1
        assert config.solver == SolverParams(tol=1e-10, max_iter=5000, t_min=1e-5)
        assert config.output_path == "out.csv"

    def test_zero_g_entry(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config('{"alpha":[0.5,0.5],"g":[[1,0],[1,1]]}')
        assert excinfo.value.field == "g"

    @pytest.mark.parametrize(
        ("text", "field"),
        [
            ('{"alpha": [0.5, 0.6], "g": [[1, 1], [1, 1]]}', "alpha"),
            ('{"alpha": [], "g": [[1]]}', "alpha"),
            ('{"alpha": [1.0], "g": [[1, 2]]}', "g"),
            ('{"alpha": [1.0]}', "g"),
            ('{"g": [[1.0]]}', "alpha"),
            ('{"alpha": [1.0], "g": [["x"]]}', "g[0]"),
            ('{"alpha": [true], "g": [[1]]}', "alpha"),
            ('[1, 2]', "<root>"),
        ],
    )
    def test_invalid_structure(self, text, field):
        with pytest.raises(ValidationError) as excinfo:
            parse_config(text)
        assert excinfo.value.field == field

    @pytest.mark.parametrize(
        ("fields", "field"),
        [
            ({"colour": "red"}, "colour"),
            ({"solver": {"tolerance": 1e-9}}, "solver.tolerance"),
            ({"solver": {"max_iter": 1.5}}, "solver.max_iter"),
            ({"solver": {"damping": 2.0}}, "solver"),
            ({"solver": []}, "solver"),
            ({"distribution": "cauchy"}, "distribution"),
            ({"N": 5}, "N"),
            ({"N": 1000.0}, "N"),
            ({"trials": 0}, "trials"),
            ({"seed": -1}, "seed"),
            ({"seed": 2**64}, "seed"),
            ({"grid_points": 8}, "grid_points"),
            ({"bins": 0}, "bins"),
            ({"output_path": 3}, "output_path"),
            ({"output_path": ""}, "output_path"),
        ],
    )
    def test_invalid_fields(self, fields, field):
        with pytest.raises(ValidationError) as excinfo:
            parse_config(config_text(**fields))
        assert excinfo.value.field == field
        assert str(excinfo.value).startswith(f"{field}: ")

    def test_duplicate_keys(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config('{"alpha": [1.0], "g": [[1.0]], "N": 10, "N": 20}')
        assert excinfo.value.field == "N"

    def test_malformed_json_reports_position(self):
        with pytest.raises(ParseError) as excinfo:
            parse_config('{\n  "alpha": [1.0],\n  "g": [[1.0]\n}')
        assert excinfo.value.line == 4
        assert excinfo.value.column == 1
        assert isinstance(excinfo.value, ConfigError)


class TestRunConfig:
    def test_with_overrides(self):
        config = parse_config(config_text())
        changed = config.with_overrides(seed=7, trials=None, output_path="x.json")
        assert changed.seed == 7
        assert changed.trials == config.trials
        assert changed.output_path == "x.json"

    def test_overrides_are_validated(self):
        config = parse_config(config_text())
        with pytest.raises(ValidationError):
            config.with_overrides(grid_points=3)

    def test_n_must_cover_every_block(self):
        structure = BlockStructure.from_arrays([1 / 12] * 12, [[1.0] * 12] * 12)
        assert RunConfig(structure, N=12).N == 12
        with pytest.raises(ValidationError) as excinfo:
            RunConfig(structure, N=11)
        assert excinfo.value.field == "N"
