"""
Tests for scene parsing (scene.py) and settings resolution (settings.py).
"""

from pathlib import Path

import numpy as np
import pytest

from spectral_contour.errors import ParseError, ValidationError
from spectral_contour.scene import parse_scene, scene_from_dict
from spectral_contour.settings import DEFAULT_TOLERANCES, merge_tolerances, resolve_settings

SCENES_DIR = Path(__file__).resolve().parents[2] / 'scenes'

CIRCLE = {'contour': {'family': 'circle', 'radius': 1.0}}


class TestSceneSchema:
    """Tests for scene validation."""

    def test_minimal_circle(self):
        scene = scene_from_dict(CIRCLE)
        assert scene.contour.center == 0j
        assert scene.functions == []
        assert scene.matrix is None

    def test_empty_document(self):
        scene = scene_from_dict(None)
        assert scene.contour is None

    @pytest.mark.parametrize('raw, expected', [
        ([1.0, 2.0], 1 + 2j),
        (3, 3 + 0j),
        (-0.5, -0.5 + 0j),
    ])
    def test_complex_values(self, raw, expected):
        scene = scene_from_dict({'contour': {'family': 'circle', 'radius': 1.0, 'center': raw}})
        assert scene.contour.center == expected

    def test_bad_complex_pair(self):
        with pytest.raises(ValidationError) as exc_info:
            scene_from_dict({'contour': {'family': 'circle', 'radius': 1.0, 'center': [1, 2, 3]}})
        assert any(p.startswith('contour.center') for p in exc_info.value.problems)

    def test_unknown_key(self):
        with pytest.raises(ValidationError) as exc_info:
            scene_from_dict({**CIRCLE, 'colour': 'red'})
        assert any(p.startswith('colour') for p in exc_info.value.problems)

    def test_family_fields(self):
        with pytest.raises(ValidationError) as exc_info:
            scene_from_dict({'contour': {'family': 'ellipse', 'a': 2.0}})
        assert any('needs b' in p for p in exc_info.value.problems)

    def test_all_problems_listed(self):
        with pytest.raises(ValidationError) as exc_info:
            scene_from_dict({'contour': {'family': 'hexagon'}, 'nodes': 'many', 'ensemble': {'count': 0}})
        assert len(exc_info.value.problems) >= 3

    def test_non_square_matrix(self):
        with pytest.raises(ValidationError):
            scene_from_dict({**CIRCLE, 'matrix': {'real': [[1.0, 2.0], [3.0]]}})

    def test_matrix_with_imaginary_part(self):
        scene = scene_from_dict({**CIRCLE, 'matrix': {'real': [[1.0, 0.0], [0.0, 1.0]],
                                                      'imag': [[0.0, 1.0], [0.0, 0.0]]}})
        np.testing.assert_array_equal(scene.matrix.array(), [[1, 1j], [0, 1]])

    def test_unknown_tolerance(self):
        with pytest.raises(ValidationError):
            scene_from_dict({**CIRCLE, 'tolerances': {'closeness': 1e-3}})

    def test_ensemble_degree_limit(self):
        with pytest.raises(ValidationError):
            scene_from_dict({**CIRCLE, 'ensemble': {'count': 10, 'dims': [2], 'degree': 17, 'seed': 1}})

    def test_fourier_contour(self):
        scene = scene_from_dict({'contour': {'family': 'fourier', 'coefficients': [[1, 1.0, 0.0], [-2, 0.1, 0.0]]}})
        spec = scene.contour.to_spec(64)
        assert spec.family == 'fourier'
        assert spec.nodes == 64

    def test_functions(self):
        scene = scene_from_dict({**CIRCLE, 'functions': [{'coefficients': [[0.0, 1.0], 2.0], 'center': [1.0, 0.0]}]})
        p = scene.polynomials()[0]
        assert p.coefficients == (1j, 2 + 0j)
        assert p(np.array([1.0]))[0] == 1j


class TestSceneHelpers:

    def test_digest_is_stable(self):
        assert scene_from_dict(CIRCLE).digest == scene_from_dict(dict(CIRCLE)).digest
        other = scene_from_dict({'contour': {'family': 'circle', 'radius': 2.0}})
        assert other.digest != scene_from_dict(CIRCLE).digest

    def test_require_lists_missing_blocks(self):
        scene = scene_from_dict(CIRCLE)
        scene.require('convexity')
        with pytest.raises(ValidationError) as exc_info:
            scene.require('calculus')
        assert exc_info.value.problems == ["matrix: required by 'calculus'"]

    def test_ensemble_stands_in_for_matrix_in_calculus(self):
        ensemble = {'count': 4, 'dims': [2], 'degree': 2, 'seed': 1}
        scene_from_dict({**CIRCLE, 'ensemble': ensemble}).require('calculus')

    def test_scale_fractions(self):
        ensemble = {'count': 4, 'dims': [2], 'degree': 2, 'seed': 1}
        assert scene_from_dict({**CIRCLE, 'ensemble': ensemble}).ensemble.fractions() == [0.9]
        straddling = scene_from_dict({**CIRCLE, 'ensemble': {**ensemble, 'scale_fractions': [0.5, 1.2]}})
        assert straddling.ensemble.fractions() == [0.5, 1.2]
        with pytest.raises(ValidationError):
            scene_from_dict({**CIRCLE, 'ensemble': {**ensemble, 'scale_fractions': [0.0]}})

    def test_extremal_seed_from_command_line(self):
        scene = scene_from_dict({**CIRCLE, 'matrix': {'real': [[0.0]]}})
        with pytest.raises(ValidationError) as exc_info:
            scene.require('extremal')
        assert exc_info.value.problems == ["seed: required by 'extremal'"]
        scene.require('extremal', seed=4)

    def test_unknown_command(self):
        with pytest.raises(ValidationError):
            scene_from_dict(CIRCLE).require('plot')

    def test_settings_layer(self):
        scene = scene_from_dict({**CIRCLE, 'nodes': 512, 'seed': 9})
        assert scene.settings_layer() == {'nodes': 512, 'seed': 9, 'n_jobs': None}


class TestParseScene:

    def test_bundled_scenes(self):
        paths = sorted(SCENES_DIR.glob('*.yaml'))
        assert paths
        for path in paths:
            parse_scene(path)

    def test_tab_indentation(self, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text('contour:\n\tfamily: circle\n')
        with pytest.raises(ParseError) as exc_info:
            parse_scene(path)
        assert exc_info.value.line == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError) as exc_info:
            parse_scene(tmp_path / 'absent.yaml')
        assert exc_info.value.line is None

    def test_document_must_be_mapping(self, tmp_path):
        path = tmp_path / 'list.yaml'
        path.write_text('- 1\n- 2\n')
        with pytest.raises(ValidationError):
            parse_scene(path)


class TestSettings:
    """Precedence: command line > scene > environment > default."""

    def test_defaults(self, monkeypatch):
        for name in ('NODES', 'SEED', 'JOBS', 'LOG_LEVEL'):
            monkeypatch.delenv(f'SPECTRAL_CONTOUR_{name}', raising=False)
        settings = resolve_settings()
        assert settings.nodes == 256
        assert settings.seed == 0
        assert settings.n_jobs == 1
        assert settings.tolerances == DEFAULT_TOLERANCES

    def test_precedence(self, monkeypatch):
        monkeypatch.setenv('SPECTRAL_CONTOUR_NODES', '512')
        monkeypatch.setenv('SPECTRAL_CONTOUR_SEED', '5')
        assert resolve_settings().nodes == 512
        settings = resolve_settings(scene={'nodes': 1024, 'seed': None})
        assert settings.nodes == 1024
        assert settings.seed == 5
        assert resolve_settings(cli={'nodes': 64}, scene={'nodes': 1024}).nodes == 64

    def test_bad_environment_value(self, monkeypatch):
        monkeypatch.setenv('SPECTRAL_CONTOUR_JOBS', 'four')
        assert resolve_settings().n_jobs == 1

    def test_output_options(self, tmp_path):
        settings = resolve_settings(cli={'out_dir': tmp_path, 'write_csv': True})
        assert settings.out_dir == tmp_path
        assert settings.write_csv

    def test_tolerance_overrides(self):
        merged = merge_tolerances({'plemelj': 1e-4})
        assert merged['plemelj'] == 1e-4
        assert merged['row_sum'] == DEFAULT_TOLERANCES['row_sum']
        with pytest.raises(KeyError):
            merge_tolerances({'closeness': 1.0})


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
