import json
import math
from pathlib import Path

from django import forms
from django.core.exceptions import ValidationError

from services.conf import default_tol
from services.exceptions import ConfigInvalid, UnknownModel
from services.lab_service import SWEEP_KINDS
from services.lie import LieModel
from services.systems import RUN_DEFAULTS, model_class, model_ids
from services.systems.oscillator import SERIES, CsOscillator

U64_MAX = 2 ** 64 - 1


def _finite(value, message):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ValidationError(message)
    return float(value)


def _number_list(value, name, positive=False, integer=False):
    if not isinstance(value, list):
        raise ValidationError(f"{name} must be a list")
    out = []
    for item in value:
        number = _finite(item, f"{name} entries must be finite numbers")
        if positive and not number > 0:
            raise ValidationError(f"{name} entries must be positive")
        if integer:
            if number != int(number) or number < 0:
                raise ValidationError(f"{name} entries must be non-negative integers")
            number = int(number)
        out.append(number)
    return out


def _positive(value, name):
    if value is not None and not value > 0:
        raise ValidationError(f"{name} must be positive")
    return value


class ConfigForm(forms.Form):
    """
    Base of every config form: only keys present in the submitted data, plus
    the defaults ``clean`` fills in, end up in the validated config.
    """

    filled = ()

    def validated(self):
        return {key: value for key, value in self.cleaned_data.items()
                if key in self.data or key in self.filled}


class ParamsForm(ConfigForm):
    pass


class NoParamsForm(ParamsForm):
    pass


class ToyOscillatorParamsForm(ParamsForm):
    omega0 = forms.FloatField(required=False)
    e0 = forms.FloatField(required=False)

    def clean_omega0(self):
        return _positive(self.cleaned_data.get('omega0'), 'omega0')


class RaindropParamsForm(ParamsForm):
    g = forms.FloatField(required=False)


class MonopoleParamsForm(ParamsForm):
    m = forms.FloatField(required=False)
    h = forms.FloatField(required=False)

    def clean_m(self):
        return _positive(self.cleaned_data.get('m'), 'm')


class TorusParamsForm(ParamsForm):
    h = forms.JSONField(required=False)
    K = forms.JSONField(required=False)
    w = forms.JSONField(required=False)
    c3 = forms.JSONField(required=False)

    def clean_h(self):
        h = self.cleaned_data.get('h')
        return None if h is None else _number_list(h, 'h')

    def clean_K(self):
        K = self.cleaned_data.get('K')
        if K is None:
            return None
        if not isinstance(K, list) or not all(isinstance(row, list) for row in K):
            raise ValidationError("K must be a list of rows")
        return [_number_list(row, 'K') for row in K]

    def clean_w(self):
        w = self.cleaned_data.get('w')
        return None if w is None else _number_list(w, 'w')

    def clean_c3(self):
        c3 = self.cleaned_data.get('c3')
        return None if c3 is None else _number_list(c3, 'c3')

    def clean(self):
        cleaned_data = super().clean()
        h = cleaned_data.get('h') or [1.0]
        n = len(h)
        K = cleaned_data.get('K')
        if K is not None and (len(K) != n or any(len(row) != n for row in K)):
            self.add_error('K', f"K must be {n}x{n}")
        elif K is not None and any(K[i][j] != K[j][i] for i in range(n) for j in range(n)):
            self.add_error('K', "K must be symmetric")
        for name in ('w', 'c3'):
            value = cleaned_data.get(name)
            if value is not None and len(value) != n:
                self.add_error(name, f"{name} needs {n} entries")
        return cleaned_data


class ConstantsTorusParamsForm(ParamsForm):
    h = forms.FloatField(required=False)
    omega0 = forms.FloatField(required=False)


class CircleParticleParamsForm(ParamsForm):
    m = forms.FloatField(required=False)
    h = forms.FloatField(required=False)
    L = forms.FloatField(required=False)

    def clean_m(self):
        return _positive(self.cleaned_data.get('m'), 'm')

    def clean_L(self):
        return _positive(self.cleaned_data.get('L'), 'L')


class ForcedOscillatorParamsForm(ParamsForm):
    m = forms.FloatField(required=False)
    k = forms.FloatField(required=False)
    omega = forms.FloatField(required=False)
    f = forms.FloatField(required=False)

    def clean_m(self):
        return _positive(self.cleaned_data.get('m'), 'm')

    def clean_k(self):
        k = self.cleaned_data.get('k')
        if k is not None and k < 0:
            raise ValidationError("k must not be negative")
        return k


class NonautonomousParamsForm(ParamsForm):
    omega0 = forms.FloatField(required=False)
    h0 = forms.FloatField(required=False)
    h1 = forms.FloatField(required=False)
    t_mid = forms.FloatField(required=False)
    width = forms.FloatField(required=False)

    def clean_omega0(self):
        return _positive(self.cleaned_data.get('omega0'), 'omega0')

    def clean_width(self):
        return _positive(self.cleaned_data.get('width'), 'width')


class KahlerLogParamsForm(ParamsForm):
    c_re = forms.FloatField(required=False)
    c_im = forms.FloatField(required=False)
    omega0 = forms.FloatField(required=False)


class ReducedMatrixParamsForm(ParamsForm):
    mu = forms.JSONField(required=False)

    def clean_mu(self):
        mu = self.cleaned_data.get('mu')
        if mu is None:
            return None
        mu = _number_list(mu, 'mu')
        if not mu or any(value == 0 for value in mu):
            raise ValidationError("mu must be a non-empty list of nonzero detunings")
        return mu


class MatrixParamsForm(ParamsForm):
    N = forms.IntegerField(required=False, min_value=1)
    levels = forms.JSONField(required=False)
    random_basis = forms.BooleanField(required=False)
    C_diag = forms.JSONField(required=False)

    def clean_levels(self):
        levels = self.cleaned_data.get('levels')
        if levels is None:
            return None
        levels = _number_list(levels, 'levels')
        if not levels:
            raise ValidationError("levels must not be empty")
        return levels

    def clean_C_diag(self):
        C_diag = self.cleaned_data.get('C_diag')
        return None if C_diag is None else _number_list(C_diag, 'C_diag')

    def clean(self):
        cleaned_data = super().clean()
        N, levels = cleaned_data.get('N'), cleaned_data.get('levels')
        if N is not None and levels is None:
            # equally spaced spectrum 0, 1, ..., N - 1
            cleaned_data['levels'] = [float(j) for j in range(N)]
            self.filled = ('levels',)
        elif N is not None and len(levels) != N:
            self.add_error('N', f"N={N} does not match {len(levels)} levels")
        levels = cleaned_data.get('levels')
        C_diag = cleaned_data.get('C_diag')
        if levels is not None and C_diag is not None and len(C_diag) != len(levels):
            self.add_error('C_diag', f"C_diag needs {len(levels)} entries")
        return cleaned_data

    def validated(self):
        params = super().validated()
        params.pop('N', None)
        return params


class FermionParamsForm(MatrixParamsForm):
    k = forms.IntegerField(required=False, min_value=1)

    def clean(self):
        cleaned_data = super().clean()
        k, levels = cleaned_data.get('k'), cleaned_data.get('levels')
        if k is not None and levels is not None and k > len(levels):
            self.add_error('k', f"k={k} exceeds the {len(levels)} levels")
        return cleaned_data


class CsOscillatorParamsForm(ParamsForm):
    omega0 = forms.FloatField(required=False)
    Nmax = forms.IntegerField(required=False, min_value=2)
    tail_tol = forms.FloatField(required=False)

    def clean_omega0(self):
        return _positive(self.cleaned_data.get('omega0'), 'omega0')

    def clean_tail_tol(self):
        tail_tol = self.cleaned_data.get('tail_tol')
        if tail_tol is not None and not 0 < tail_tol < 1:
            raise ValidationError("tail_tol must lie in (0, 1)")
        return tail_tol


class SpinParamsForm(ParamsForm):
    m = forms.IntegerField(required=False, min_value=1)
    lam = forms.FloatField(required=False)


PARAM_FORMS = {
    'euler': NoParamsForm,
    'linear_example': NoParamsForm,
    'toy_oscillator': ToyOscillatorParamsForm,
    'raindrop': RaindropParamsForm,
    'monopole': MonopoleParamsForm,
    'torus': TorusParamsForm,
    'torus_constants': ConstantsTorusParamsForm,
    'circle_particle': CircleParticleParamsForm,
    'forced_oscillator': ForcedOscillatorParamsForm,
    'nonautonomous_oscillator': NonautonomousParamsForm,
    'kahler_log': KahlerLogParamsForm,
    'matrix_reduced': ReducedMatrixParamsForm,
    'matrix': MatrixParamsForm,
    'fermion': FermionParamsForm,
    'cs_oscillator': CsOscillatorParamsForm,
    'spin': SpinParamsForm,
}


class RunConfigForm(ConfigForm):
    """
    Run configuration shared by every command. ``tol`` and ``t_end`` fall
    back to the lab default and the model's run default.
    """

    model = forms.ChoiceField(choices=[(model_id, model_id) for model_id in model_ids()])
    kappa = forms.FloatField()
    seed = forms.IntegerField(min_value=0, max_value=U64_MAX)
    tol = forms.FloatField(required=False)
    t_end = forms.FloatField(required=False)
    max_step = forms.FloatField(required=False)
    params = forms.JSONField(required=False)
    initial = forms.JSONField(required=False)
    analysis = forms.JSONField(required=False)
    phase_columns = forms.JSONField(required=False)

    def clean_kappa(self):
        kappa = self.cleaned_data.get('kappa')
        if not kappa > 0:
            raise ValidationError("kappa must be positive")
        return kappa

    def clean_tol(self):
        tol = self.cleaned_data.get('tol')
        if tol is not None and not 0 < tol < 1:
            raise ValidationError("tol must lie in (0, 1)")
        return tol

    def clean_t_end(self):
        return _positive(self.cleaned_data.get('t_end'), 't_end')

    def clean_max_step(self):
        return _positive(self.cleaned_data.get('max_step'), 'max_step')

    def clean_params(self):
        params = self.cleaned_data.get('params')
        if params is not None and not isinstance(params, dict):
            raise ValidationError("params must be an object")
        return params

    def clean_initial(self):
        initial = self.cleaned_data.get('initial')
        return None if initial is None else _number_list(initial, 'initial')

    def clean_analysis(self):
        analysis = self.cleaned_data.get('analysis')
        if analysis is None:
            return None
        if not isinstance(analysis, dict):
            raise ValidationError("analysis must be an object")
        unknown = set(analysis) - {'cycle', 'floquet', 'cycle_tol'}
        if unknown:
            raise ValidationError(f"Unknown analysis toggles: {', '.join(sorted(unknown))}")
        return analysis

    def clean_phase_columns(self):
        columns = self.cleaned_data.get('phase_columns')
        if columns is None:
            return None
        columns = _number_list(columns, 'phase_columns', integer=True)
        if len(columns) != 2 or columns[0] == columns[1]:
            raise ValidationError("phase_columns must name two different state components")
        return columns

    def clean(self):
        cleaned_data = super().clean()
        model_id = cleaned_data.get('model')
        if cleaned_data.get('tol') is None:
            cleaned_data['tol'] = default_tol()
        if cleaned_data.get('t_end') is None and model_id:
            cleaned_data['t_end'] = RUN_DEFAULTS[model_id]['t_end']
        self.filled = ('tol', 't_end')
        return cleaned_data


class LieConfigForm(RunConfigForm):
    level = forms.IntegerField(required=False, min_value=0)
    series = forms.ChoiceField(required=False, choices=[(s, s) for s in SERIES])
    continuation = forms.BooleanField(required=False)
    floquet = forms.BooleanField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        model_id = cleaned_data.get('model')
        if model_id and not issubclass(model_class(model_id), LieModel):
            self.add_error('model', f"{model_id} has no Lie solutions")
        if cleaned_data.get('series') == '':
            cleaned_data.pop('series')
        return cleaned_data


class SpectrumConfigForm(LieConfigForm):
    levels = forms.JSONField(required=False)
    mu = forms.JSONField(required=False)
    series = forms.JSONField(required=False)

    def clean_levels(self):
        levels = self.cleaned_data.get('levels')
        return [] if levels is None else _number_list(levels, 'levels', integer=True)

    def clean_mu(self):
        mu = self.cleaned_data.get('mu')
        return None if mu is None else _number_list(mu, 'mu', positive=True)

    def clean_series(self):
        series = self.cleaned_data.get('series')
        if series is None:
            return None
        if not isinstance(series, list) or not set(series) <= set(SERIES):
            raise ValidationError(f"series must be a list drawn from {SERIES}")
        return series

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('mu') and cleaned_data.get('model') != CsOscillator.model_id:
            self.add_error('mu', "mu grids apply to the cs_oscillator model only")
        self.filled = self.filled + ('levels',)
        return cleaned_data


class SweepConfigForm(LieConfigForm):
    kind = forms.ChoiceField(choices=[(kind, kind) for kind in SWEEP_KINDS])
    grid = forms.JSONField()
    max_level = forms.IntegerField(required=False, min_value=1)

    REQUIRED_AXES = {'deviation': 'epsilon', 'existence': 'mu'}

    def clean_grid(self):
        grid = self.cleaned_data.get('grid')
        if not isinstance(grid, dict):
            raise ValidationError("grid must map parameter names to value lists")
        for name, values in grid.items():
            if not isinstance(values, list) or not values:
                raise ValidationError(f"grid axis {name} must be a non-empty list")
            _number_list(values, f"grid.{name}")
        return grid

    def clean(self):
        # only deviation sweeps need a Lie model
        cleaned_data = RunConfigForm.clean(self)
        kind, grid = cleaned_data.get('kind'), cleaned_data.get('grid')
        axis = self.REQUIRED_AXES.get(kind)
        if axis and grid is not None and axis not in grid:
            self.add_error('grid', f"{kind} sweeps need a {axis!r} axis")
        model_id = cleaned_data.get('model')
        if kind == 'deviation' and model_id and not issubclass(model_class(model_id), LieModel):
            self.add_error('model', f"{model_id} has no Lie solutions")
        if kind == 'existence' and model_id != CsOscillator.model_id:
            self.add_error('model', "existence sweeps apply to the cs_oscillator model only")
        if cleaned_data.get('series') == '':
            cleaned_data.pop('series')
        return cleaned_data


COMMAND_FORMS = {
    'simulate': RunConfigForm,
    'lie': LieConfigForm,
    'spectrum': SpectrumConfigForm,
    'sweep': SweepConfigForm,
}


def _raise_first_error(form, prefix=''):
    for field, errors in form.errors.as_data().items():
        error = errors[0]
        path = f"{prefix}{field}" if field != '__all__' else prefix.rstrip('.') or 'config'
        if error.code == 'required':
            raise ConfigInvalid(f"Missing required key: {path}", path=path)
        if path == 'model' and error.code == 'invalid_choice':
            raise UnknownModel(f"Unknown model: {form.data.get('model')}", model=form.data.get('model'))
        raise ConfigInvalid(f"{path}: {' '.join(error.messages)}", path=path)


def validate_params(model_id, params):
    """Check a model's parameter block against its form."""
    params = params or {}
    form_class = PARAM_FORMS[model_id]
    unknown = set(params) - set(form_class.base_fields)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigInvalid(f"Unknown parameter {key!r} for {model_id}", path=f"params.{key}")
    form = form_class(data=params)
    if not form.is_valid():
        _raise_first_error(form, 'params.')
    return form.validated()


def validate_config(raw, command, seed=None, tol=None):
    """
    Validate a raw run configuration for ``command``.

    ``seed`` and ``tol`` given on the command line override the file.

    Raises:
        ConfigInvalid: with the dotted key path of the first offending entry
    """
    if not isinstance(raw, dict):
        raise ConfigInvalid("Run configuration must be a JSON object", path='config')
    data = dict(raw)
    if seed is not None:
        data['seed'] = seed
    if tol is not None:
        data['tol'] = tol
    form = COMMAND_FORMS[command](data=data)
    if not form.is_valid():
        _raise_first_error(form)
    config = form.validated()
    config['params'] = validate_params(config['model'], config.get('params'))
    return config


def load_config(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid(f"Config file not found: {path}", path='--config')
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"Config file {path} is not valid JSON: {exc}", path='config')
