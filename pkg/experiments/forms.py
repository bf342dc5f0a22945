from django import forms

from autodiff.exceptions import ConfigurationError
from experiments.training import TASK_DEFAULTS, TrainConfig
from uncertainty.losses import LossConfig, LossKind
from uncertainty.methods import UqMethodConfig
from uncertainty.networks import Task, UqMethod


def _choices(enum):
    return [(member.value, member.value) for member in enum]


class TrainConfigForm(forms.Form):
    """Validates a flat key/value training config; omitted fields take the task defaults."""

    task = forms.ChoiceField(choices=_choices(Task))
    method = forms.ChoiceField(choices=_choices(UqMethod), required=False)
    loss = forms.ChoiceField(choices=_choices(LossKind), required=False)
    beta = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    epochs = forms.IntegerField(required=False, min_value=1)
    batch_size = forms.IntegerField(required=False, min_value=1)
    hidden_units = forms.CharField(required=False)
    learning_rate = forms.FloatField(required=False, min_value=0.0)
    adam_beta1 = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    adam_beta2 = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    seed = forms.IntegerField(required=False, min_value=0)
    forward_passes = forms.IntegerField(required=False, min_value=1)
    ensemble_size = forms.IntegerField(required=False, min_value=1)
    dropout_p = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    dropconnect_p = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    softmax_samples = forms.IntegerField(required=False, min_value=1)
    log_every = forms.IntegerField(required=False, min_value=0)

    def clean_hidden_units(self):
        raw = self.cleaned_data.get('hidden_units')
        if not raw:
            return None
        try:
            units = tuple(int(part) for part in raw.split(',') if part.strip())
        except ValueError:
            raise forms.ValidationError("hidden_units must be a comma-separated list of integers") from None
        if not units or min(units) < 1:
            raise forms.ValidationError("hidden_units must list positive widths")
        return units

    def clean(self):
        cleaned_data = super().clean()
        task = cleaned_data.get('task')
        loss = cleaned_data.get('loss')
        beta = cleaned_data.get('beta')

        if task and not loss:
            loss = TASK_DEFAULTS[Task(task)]['loss'].kind.value
            cleaned_data['loss'] = loss
        if loss == LossKind.BETA_NLL.value and beta is None:
            raise forms.ValidationError("beta_nll needs a beta value.")
        if loss and loss != LossKind.BETA_NLL.value and beta is not None:
            raise forms.ValidationError("beta is only used by beta_nll.")
        if task and loss and (loss == LossKind.SOFT_CE.value) != (task == Task.CLASSIFICATION.value):
            raise forms.ValidationError(f"{loss} loss cannot train a {task} model.")

        for name in ('dropout_p', 'dropconnect_p', 'adam_beta1', 'adam_beta2'):
            value = cleaned_data.get(name)
            if value is not None and value >= 1.0:
                self.add_error(name, "Must be below 1.")
        if cleaned_data.get('learning_rate') == 0.0:
            self.add_error('learning_rate', "Must be positive.")

        return cleaned_data

    def to_config(self, seed_override=None):
        if not self.is_valid():
            raise ConfigurationError(self.errors.as_text())
        data = {key: value for key, value in self.cleaned_data.items() if value not in (None, '')}
        task = Task(data.pop('task'))
        uq_fields = {key: data.pop(key) for key in ('forward_passes', 'ensemble_size', 'dropout_p', 'dropconnect_p')
                     if key in data}
        uq = UqMethodConfig(UqMethod(data.pop('method', UqMethod.BASELINE.value)), **uq_fields)
        loss = LossConfig(LossKind(data.pop('loss')), data.pop('beta', None))
        if seed_override is not None:
            data['seed'] = seed_override
        return TrainConfig.for_task(task, uq=uq, loss=loss, **data)
