from django.apps import AppConfig


class AutodiffConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'autodiff'
    verbose_name = 'Tensors and reverse-mode differentiation'
