from django.apps import AppConfig


class FscDistillConfig(AppConfig):
    name = 'fsc_distill'
    verbose_name = 'FSC distillation'
