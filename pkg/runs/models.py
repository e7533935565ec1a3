from django.db import models


class RunRecord(models.Model):
    """One ledger row per command invocation."""

    STATUS_OK = 'ok'
    STATUS_CHECK_FAILED = 'check_failed'
    STATUS_CONFIG_ERROR = 'config_error'
    STATUS_RUNTIME_ERROR = 'runtime_error'
    STATUS_CHOICES = [
        (STATUS_OK, 'OK'),
        (STATUS_CHECK_FAILED, 'Check failed'),
        (STATUS_CONFIG_ERROR, 'Config error'),
        (STATUS_RUNTIME_ERROR, 'Runtime error'),
    ]

    command = models.CharField(max_length=20)
    model_id = models.CharField(max_length=50, blank=True)
    config_hash = models.CharField(max_length=64, blank=True)
    # u64 seeds overflow a signed SQL integer
    seed = models.CharField(max_length=20, blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default=STATUS_OK)
    output_path = models.CharField(max_length=500, blank=True)
    summary = models.JSONField(default=dict, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.command} {self.model_id or '-'} [{self.status}]"

    class Meta:
        ordering = ['-created_at']
        verbose_name = "Run record"
        verbose_name_plural = "Run records"
