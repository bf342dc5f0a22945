from django.db import models


class TrainingRun(models.Model):
    PENDING = 'pending'
    COMPLETED = 'completed'
    FAILED = 'failed'
    STATUS_CHOICES = (
        (PENDING, 'Pending'),
        (COMPLETED, 'Completed'),
        (FAILED, 'Failed'),
    )

    task = models.CharField(max_length=20)
    method = models.CharField(max_length=20)
    loss = models.CharField(max_length=20)
    beta = models.FloatField(null=True, blank=True)
    seed = models.IntegerField(default=0)
    epochs = models.PositiveIntegerField()
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default=PENDING)
    final_loss = models.FloatField(null=True, blank=True)
    artifact_dir = models.CharField(max_length=500)
    config_digest = models.CharField(max_length=64, db_index=True)
    error = models.TextField(blank=True, default='')
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ('-created_at',)

    def __str__(self):
        return f"Run {self.id} - {self.method}/{self.loss} seed {self.seed} ({self.status})"

    def is_finished(self):
        return self.status != self.PENDING
