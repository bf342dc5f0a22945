from django.contrib import admin
from unfold.admin import ModelAdmin
from unfold.contrib.filters.admin import ChoicesDropdownFilter, RangeDateTimeFilter, RangeNumericFilter

from .models import TrainingRun


@admin.register(TrainingRun)
class TrainingRunAdmin(ModelAdmin):
    list_display = ('id', 'task', 'method', 'loss', 'beta', 'seed', 'epochs', 'status', 'final_loss_display',
                    'created_at')
    list_filter = (
        'task', 'method', 'loss',
        ('status', ChoicesDropdownFilter),
        ('final_loss', RangeNumericFilter),
        ('created_at', RangeDateTimeFilter),
    )
    list_filter_submit = True
    search_fields = ('config_digest', 'artifact_dir')
    readonly_fields = ('config_digest', 'created_at', 'finished_at', 'error')
    ordering = ('-created_at',)

    def final_loss_display(self, obj):
        return '{:.4f}'.format(obj.final_loss) if obj.final_loss is not None else '-'

    final_loss_display.admin_order_field = 'final_loss'
    final_loss_display.short_description = 'Final Loss'
