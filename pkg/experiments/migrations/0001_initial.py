# Generated by Django 5.1.1 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('task', models.CharField(max_length=20)),
                ('method', models.CharField(max_length=20)),
                ('loss', models.CharField(max_length=20)),
                ('beta', models.FloatField(blank=True, null=True)),
                ('seed', models.IntegerField(default=0)),
                ('epochs', models.PositiveIntegerField()),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('completed', 'Completed'), ('failed', 'Failed')], default='pending', max_length=10)),
                ('final_loss', models.FloatField(blank=True, null=True)),
                ('artifact_dir', models.CharField(max_length=500)),
                ('config_digest', models.CharField(db_index=True, max_length=64)),
                ('error', models.TextField(blank=True, default='')),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ('-created_at',),
            },
        ),
    ]
