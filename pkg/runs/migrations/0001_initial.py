# Generated by Django 5.2.7 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=20)),
                ('model_id', models.CharField(blank=True, max_length=50)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('seed', models.CharField(blank=True, max_length=20)),
                ('status', models.CharField(choices=[('ok', 'OK'), ('check_failed', 'Check failed'), ('config_error', 'Config error'), ('runtime_error', 'Runtime error')], default='ok', max_length=20)),
                ('output_path', models.CharField(blank=True, max_length=500)),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Run record',
                'verbose_name_plural': 'Run records',
                'ordering': ['-created_at'],
            },
        ),
    ]
