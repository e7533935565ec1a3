import logging
from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from runs.forms import load_config, validate_config
from runs.models import RunRecord
from services.conf import output_dir
from services.exceptions import BudgetExceeded, CdLabError, ConfigInvalid, UnknownModel, UnknownSuite
from services.lab_service import LabService

logger = logging.getLogger(__name__)

CONFIG_ERRORS = (ConfigInvalid, UnknownSuite, UnknownModel, BudgetExceeded)
RUNTIME_ERRORS = (CdLabError, ArithmeticError, ValueError, np.linalg.LinAlgError)

EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


class LabCommand(BaseCommand):
    """
    Shared plumbing of the lab commands: flags, config validation, the run
    ledger and the mapping of errors to exit codes.
    """

    command = None
    needs_config = True

    def add_arguments(self, parser):
        parser.add_argument('--config', required=self.needs_config, help='Run configuration (JSON)')
        parser.add_argument('--out', help='Output directory (default: CD_LAB_OUTPUT_DIR/<command>)')
        parser.add_argument('--seed', type=int, help='RNG seed; overrides the config')
        parser.add_argument('--tol', type=float, help='Integrator tolerance; overrides the config')

    def run(self, service, options):
        """Execute the command and return its ResultBundle."""
        config = validate_config(load_config(options['config']), self.command, seed=options['seed'],
                                 tol=options['tol'])
        self.config = config
        return getattr(service, self.command)(config)

    def record(self, status, out, config=None, bundle=None, error=None):
        config = config or {}
        summary = {'error': str(error)} if error is not None else {}
        if bundle is not None:
            summary.update(passed=bundle.passed, cycles=len(bundle.cycles), candidates=len(bundle.candidates),
                           checks=len(bundle.checks))
        try:
            RunRecord.objects.create(
                command=self.command,
                model_id=config.get('model', ''),
                config_hash=bundle.config_hash if bundle is not None else '',
                seed='' if config.get('seed') is None else str(config['seed']),
                status=status,
                output_path=str(out),
                summary=summary,
            )
        except DatabaseError as e:
            logger.warning(f"Run ledger unavailable, {self.command} not recorded: {e}")

    def handle(self, *args, **options):
        out = Path(options['out']) if options['out'] else output_dir() / self.command
        self.config = {}
        service = LabService(output_dir=out)
        try:
            bundle = self.run(service, options)
        except CONFIG_ERRORS as e:
            self.record(RunRecord.STATUS_CONFIG_ERROR, out, self.config, error=e)
            raise CommandError(str(e), returncode=EXIT_CONFIG_ERROR)
        except RUNTIME_ERRORS as e:
            logger.error(f"{self.command} failed: {e}")
            self.record(RunRecord.STATUS_RUNTIME_ERROR, out, self.config, error=e)
            raise CommandError(str(e), returncode=EXIT_RUNTIME_ERROR)

        if not bundle.passed:
            failed = [check['name'] for check in bundle.checks if not check['passed']]
            self.record(RunRecord.STATUS_CHECK_FAILED, out, self.config, bundle)
            raise CommandError(f"{len(failed)} check(s) failed: {', '.join(failed)}", returncode=EXIT_CHECK_FAILED)
        self.record(RunRecord.STATUS_OK, out, self.config, bundle)
        self.stdout.write(self.style.SUCCESS(f"{self.command} finished; results in {out}"))
