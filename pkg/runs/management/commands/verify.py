from runs.management.base import LabCommand
from services.suites import suite_ids


class Command(LabCommand):
    help = f"Run a verification suite ({', '.join(suite_ids())}); exits 1 when a check fails"
    command = 'verify'
    needs_config = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--suite', required=True, help='Suite id')

    def run(self, service, options):
        seed = options['seed'] if options['seed'] is not None else 0
        self.config = {'suite': options['suite'], 'seed': seed}
        return service.verify(options['suite'], seed)
