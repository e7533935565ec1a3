from runs.management.base import LabCommand


class Command(LabCommand):
    help = 'Solve one Lie candidate and write lie.json with its Floquet verdict'
    command = 'lie'
