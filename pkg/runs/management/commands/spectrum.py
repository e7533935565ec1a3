from runs.management.base import LabCommand


class Command(LabCommand):
    help = 'Tabulate Lie roots level by level into spectrum.csv'
    command = 'spectrum'
