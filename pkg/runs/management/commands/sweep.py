from runs.management.base import LabCommand


class Command(LabCommand):
    help = 'Evaluate an observable over a parameter grid into sweep.csv'
    command = 'sweep'
