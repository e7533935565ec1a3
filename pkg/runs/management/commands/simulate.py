from runs.management.base import LabCommand


class Command(LabCommand):
    help = 'Integrate one model, write trajectory.csv and phase.csv, and report its limit cycle'
    command = 'simulate'
