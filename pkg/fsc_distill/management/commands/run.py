import logging
import sys

from django.core.management.base import BaseCommand, CommandError

from fsc_distill.evaluator import format_reports
from fsc_distill.exceptions import FscDistillError
from fsc_distill.pipeline import HEURISTICS, MODES, PORTFOLIO, RunConfig, run_pipeline
from fsc_distill.schemas import ErrorDocument

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Learn a finite-state controller for a POMDP strategy, complete it and evaluate it.'
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True, help='POMDP model file (JSON).')
        parser.add_argument('--objective', required=True,
                            help='maxprob:<label>, minprob:<label>, maxreward:<label> or minreward:<label>.')
        parser.add_argument('--mode', choices=MODES, default='belief')
        parser.add_argument('--table', dest='table_path', help='Strategy table (CSV) for table mode.')
        parser.add_argument('--heuristic', choices=HEURISTICS + (PORTFOLIO,), default=PORTFOLIO)
        parser.add_argument('--max-beliefs', type=int)
        parser.add_argument('--max-depth', type=int)
        parser.add_argument('--cutoff-strategy', type=int)
        parser.add_argument('--tolerance', type=float, help='Value iteration stopping threshold.')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--episodes', type=int, default=0, help='Monte Carlo episodes; 0 disables simulation.')
        parser.add_argument('--horizon', type=int, default=200)
        parser.add_argument('--exact-minimize', action='store_true')
        parser.add_argument('--fsc-out')
        parser.add_argument('--dot-out')
        parser.add_argument('--report-out')
        parser.add_argument('--table-out', help='Write the strategy table of the belief strategy (belief mode).')

    def handle(self, *args, **options):
        fields = (
            'table_path', 'mode', 'heuristic', 'max_beliefs', 'max_depth', 'cutoff_strategy', 'tolerance',
            'seed', 'episodes', 'horizon', 'exact_minimize', 'fsc_out', 'dot_out', 'report_out', 'table_out',
        )
        try:
            config = RunConfig(
                model_path=options['model'],
                objective=options['objective'],
                **{name: options[name] for name in fields}
            )
            result = run_pipeline(config)
        except FscDistillError as exc:
            logger.debug('run failed', exc_info=True)
            self.stderr.write(ErrorDocument.model_validate(exc.as_dict()).model_dump_json(exclude_none=True))
            if self._called_from_command_line:
                # stderr holds exactly the JSON line
                sys.exit(exc.exit_code)
            raise CommandError(str(exc), returncode=exc.exit_code)

        report = result.report
        self.stdout.write(format_reports(result.reports), ending='')
        self.stdout.write('chosen: %s, value %s, %d nodes (learned %d in %d rounds), equivalent: %s' % (
            report.chosen, report.value, report.fsc_nodes, report.learned_nodes, report.learning_rounds,
            'yes' if report.equivalent else 'no'))
        outputs = report.learned_outputs
        self.stdout.write('learned outputs: %d actions, %d chi, %d don\'t-care' % (
            outputs['action'], outputs['chi'], outputs['dont_care']))
        if report.strategy_value is not None:
            self.stdout.write('belief strategy value %s, belief MC %d states, %d cut-off beliefs' % (
                report.strategy_value, report.belief_mc_states, report.cutoff_beliefs))
        if report.simulation is not None:
            simulation = report.simulation
            self.stdout.write('simulation: %d episodes, frequency %.6f +- %.6f, reward %.6f +- %.6f' % (
                simulation.episodes, simulation.frequency, simulation.frequency_stderr,
                simulation.mean_reward, simulation.reward_stderr))
