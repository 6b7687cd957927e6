"""
The end-to-end run: load a model, build a teacher, learn, complete and evaluate.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .belief import cutoff_strategies, explore, reachable_beliefs, solve, target_observations
from .conf import fsc_settings
from .controller import (
    Fsc, apply_base, apply_h1, apply_h2, count_outputs, export_dot, fsc_to_json, resolve_dont_care,
)
from .evaluator import induce_mc, simulate, value
from .exceptions import ConfigError, ModelIOError
from .learner import minimize, run_learning
from .pomdp import load_model, parse_objective
from .schemas import PipelineReport, ValueReport
from .teachers import (
    BeliefTeacher, TableTeacher, load_strategy_table, materialize_table, table_equivalence_query,
    write_strategy_table,
)

logger = logging.getLogger(__name__)

MODES = ('table', 'belief')
HEURISTICS = ('base', 'h1', 'h2')
PORTFOLIO = 'portfolio'


@dataclass(frozen=True)
class RunConfig:
    model_path: str
    objective: str
    mode: str = 'belief'
    heuristic: str = PORTFOLIO
    table_path: Optional[str] = None
    max_beliefs: Optional[int] = None
    max_depth: Optional[int] = None
    cutoff_strategy: Optional[int] = None
    tolerance: Optional[float] = None
    seed: int = 0
    episodes: int = 0
    horizon: int = 200
    exact_minimize: bool = False
    fsc_out: Optional[str] = None
    dot_out: Optional[str] = None
    report_out: Optional[str] = None
    table_out: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError('unknown mode %r, expected one of %s' % (self.mode, ', '.join(MODES)))
        if self.heuristic not in HEURISTICS + (PORTFOLIO,):
            raise ConfigError('unknown heuristic %r' % self.heuristic)
        if self.mode == 'table' and not self.table_path:
            raise ConfigError('table mode needs a strategy table')
        if self.tolerance is not None and not self.tolerance > 0:
            raise ConfigError('tolerance must be positive')
        if self.max_beliefs is not None and self.max_beliefs < 1:
            raise ConfigError('max_beliefs must be at least 1')
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError('max_depth must not be negative')
        if self.episodes < 0 or self.horizon < 0:
            raise ConfigError('episodes and horizon must not be negative')
        if self.table_out and self.mode != 'belief':
            raise ConfigError('a strategy table can only be written in belief mode')

    @property
    def heuristics(self):
        return HEURISTICS if self.heuristic == PORTFOLIO else (self.heuristic,)


@dataclass
class PipelineResult:
    report: PipelineReport
    fsc: Fsc
    learned: Fsc
    controllers: Dict[str, Fsc] = field(default_factory=dict)
    reports: List[ValueReport] = field(default_factory=list)


def complete(fsc: Fsc, heuristic, cutoffs, pomdp, exact=False) -> Fsc:
    """Turn a learned controller into an applicable one."""
    if heuristic == 'base':
        completed = apply_base(fsc, cutoffs)
    elif heuristic == 'h1':
        completed = apply_base(apply_h1(fsc), cutoffs)
    elif heuristic == 'h2':
        completed = apply_h2(fsc, exact=exact)
    else:
        raise ConfigError('unknown heuristic %r' % heuristic)
    if fsc_settings.DONT_CARE_POLICY == 'first':
        completed = resolve_dont_care(completed, pomdp)
    return completed


def choose(reports, objective):
    """Best value, then fewer nodes, then base before h1 before h2."""
    def key(report):
        result = report.value
        if not math.isinf(result):
            result = round(result, 9)
        return (-result if objective.maximizing else result, report.fsc_nodes, HEURISTICS.index(report.heuristic))
    return min(reports, key=key)


def run_pipeline(config: RunConfig) -> PipelineResult:
    overrides = {}
    if config.tolerance is not None:
        overrides['VALUE_TOLERANCE'] = config.tolerance
    with fsc_settings.override(**overrides):
        return _run(config)


def _run(config: RunConfig) -> PipelineResult:
    pomdp = load_model(config.model_path)
    objective = parse_objective(config.objective, pomdp)
    cutoffs = cutoff_strategies(pomdp)
    extras = {}
    if config.mode == 'belief':
        target_observations(pomdp, objective)
        bmdp = explore(pomdp, config.max_beliefs, config.max_depth, config.cutoff_strategy)
        strategy = solve(bmdp, pomdp, objective, cutoffs)
        teacher = BeliefTeacher(pomdp, bmdp, strategy)
        reachable = reachable_beliefs(bmdp, strategy)
        extras.update(
            strategy_value=strategy.value,
            belief_mc_states=len(reachable),
            cutoff_beliefs=len(bmdp.cutoffs),
        )
    else:
        table = load_strategy_table(config.table_path, pomdp)
        teacher = TableTeacher(pomdp, table, chi_mode='strict')

    learning = run_learning(teacher)
    minimized = minimize(learning.fsc, exact=config.exact_minimize)
    logger.info('learned %d nodes, %d after minimisation', learning.fsc.size, minimized.size)

    controllers = {}
    reports = []
    for heuristic in config.heuristics:
        completed = complete(minimized, heuristic, cutoffs, pomdp, exact=config.exact_minimize)
        mc = induce_mc(pomdp, completed)
        controllers[heuristic] = (completed, mc)
        reports.append(value(mc, pomdp, objective, heuristic=heuristic))
    chosen = choose(reports, objective)
    fsc, mc = controllers[chosen.heuristic]

    if config.mode == 'table':
        equivalent = table_equivalence_query(pomdp, table, fsc, chi_mode='skip') is None
    else:
        equivalent = teacher.equivalence_query(minimized) is None

    simulation = None
    if config.episodes:
        targets = mc.lift(pomdp.resolve_labels(objective.target))
        simulation = simulate(mc, config.seed, config.episodes, config.horizon, targets=targets)
    report = PipelineReport(
        model=str(config.model_path),
        objective=str(objective),
        mode=config.mode,
        heuristic=config.heuristic,
        chosen=chosen.heuristic,
        value=chosen.value,
        fsc_nodes=fsc.size,
        learned_nodes=learning.fsc.size,
        learning_rounds=learning.rounds,
        learned_outputs=count_outputs(minimized),
        equivalent=equivalent,
        reports=reports,
        simulation=simulation,
        **extras
    )
    result = PipelineResult(
        report=report,
        fsc=fsc,
        learned=learning.fsc,
        controllers={name: completed for name, (completed, _) in controllers.items()},
        reports=reports,
    )
    _write_artifacts(config, result, teacher)
    return result


def _write(path, text):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(text)
    logger.info('wrote %s', path)


def report_json(report: PipelineReport) -> str:
    """The JSON report; wall times are left out so identical runs give identical files."""
    return report.model_dump_json(indent=2, exclude={'reports': {'__all__': {'wall_time'}}}) + '\n'


def _write_artifacts(config, result, teacher):
    try:
        if config.fsc_out:
            _write(config.fsc_out, fsc_to_json(result.fsc))
        if config.dot_out:
            _write(config.dot_out, export_dot(result.fsc))
        if config.report_out:
            _write(config.report_out, report_json(result.report))
        if config.table_out:
            depth = max(len(sequence) for _, sequence in teacher.representatives) + 1
            _write(config.table_out, write_strategy_table(materialize_table(teacher, depth)))
    except OSError as exc:
        raise ModelIOError('cannot write %s: %s' % (exc.filename, exc.strerror))
