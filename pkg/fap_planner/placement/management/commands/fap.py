from django.conf import settings
from django.core.management.base import BaseCommand
from django.core.management.base import CommandError

from fap_planner.exceptions import CertificationError
from fap_planner.exceptions import InfeasibleScenarioError
from fap_planner.exceptions import ScenarioError
from fap_planner.placement.pipeline import Mode
from fap_planner.placement.pipeline import RunSettings
from fap_planner.placement.pipeline import parse_seeds
from fap_planner.placement.pipeline import run_pipeline
from fap_planner.placement.reporting import emit_report
from fap_planner.placement.scenarios import load_scenario
from fap_planner.placement.scenarios import resolve_scenario_path
from fap_planner.radio.mcs import builtin_labels
from fap_planner.radio.mcs import builtin_table

EXIT_CERTIFICATION_FAILED = 1
EXIT_CONFIGURATION = 2
EXIT_INFEASIBLE = 3


class Command(BaseCommand):
    help = "Validate, search, train, evaluate or report on a flying access point scenario."

    def add_arguments(self, parser):
        parser.add_argument("mode", choices=[m.value for m in Mode])
        parser.add_argument("--scenario", required=True, help="Scenario file, or a name in FAP_SCENARIO_DIR.")
        parser.add_argument("--seeds", default="1", help="Seed range such as 1..30, or a list such as 1,2,3.")
        parser.add_argument("--out", default=None, help="Output directory (default FAP_OUTPUT_DIR).")
        parser.add_argument("--trace", action="store_true", help="Write per-step trajectory CSVs.")
        parser.add_argument("--mcs-table", default=None, choices=builtin_labels(), help="Swap the MCS table.")
        parser.add_argument("--dump-points", action="store_true", help="Write oracle_points.csv in oracle mode.")

    def handle(self, *args, **options):
        try:
            scenario = load_scenario(resolve_scenario_path(options["scenario"], settings.FAP_SCENARIO_DIR))
            if options["mcs_table"]:
                scenario = scenario.with_mcs_table(builtin_table(options["mcs_table"]))
            report = run_pipeline(
                scenario,
                options["mode"],
                parse_seeds(options["seeds"]),
                settings=RunSettings.from_django(options["out"]),
                trace=options["trace"],
                dump_points=options["dump_points"],
            )
            written = emit_report(report)
        except InfeasibleScenarioError as exc:
            raise CommandError(str(exc), returncode=EXIT_INFEASIBLE) from exc
        except (ScenarioError, OSError) as exc:
            raise CommandError(str(exc), returncode=EXIT_CONFIGURATION) from exc

        self.stdout.write(f"{report.mode} {scenario.name}: {len(written)} files in {report.run_dir}")
        if report.oracle is not None:
            self.stdout.write(
                f"oracle max nLoS {report.oracle.max_nlos}/{report.oracle.n_ues} at {report.oracle.best.as_tuple()}",
            )
        for outcome in report.outcomes:
            self.stdout.write(f"seed {outcome.seed}: {outcome.chosen.as_tuple()} reward {outcome.reward:.4f}")
        try:
            report.check_certified()
        except CertificationError as exc:
            raise CommandError(str(exc), returncode=EXIT_CERTIFICATION_FAILED) from exc
        if report.certificates:
            self.stdout.write(self.style.SUCCESS(f"certified {report.certified_fraction:.0%} of seeds"))
